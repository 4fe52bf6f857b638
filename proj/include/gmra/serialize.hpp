#pragma once

#include <json.hpp>
#include <string>

#include "gmra/gmra_tree.hpp"
#include "gmra/streaming.hpp"

namespace gmra {

/// JSON codecs for trees and stream state.
///
/// Doubles are written with shortest round-trip formatting, so a reloaded
/// checkpoint reproduces projections exactly and a resumed stream makes the
/// same decisions bit for bit.  The cover tree is stored as its point
/// sequence and rebuilt by re-insertion on load (insertion is
/// deterministic); a stored node count guards against drift.

nlohmann::json tree_to_json(const GmraTree& tree);
GmraTree tree_from_json(const nlohmann::json& j);

nlohmann::json state_to_json(const StreamState& state);
StreamState state_from_json(const nlohmann::json& j);

/// Writes/reads a stream checkpoint; throws std::runtime_error on I/O
/// failure or format mismatch.
void save_checkpoint(const StreamState& state, const std::string& path);
StreamState load_checkpoint(const std::string& path);

}  // namespace gmra
