#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "gmra/gmra_tree.hpp"
#include "gmra/linalg.hpp"

namespace gmra {

/// Split-policy verdict for one cell.  `split` is the conjunction of the
/// three criteria; `leaf` reports whether the cell currently has no
/// children (only leaves are ever split by ingest).
struct SplitDecision {
  bool split = false;
  bool leaf = false;
  bool count_ok = false;  ///< count >= min_split
  bool mse_ok = false;    ///< running MSE > epsilon
  bool depth_ok = false;  ///< scale < max_depth
};

/// What one ingest (or one buffered batch) did to the tree.
struct IngestReport {
  std::vector<int> point_indices;   ///< cover-tree indices of consumed points
  std::vector<CellId> touched;      ///< cells whose statistics were updated
  std::vector<double> touched_mse;  ///< running MSE of each, after the update
  std::vector<CellId> split_cells;  ///< cells split during this ingest
  std::vector<CellId> new_cells;    ///< cells created (adoption or split)
};

/// One streamed-tree leaf matched against the same cell of a fresh batch
/// rebuild; `max_angle` compares the two planes.
struct MatchedLeaf {
  CellId id;
  long count_stream = 0;
  long count_batch = 0;
  double max_angle = 0.0;
};

struct ComparisonReport {
  double rmse = 0.0;  ///< per-point leaf-projection RMSE, streamed vs batch
  std::vector<MatchedLeaf> leaves;
  int unmatched = 0;  ///< streamed leaves with no batch counterpart
};

/// Basis of a cell as it stood after a given increment.
struct BasisSnapshot {
  std::uint64_t increment = 0;
  Eigen::MatrixXd basis;
};

/// Streaming front end over a GmraTree.
///
/// Each ingest inserts the point into the cover tree, updates the mean /
/// covariance / plane of every cell on the point's membership chain with a
/// rank-1 thin-SVD update, refreshes the affected MSE and wavelet data, and
/// splits any leaf the (epsilon, min_split, max_depth) policy says is due.
/// A buffered variant applies up to kMaxBuffer points per covariance update.
///
/// ingest is single-writer; telemetry reads may run between ingests.
class StreamState {
 public:
  static constexpr int kMaxBuffer = 32;
  static constexpr std::size_t kMaxSnapshots = 256;

  StreamState() = default;

  /// Takes over a batch-constructed tree and snapshots every cell basis at
  /// increment 0.
  explicit StreamState(GmraTree tree);

  /// Batch-construct + wrap, in one step.
  static StreamState init(const std::vector<Eigen::VectorXd>& points,
                          const GmraConfig& config);

  const GmraTree& tree() const { return tree_; }
  GmraTree& tree_mut() { return tree_; }
  std::uint64_t increments_seen() const { return increments_seen_; }

  IngestReport ingest(const Eigen::VectorXd& point);

  /// Consumes 1..kMaxBuffer points; per touched cell the covariance update
  /// is applied as a single rank-m step.  Splits are evaluated once all
  /// points of the buffer have been absorbed.
  IngestReport ingest_buffered(const std::vector<Eigen::VectorXd>& points);

  /// Pure policy check; throws std::invalid_argument for unknown cells.
  SplitDecision evaluate_split(CellId id) const;

  /// Splits a due leaf; throws when evaluate_split says no.
  std::vector<CellId> apply_split(CellId id);

  /// Principal angles between the cell's current plane and its most recent
  /// snapshot at least `window` increments old.  Throws std::invalid_argument
  /// when no such snapshot exists.
  linalg::PrincipalAngles subspace_drift(CellId id,
                                         std::uint64_t window) const;

  /// Rebuilds a batch tree over `points` (must be the streamed points in
  /// insertion order, e.g. tree().covertree().points(); throws otherwise)
  /// with the same config, then compares each point's projection at the
  /// leaf holding it and the planes of matched leaves.
  ComparisonReport rebuild_check(const std::vector<Eigen::VectorXd>& points) const;

  const std::map<CellId, std::vector<BasisSnapshot>>& snapshots() const {
    return snapshots_;
  }

 private:
  void require_ready(const Eigen::VectorXd& point) const;

  /// Membership chain of the freshly inserted point as decorated cells,
  /// adopting cells for cover-tree nodes that appeared under split parents.
  std::vector<CellId> decorated_chain(const std::vector<int>& node_chain,
                                      std::vector<CellId>* adopted);

  /// Re-derives basis / sing_vals from the cell covariance (or re-copies the
  /// parent plane while the cell is too small to carry its own).
  void refresh_basis(CellId id);

  /// Pushes the updated plane into descendants that inherit it.
  void cascade_inherited(CellId id, std::set<CellId>& basis_changed);

  /// Split cascade starting from updated leaves; appends to the report.
  void run_splits(std::vector<CellId> due, IngestReport& report,
                  std::set<CellId>& basis_changed);

  void push_snapshot(CellId id);

  GmraTree tree_;
  std::map<CellId, std::vector<BasisSnapshot>> snapshots_;
  std::uint64_t increments_seen_ = 0;

  friend struct StreamStateSerializer;
};

}  // namespace gmra
