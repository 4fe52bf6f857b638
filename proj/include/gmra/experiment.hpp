#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gmra/streaming.hpp"
#include "gmra/synth.hpp"

namespace gmra {

/// Metrics captured at one logging checkpoint of a streaming run.
/// `wall_seconds` is the average wall time per increment since the previous
/// checkpoint; it stays out of the CSV exports so identical configs produce
/// byte-identical files.
struct ExperimentRecord {
  long increment = 0;  ///< streamed points so far; 0 is the batch-init row
  double global_mse = 0.0;    ///< training_mse over all points so far
  double max_leaf_mse = 0.0;  ///< worst leaf running MSE
  long leaf_count = 0;
  int max_depth = 0;           ///< finest scale present
  long maxmse_cell_size = 0;   ///< member count of the worst leaf
  double wall_seconds = 0.0;
};

/// Streaming-experiment configuration.  Defaults follow the desk-scale
/// Swiss-roll study: 500 training points, epsilon 0.1, min_split 30, d 2.
struct ExperimentConfig {
  std::string dataset = "swissroll";  ///< swissroll | roll+plane | csv:<path>
  long train_size = 500;
  long stream_size = 4500;
  int d = 2;
  double epsilon = 0.1;
  int min_split = 30;
  int max_depth = 12;
  int repeats = 1;
  std::uint64_t base_seed = 1;
  /// Explicit per-repeat seeds; when empty, repeat i uses base_seed + i.
  std::vector<std::uint64_t> seeds;
  /// roll+plane only: share of the stream drawn from the plane.
  double plane_fraction = 0.2;

  GmraConfig tree_config() const;
  std::vector<std::uint64_t> resolved_seeds() const;
  void validate() const;  ///< throws std::invalid_argument with the bad key
};

/// Flat key=value config file ('#' comments, blank lines ignored).
ExperimentConfig parse_config_file(const std::string& path);

/// Applies one key=value override; throws std::invalid_argument for unknown
/// keys or unparsable values.  Keys match the config-file keys.
void apply_override(ExperimentConfig& config, const std::string& key,
                    const std::string& value);

/// Logging schedule: every increment up to 100, then geometric with ratio
/// 1.3, always ending at stream_size.  Includes the batch-init row 0.
std::vector<long> checkpoint_schedule(long stream_size);

struct DatasetSplit {
  std::vector<Eigen::VectorXd> train;
  std::vector<Eigen::VectorXd> stream;
};

/// Materializes the train/stream split for one repeat.
DatasetSplit make_dataset(const ExperimentConfig& config, std::uint64_t seed);

/// One point per row, D numeric columns, optional header row.
std::vector<Eigen::VectorXd> load_points_csv(const std::string& path);

struct RepeatResult {
  std::uint64_t seed = 0;
  std::vector<ExperimentRecord> records;  ///< one per checkpoint
};

struct ExperimentBundle {
  ExperimentConfig config;
  std::vector<long> checkpoints;
  std::vector<RepeatResult> repeats;
};

/// Batch-fits on the training split, streams the rest, logging at the
/// checkpoint schedule; repeats run in parallel on independent seeds.
ExperimentBundle run_experiment(const ExperimentConfig& config);

/// Runs repeat 0 of the config to completion and compares the streamed tree
/// against a batch tree built on all of its points.
ComparisonReport compare_ground_truth(const ExperimentConfig& config);

// -- export --

/// increment,mse_mean,mse_stderr,max_leaf_mse_mean,leaf_count_min,
/// leaf_count_q1,leaf_count_med,leaf_count_q3,leaf_count_max,depth,
/// maxmse_cell_size -- depth and maxmse_cell_size are medians over repeats,
/// quartiles interpolate linearly.
std::string summary_csv(const ExperimentBundle& bundle);

/// increment,global_mse,max_leaf_mse,leaf_count,max_depth,maxmse_cell_size
std::string repeat_csv(const RepeatResult& repeat);

/// Whole bundle as a JSON document (includes wall clock telemetry).
std::string bundle_json(const ExperimentBundle& bundle);

/// The four figure panels as standalone SVG documents.
std::string mse_svg(const ExperimentBundle& bundle);
std::string leaf_count_svg(const ExperimentBundle& bundle);
std::string depth_svg(const ExperimentBundle& bundle);
std::string cell_size_svg(const ExperimentBundle& bundle);

/// Writes <prefix>_summary.csv + <prefix>_repeatK.csv (format "csv") or
/// <prefix>.json (format "json"), plus the four SVG panels.  Throws
/// std::runtime_error on unwritable paths, std::invalid_argument on an
/// unknown format.
void export_bundle(const ExperimentBundle& bundle, const std::string& prefix,
                   const std::string& format);

}  // namespace gmra
