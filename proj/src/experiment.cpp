#include "gmra/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace gmra {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

/// Shortest representation that round-trips a double; deterministic, so
/// identical runs emit identical bytes.
std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  double total = 0.0;
  for (double x : v) total += x;
  return v.empty() ? 0.0 : total / static_cast<double>(v.size());
}

/// Standard error of the mean (sample variance); 0 for fewer than 2 values.
double stderr_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double n = static_cast<double>(v.size());
  return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

/// Linear-interpolation quantile over a copy of `v` (the numpy default).
double quantile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = p * (static_cast<double>(v.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= v.size()) return v.back();
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

long parse_long(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (...) {
    throw std::invalid_argument("bad value for " + key + ": " + value);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (...) {
    throw std::invalid_argument("bad value for " + key + ": " + value);
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (...) {
    throw std::invalid_argument("bad value for " + key + ": " + value);
  }
}

}  // namespace

GmraConfig ExperimentConfig::tree_config() const {
  GmraConfig cfg;
  cfg.d = d;
  cfg.epsilon = epsilon;
  cfg.min_split = min_split;
  cfg.max_depth = max_depth;
  return cfg;
}

std::vector<std::uint64_t> ExperimentConfig::resolved_seeds() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out(static_cast<std::size_t>(repeats));
  for (int i = 0; i < repeats; ++i)
    out[static_cast<std::size_t>(i)] = base_seed + static_cast<std::uint64_t>(i);
  return out;
}

void ExperimentConfig::validate() const {
  require(dataset == "swissroll" || dataset == "roll+plane" ||
              dataset.rfind("csv:", 0) == 0,
          "dataset must be swissroll, roll+plane, or csv:<path>");
  require(train_size >= min_split,
          "train_size must be at least min_split so the batch fit is viable");
  require(stream_size >= 0, "stream_size must be nonnegative");
  require(repeats >= 1, "repeats must be at least 1");
  require(seeds.empty() || static_cast<int>(seeds.size()) == repeats,
          "seeds must be empty or have one entry per repeat");
  require(plane_fraction >= 0.0 && plane_fraction <= 1.0,
          "plane_fraction must lie in [0, 1]");
  tree_config().validate(0);
}

void apply_override(ExperimentConfig& config, const std::string& key,
                    const std::string& value) {
  if (key == "dataset") {
    config.dataset = value;
  } else if (key == "n0") {
    config.train_size = parse_long(key, value);
  } else if (key == "stream") {
    config.stream_size = parse_long(key, value);
  } else if (key == "d") {
    config.d = static_cast<int>(parse_long(key, value));
  } else if (key == "epsilon") {
    config.epsilon = parse_double(key, value);
  } else if (key == "M") {
    config.min_split = static_cast<int>(parse_long(key, value));
  } else if (key == "max_depth") {
    config.max_depth = static_cast<int>(parse_long(key, value));
  } else if (key == "repeats") {
    config.repeats = static_cast<int>(parse_long(key, value));
  } else if (key == "seed") {
    config.base_seed = parse_u64(key, value);
  } else if (key == "plane_fraction") {
    config.plane_fraction = parse_double(key, value);
  } else {
    throw std::invalid_argument("unknown config key: " + key);
  }
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  ExperimentConfig config;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, "config line " + std::to_string(lineno) +
                                         " is not key=value: " + line);
    apply_override(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

std::vector<long> checkpoint_schedule(long stream_size) {
  require(stream_size >= 0, "stream_size must be nonnegative");
  std::vector<long> out = {0};
  for (long i = 1; i <= std::min<long>(stream_size, 100); ++i) out.push_back(i);
  double next = 100.0 * 1.3;
  while (static_cast<long>(std::ceil(next)) < stream_size) {
    const long tick = static_cast<long>(std::ceil(next));
    if (tick > out.back()) out.push_back(tick);
    next *= 1.3;
  }
  if (stream_size > out.back()) out.push_back(stream_size);
  return out;
}

std::vector<Eigen::VectorXd> load_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open points file: " + path);
  std::vector<Eigen::VectorXd> out;
  std::string line;
  int lineno = 0;
  Eigen::Index dim = -1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<double> values;
    bool numeric = true;
    std::stringstream row(line);
    std::string token;
    while (std::getline(row, token, ',')) {
      token = trim(token);
      try {
        std::size_t used = 0;
        values.push_back(std::stod(token, &used));
        if (used != token.size()) numeric = false;
      } catch (...) {
        numeric = false;
      }
      if (!numeric) break;
    }
    if (!numeric) {
      // a single leading header row is tolerated
      if (lineno == 1) continue;
      throw std::runtime_error("points file line " + std::to_string(lineno) +
                               " is not numeric: " + line);
    }
    if (dim < 0) dim = static_cast<Eigen::Index>(values.size());
    if (static_cast<Eigen::Index>(values.size()) != dim)
      throw std::runtime_error("points file line " + std::to_string(lineno) +
                               " has " + std::to_string(values.size()) +
                               " columns, expected " + std::to_string(dim));
    out.push_back(Eigen::Map<const Eigen::VectorXd>(
        values.data(), static_cast<Eigen::Index>(values.size())));
  }
  return out;
}

DatasetSplit make_dataset(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  DatasetSplit split;
  split.train.reserve(static_cast<std::size_t>(config.train_size));
  split.stream.reserve(static_cast<std::size_t>(config.stream_size));

  if (config.dataset == "swissroll") {
    const auto points =
        synth::swiss_roll(config.train_size + config.stream_size, seed);
    for (long i = 0; i < static_cast<long>(points.size()); ++i) {
      auto& side = i < config.train_size ? split.train : split.stream;
      side.emplace_back(points[static_cast<std::size_t>(i)]);
    }
    return split;
  }

  if (config.dataset == "roll+plane") {
    for (const auto& p : synth::swiss_roll(config.train_size, seed))
      split.train.emplace_back(p);
    const long plane_n =
        std::lround(config.plane_fraction * static_cast<double>(config.stream_size));
    const long roll_n = config.stream_size - plane_n;
    std::vector<synth::StreamSource> sources;
    std::vector<double> proportions;
    if (roll_n > 0) {
      sources.push_back(synth::StreamSource::roll(roll_n, seed + 0x9e3779b97f4a7c15ULL));
      proportions.push_back(static_cast<double>(roll_n) /
                            static_cast<double>(config.stream_size));
    }
    if (plane_n > 0) {
      sources.push_back(synth::StreamSource::plane(plane_n, seed + 0x2545f4914f6cdd1dULL));
      proportions.push_back(static_cast<double>(plane_n) /
                            static_cast<double>(config.stream_size));
    }
    if (!sources.empty()) {
      auto mix = synth::StreamSource::interleave(std::move(sources), proportions,
                                                 seed + 0x6a09e667f3bcc909ULL);
      for (const auto& labeled : mix.take(config.stream_size))
        split.stream.emplace_back(labeled.point);
    }
    return split;
  }

  // csv:<path>; the file supplies train then stream in row order
  const auto points = load_points_csv(config.dataset.substr(4));
  const long total = config.train_size + config.stream_size;
  if (static_cast<long>(points.size()) < total)
    throw std::runtime_error("points file has " + std::to_string(points.size()) +
                             " rows, config needs " + std::to_string(total));
  for (long i = 0; i < total; ++i) {
    auto& side = i < config.train_size ? split.train : split.stream;
    side.push_back(points[static_cast<std::size_t>(i)]);
  }
  return split;
}

namespace {

ExperimentRecord observe(const StreamState& state, long increment, double wall) {
  ExperimentRecord rec;
  rec.increment = increment;
  rec.wall_seconds = wall;
  const GmraTree& tree = state.tree();
  rec.global_mse = tree.training_mse();
  rec.max_depth = tree.max_scale();
  const auto leaves = tree.leaf_cells();
  rec.leaf_count = static_cast<long>(leaves.size());
  bool first = true;
  for (const CellId id : leaves) {
    const GmraNode& cell = tree.cell(id);
    if (first || cell.running_mse > rec.max_leaf_mse) {
      rec.max_leaf_mse = cell.running_mse;
      rec.maxmse_cell_size = cell.count;
      first = false;
    }
  }
  return rec;
}

RepeatResult run_repeat(const ExperimentConfig& config, std::uint64_t seed,
                        const std::vector<long>& checkpoints) {
  using clock = std::chrono::steady_clock;
  RepeatResult result;
  result.seed = seed;
  result.records.reserve(checkpoints.size());

  const DatasetSplit data = make_dataset(config, seed);
  const auto t_init = clock::now();
  StreamState state = StreamState::init(data.train, config.tree_config());
  auto t_last = clock::now();
  // row 0 reports the whole batch-fit wall time
  result.records.push_back(
      observe(state, 0, std::chrono::duration<double>(t_last - t_init).count()));

  std::size_t next_checkpoint = 1;  // checkpoints[0] is always 0
  long last_increment = 0;
  for (long i = 1; i <= config.stream_size; ++i) {
    state.ingest(data.stream[static_cast<std::size_t>(i - 1)]);
    if (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] == i) {
      const auto now = clock::now();
      const double per_increment =
          std::chrono::duration<double>(now - t_last).count() /
          static_cast<double>(i - last_increment);
      result.records.push_back(observe(state, i, per_increment));
      t_last = clock::now();  // exclude the metric scan from the next window
      last_increment = i;
      ++next_checkpoint;
    }
  }
  return result;
}

}  // namespace

ExperimentBundle run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentBundle bundle;
  bundle.config = config;
  bundle.checkpoints = checkpoint_schedule(config.stream_size);
  const auto seeds = config.resolved_seeds();
  bundle.repeats.resize(seeds.size());

  // repeats are independent: each worker owns its slot, so results do not
  // depend on scheduling
  std::vector<std::exception_ptr> errors(seeds.size());
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (std::size_t r = cursor.fetch_add(1); r < seeds.size();
         r = cursor.fetch_add(1)) {
      try {
        bundle.repeats[r] = run_repeat(config, seeds[r], bundle.checkpoints);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads =
      std::min(seeds.size(),
               static_cast<std::size_t>(std::max(1u, std::thread::hardware_concurrency())));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);
  return bundle;
}

ComparisonReport compare_ground_truth(const ExperimentConfig& config) {
  config.validate();
  const DatasetSplit data = make_dataset(config, config.resolved_seeds().front());
  StreamState state = StreamState::init(data.train, config.tree_config());
  for (const auto& point : data.stream) state.ingest(point);
  return state.rebuild_check(state.tree().covertree().points());
}

std::string repeat_csv(const RepeatResult& repeat) {
  std::string out = "increment,global_mse,max_leaf_mse,leaf_count,max_depth,maxmse_cell_size\n";
  for (const auto& rec : repeat.records) {
    out += std::to_string(rec.increment);
    out += ',';
    out += fmt(rec.global_mse);
    out += ',';
    out += fmt(rec.max_leaf_mse);
    out += ',';
    out += std::to_string(rec.leaf_count);
    out += ',';
    out += std::to_string(rec.max_depth);
    out += ',';
    out += std::to_string(rec.maxmse_cell_size);
    out += '\n';
  }
  return out;
}

std::string summary_csv(const ExperimentBundle& bundle) {
  std::string out =
      "increment,mse_mean,mse_stderr,max_leaf_mse_mean,leaf_count_min,"
      "leaf_count_q1,leaf_count_med,leaf_count_q3,leaf_count_max,depth,"
      "maxmse_cell_size\n";
  if (bundle.repeats.empty()) return out;
  for (std::size_t i = 0; i < bundle.checkpoints.size(); ++i) {
    std::vector<double> mse, leaf_mse, leaves, depth, cell_size;
    for (const auto& rep : bundle.repeats) {
      const auto& rec = rep.records.at(i);
      mse.push_back(rec.global_mse);
      leaf_mse.push_back(rec.max_leaf_mse);
      leaves.push_back(static_cast<double>(rec.leaf_count));
      depth.push_back(static_cast<double>(rec.max_depth));
      cell_size.push_back(static_cast<double>(rec.maxmse_cell_size));
    }
    out += std::to_string(bundle.checkpoints[i]);
    out += ',';
    out += fmt(mean_of(mse));
    out += ',';
    out += fmt(stderr_of(mse));
    out += ',';
    out += fmt(mean_of(leaf_mse));
    out += ',';
    out += fmt(quantile(leaves, 0.0));
    out += ',';
    out += fmt(quantile(leaves, 0.25));
    out += ',';
    out += fmt(quantile(leaves, 0.5));
    out += ',';
    out += fmt(quantile(leaves, 0.75));
    out += ',';
    out += fmt(quantile(leaves, 1.0));
    out += ',';
    out += fmt(quantile(depth, 0.5));
    out += ',';
    out += fmt(quantile(cell_size, 0.5));
    out += '\n';
  }
  return out;
}

std::string bundle_json(const ExperimentBundle& bundle) {
  nlohmann::json j;
  j["config"] = {{"dataset", bundle.config.dataset},
                 {"n0", bundle.config.train_size},
                 {"stream", bundle.config.stream_size},
                 {"d", bundle.config.d},
                 {"epsilon", bundle.config.epsilon},
                 {"M", bundle.config.min_split},
                 {"max_depth", bundle.config.max_depth},
                 {"repeats", bundle.config.repeats},
                 {"seeds", bundle.config.resolved_seeds()},
                 {"plane_fraction", bundle.config.plane_fraction}};
  j["checkpoints"] = bundle.checkpoints;
  auto& reps = j["repeats"] = nlohmann::json::array();
  for (const auto& rep : bundle.repeats) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& rec : rep.records) {
      records.push_back({{"increment", rec.increment},
                         {"global_mse", rec.global_mse},
                         {"max_leaf_mse", rec.max_leaf_mse},
                         {"leaf_count", rec.leaf_count},
                         {"max_depth", rec.max_depth},
                         {"maxmse_cell_size", rec.maxmse_cell_size},
                         {"wall_seconds", rec.wall_seconds}});
    }
    reps.push_back({{"seed", rep.seed}, {"records", std::move(records)}});
  }
  return j.dump(2) + "\n";
}

namespace {

// -- minimal SVG plotting --
// Fixed 640x400 canvas; x is log10(1 + increment) because the checkpoint
// schedule is geometric.

constexpr double kSvgW = 640.0;
constexpr double kSvgH = 400.0;
constexpr double kMarginL = 70.0;
constexpr double kMarginR = 20.0;
constexpr double kMarginT = 40.0;
constexpr double kMarginB = 50.0;

struct Axis {
  double lo = 0.0;
  double hi = 1.0;

  void widen(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double frac(double v) const {
    return hi > lo ? (v - lo) / (hi - lo) : 0.5;
  }
};

struct Series {
  std::string label;
  std::string color;
  bool dashed = false;
  std::vector<double> x, y;
};

double px(const Axis& ax, double v) {
  return kMarginL + ax.frac(v) * (kSvgW - kMarginL - kMarginR);
}

double py(const Axis& ax, double v) {
  return kSvgH - kMarginB - ax.frac(v) * (kSvgH - kMarginT - kMarginB);
}

double log_x(long increment) { return std::log10(1.0 + static_cast<double>(increment)); }

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

/// Shared chart scaffolding: frame, axis lines, corner range labels, legend.
/// `extra` is injected before the polylines so data draws on top.
std::string svg_panel(const std::string& title, const std::string& x_label,
                      const std::string& y_label, Axis ax, Axis ay,
                      const std::vector<Series>& series,
                      const std::string& extra = "") {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
         "viewBox=\"0 0 640 400\">\n";
  out << "  <rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
  out << "  <text x=\"320\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" "
         "font-family=\"sans-serif\">"
      << svg_escape(title) << "</text>\n";
  // axes
  out << "  <line x1=\"" << kMarginL << "\" y1=\"" << kSvgH - kMarginB
      << "\" x2=\"" << kSvgW - kMarginR << "\" y2=\"" << kSvgH - kMarginB
      << "\" stroke=\"black\"/>\n";
  out << "  <line x1=\"" << kMarginL << "\" y1=\"" << kMarginT << "\" x2=\""
      << kMarginL << "\" y2=\"" << kSvgH - kMarginB << "\" stroke=\"black\"/>\n";
  out << "  <text x=\"" << (kMarginL + kSvgW - kMarginR) / 2 << "\" y=\""
      << kSvgH - 14 << "\" text-anchor=\"middle\" font-size=\"12\" "
         "font-family=\"sans-serif\">"
      << svg_escape(x_label) << "</text>\n";
  out << "  <text x=\"18\" y=\"" << (kMarginT + kSvgH - kMarginB) / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" "
         "transform=\"rotate(-90 18 "
      << (kMarginT + kSvgH - kMarginB) / 2 << ")\">" << svg_escape(y_label)
      << "</text>\n";
  // range labels at the axis ends
  out << "  <text x=\"" << kMarginL << "\" y=\"" << kSvgH - kMarginB + 16
      << "\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\">"
      << fmt(ax.lo) << "</text>\n";
  out << "  <text x=\"" << kSvgW - kMarginR << "\" y=\"" << kSvgH - kMarginB + 16
      << "\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\">"
      << fmt(ax.hi) << "</text>\n";
  out << "  <text x=\"" << kMarginL - 6 << "\" y=\"" << kSvgH - kMarginB
      << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">"
      << fmt(ay.lo) << "</text>\n";
  out << "  <text x=\"" << kMarginL - 6 << "\" y=\"" << kMarginT + 4
      << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">"
      << fmt(ay.hi) << "</text>\n";
  out << extra;
  double legend_y = kMarginT + 6;
  for (const auto& s : series) {
    if (s.x.empty()) continue;
    out << "  <polyline fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"1.5\"";
    if (s.dashed) out << " stroke-dasharray=\"6 4\"";
    out << " points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) out << ' ';
      out << fmt(px(ax, s.x[i])) << ',' << fmt(py(ay, s.y[i]));
    }
    out << "\"/>\n";
    if (!s.label.empty()) {
      out << "  <text x=\"" << kSvgW - kMarginR - 4 << "\" y=\"" << legend_y
          << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\" "
             "fill=\""
          << s.color << "\">" << svg_escape(s.label) << "</text>\n";
      legend_y += 14;
    }
  }
  out << "</svg>\n";
  return out.str();
}

/// Per-checkpoint values of one record field, one inner vector per checkpoint.
template <typename F>
std::vector<std::vector<double>> per_checkpoint(const ExperimentBundle& bundle,
                                                F field) {
  std::vector<std::vector<double>> out(bundle.checkpoints.size());
  for (std::size_t i = 0; i < bundle.checkpoints.size(); ++i)
    for (const auto& rep : bundle.repeats)
      out[i].push_back(field(rep.records.at(i)));
  return out;
}

}  // namespace

std::string mse_svg(const ExperimentBundle& bundle) {
  // log-y with a floor so exactly-planar runs (mse 0) stay plottable
  const auto log_mse = [](double v) { return std::log10(v + 1e-12); };
  Axis ax, ay;
  Series mean_series{"mean global mse", "#1f6fb4", false, {}, {}};
  const auto values = per_checkpoint(
      bundle, [](const ExperimentRecord& r) { return r.global_mse; });
  for (std::size_t i = 0; i < bundle.checkpoints.size(); ++i) {
    const double x = log_x(bundle.checkpoints[i]);
    const double y = log_mse(mean_of(values[i]));
    mean_series.x.push_back(x);
    mean_series.y.push_back(y);
    if (i == 0) {
      ax = {x, x};
      ay = {y, y};
    }
    ax.widen(x);
    ay.widen(y);
  }
  Series threshold{"epsilon", "#c23b22", true, {}, {}};
  if (!bundle.checkpoints.empty()) {
    const double y = log_mse(bundle.config.epsilon);
    threshold.x = {ax.lo, ax.hi};
    threshold.y = {y, y};
    ay.widen(y);
  }
  return svg_panel("Global MSE vs increments", "log10(1 + increment)",
                   "log10(mse + 1e-12)", ax, ay, {mean_series, threshold});
}

std::string leaf_count_svg(const ExperimentBundle& bundle) {
  const auto values = per_checkpoint(
      bundle, [](const ExperimentRecord& r) { return static_cast<double>(r.leaf_count); });
  Axis ax, ay;
  Series med{"median", "#1f6fb4", false, {}, {}};
  Series lo{"min", "#9ecae1", false, {}, {}};
  Series hi{"max", "#9ecae1", false, {}, {}};
  std::vector<std::array<double, 5>> box(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = log_x(bundle.checkpoints[i]);
    box[i] = {quantile(values[i], 0.0), quantile(values[i], 0.25),
              quantile(values[i], 0.5), quantile(values[i], 0.75),
              quantile(values[i], 1.0)};
    med.x.push_back(x);
    med.y.push_back(box[i][2]);
    lo.x.push_back(x);
    lo.y.push_back(box[i][0]);
    hi.x.push_back(x);
    hi.y.push_back(box[i][4]);
    if (i == 0) {
      ax = {x, x};
      ay = {box[i][0], box[i][0]};
    }
    ax.widen(x);
    ay.widen(box[i][0]);
    ay.widen(box[i][4]);
  }
  // literal boxes at up to 12 evenly spaced checkpoints
  std::ostringstream boxes;
  if (!box.empty()) {
    const std::size_t step = std::max<std::size_t>(1, box.size() / 12);
    for (std::size_t i = 0; i < box.size(); i += step) {
      const double cx = px(ax, log_x(bundle.checkpoints[i]));
      boxes << "  <line x1=\"" << fmt(cx) << "\" y1=\"" << fmt(py(ay, box[i][0]))
            << "\" x2=\"" << fmt(cx) << "\" y2=\"" << fmt(py(ay, box[i][4]))
            << "\" stroke=\"#888888\"/>\n";
      boxes << "  <rect x=\"" << fmt(cx - 4) << "\" y=\"" << fmt(py(ay, box[i][3]))
            << "\" width=\"8\" height=\""
            << fmt(std::max(0.5, py(ay, box[i][1]) - py(ay, box[i][3])))
            << "\" fill=\"#c6dbef\" stroke=\"#1f6fb4\"/>\n";
    }
  }
  return svg_panel("Leaf count vs increments", "log10(1 + increment)",
                   "leaf count", ax, ay, {med, lo, hi}, boxes.str());
}

std::string depth_svg(const ExperimentBundle& bundle) {
  const auto values = per_checkpoint(
      bundle, [](const ExperimentRecord& r) { return static_cast<double>(r.max_depth); });
  Axis ax, ay;
  Series med{"median depth", "#1f6fb4", false, {}, {}};
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = log_x(bundle.checkpoints[i]);
    const double y = quantile(values[i], 0.5);
    med.x.push_back(x);
    med.y.push_back(y);
    if (i == 0) {
      ax = {x, x};
      ay = {y, y};
    }
    ax.widen(x);
    ay.widen(quantile(values[i], 0.0));
    ay.widen(quantile(values[i], 1.0));
  }
  return svg_panel("Tree depth vs increments", "log10(1 + increment)",
                   "finest scale", ax, ay, {med});
}

std::string cell_size_svg(const ExperimentBundle& bundle) {
  const auto values = per_checkpoint(bundle, [](const ExperimentRecord& r) {
    return static_cast<double>(r.maxmse_cell_size);
  });
  Axis ax, ay;
  Series med{"worst-cell size", "#1f6fb4", false, {}, {}};
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = log_x(bundle.checkpoints[i]);
    const double y = quantile(values[i], 0.5);
    med.x.push_back(x);
    med.y.push_back(y);
    if (i == 0) {
      ax = {x, x};
      ay = {y, y};
    }
    ax.widen(x);
    ay.widen(y);
  }
  Series threshold{"min_split", "#c23b22", true, {}, {}};
  if (!bundle.checkpoints.empty()) {
    const double y = static_cast<double>(bundle.config.min_split);
    threshold.x = {ax.lo, ax.hi};
    threshold.y = {y, y};
    ay.widen(y);
  }
  return svg_panel("Size of the worst-MSE leaf", "log10(1 + increment)",
                   "member count", ax, ay, {med, threshold});
}

void export_bundle(const ExperimentBundle& bundle, const std::string& prefix,
                   const std::string& format) {
  require(format == "csv" || format == "json", "format must be csv or json");
  const auto write_file = [](const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + path);
  };
  if (format == "csv") {
    write_file(prefix + "_summary.csv", summary_csv(bundle));
    for (std::size_t r = 0; r < bundle.repeats.size(); ++r)
      write_file(prefix + "_repeat" + std::to_string(r) + ".csv",
                 repeat_csv(bundle.repeats[r]));
  } else {
    write_file(prefix + ".json", bundle_json(bundle));
  }
  write_file(prefix + "_mse.svg", mse_svg(bundle));
  write_file(prefix + "_leaves.svg", leaf_count_svg(bundle));
  write_file(prefix + "_depth.svg", depth_svg(bundle));
  write_file(prefix + "_cellsize.svg", cell_size_svg(bundle));
}

}  // namespace gmra
