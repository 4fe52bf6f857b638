#include "gmra/serialize.hpp"

#include <fstream>
#include <stdexcept>

namespace gmra {

namespace {

using nlohmann::json;

json vec_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vec_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (int c = 0; c < m.cols(); ++c)
    for (int r = 0; r < m.rows(); ++r) data.push_back(m(r, c));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd mat_from_json(const json& j) {
  const long rows = j.at("rows").get<long>();
  const long cols = j.at("cols").get<long>();
  const json& data = j.at("data");
  if (static_cast<long>(data.size()) != rows * cols)
    throw std::runtime_error("matrix payload size mismatch");
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (long c = 0; c < cols; ++c)
    for (long r = 0; r < rows; ++r) m(r, c) = data[k++].get<double>();
  return m;
}

json svd_to_json(const linalg::ThinSvd& svd) {
  json out{{"u", mat_to_json(svd.u)},
           {"s", vec_to_json(svd.s)},
           {"max_rank", svd.max_rank},
           {"symmetric", svd.symmetric}};
  if (!svd.symmetric) out["v"] = mat_to_json(svd.v);
  return out;
}

linalg::ThinSvd svd_from_json(const json& j) {
  linalg::ThinSvd svd;
  svd.u = mat_from_json(j.at("u"));
  svd.s = vec_from_json(j.at("s"));
  svd.max_rank = j.at("max_rank").get<int>();
  svd.symmetric = j.at("symmetric").get<bool>();
  svd.v = svd.symmetric ? svd.u : mat_from_json(j.at("v"));
  return svd;
}

json cell_id_to_json(CellId id) { return json::array({id.scale, id.node}); }

CellId cell_id_from_json(const json& j) {
  return CellId{j.at(0).get<int>(), j.at(1).get<int>()};
}

}  // namespace

struct GmraTreeSerializer {
  static json to_json(const GmraTree& tree) {
    json cover{{"base", tree.covertree_.base()},
               {"node_count", tree.covertree_.node_count()},
               {"points", json::array()}};
    for (const auto& p : tree.covertree_.points())
      cover["points"].push_back(vec_to_json(p));

    json cells = json::array();
    for (const auto& [id, cell] : tree.cells_) {
      json kids = json::array();
      for (CellId kid : cell.children) kids.push_back(cell_id_to_json(kid));
      cells.push_back(json{{"id", cell_id_to_json(id)},
                           {"center", vec_to_json(cell.center)},
                           {"basis", mat_to_json(cell.basis)},
                           {"sing_vals", vec_to_json(cell.sing_vals)},
                           {"wavelet_const", vec_to_json(cell.wavelet_const)},
                           {"wavelet_basis", mat_to_json(cell.wavelet_basis)},
                           {"count", cell.count},
                           {"running_mse", cell.running_mse},
                           {"children", kids},
                           {"inherited_basis", cell.inherited_basis},
                           {"sum_sq", cell.sum_sq},
                           {"cov", svd_to_json(cell.cov)}});
    }

    return json{{"config",
                 {{"d", tree.config_.d},
                  {"epsilon", tree.config_.epsilon},
                  {"min_split", tree.config_.min_split},
                  {"max_depth", tree.config_.max_depth},
                  {"rank_pad", tree.config_.rank_pad},
                  {"base", tree.config_.base},
                  {"buffer_exact_below", tree.config_.buffer_exact_below}}},
                {"covertree", cover},
                {"cells", cells},
                {"version", tree.version_},
                {"max_scale", tree.max_scale_}};
  }

  static GmraTree from_json(const json& j) {
    GmraTree tree;
    const json& cfg = j.at("config");
    tree.config_.d = cfg.at("d").get<int>();
    tree.config_.epsilon = cfg.at("epsilon").get<double>();
    tree.config_.min_split = cfg.at("min_split").get<int>();
    tree.config_.max_depth = cfg.at("max_depth").get<int>();
    tree.config_.rank_pad = cfg.at("rank_pad").get<int>();
    tree.config_.base = cfg.at("base").get<double>();
    tree.config_.buffer_exact_below = cfg.at("buffer_exact_below").get<long>();

    const json& cover = j.at("covertree");
    std::vector<Eigen::VectorXd> points;
    points.reserve(cover.at("points").size());
    for (const json& p : cover.at("points")) points.push_back(vec_from_json(p));
    tree.covertree_ = CoverTree::build(points, cover.at("base").get<double>());
    if (tree.covertree_.node_count() != cover.at("node_count").get<int>())
      throw std::runtime_error("checkpoint cover tree does not rebuild identically");

    for (const json& c : j.at("cells")) {
      GmraNode cell;
      cell.id = cell_id_from_json(c.at("id"));
      cell.center = vec_from_json(c.at("center"));
      cell.basis = mat_from_json(c.at("basis"));
      cell.sing_vals = vec_from_json(c.at("sing_vals"));
      cell.wavelet_const = vec_from_json(c.at("wavelet_const"));
      cell.wavelet_basis = mat_from_json(c.at("wavelet_basis"));
      cell.count = c.at("count").get<long>();
      cell.running_mse = c.at("running_mse").get<double>();
      for (const json& kid : c.at("children"))
        cell.children.push_back(cell_id_from_json(kid));
      cell.inherited_basis = c.at("inherited_basis").get<bool>();
      cell.sum_sq = c.at("sum_sq").get<double>();
      cell.cov = svd_from_json(c.at("cov"));
      tree.cells_[cell.id] = std::move(cell);
    }
    tree.version_ = j.at("version").get<std::uint64_t>();
    tree.max_scale_ = j.at("max_scale").get<int>();
    return tree;
  }
};

struct StreamStateSerializer {
  static json to_json(const StreamState& state) {
    json snaps = json::array();
    for (const auto& [id, history] : state.snapshots_) {
      json entries = json::array();
      for (const BasisSnapshot& snap : history)
        entries.push_back(json{{"increment", snap.increment},
                               {"basis", mat_to_json(snap.basis)}});
      snaps.push_back(
          json{{"id", cell_id_to_json(id)}, {"entries", entries}});
    }
    return json{{"format", "gmra-checkpoint"},
                {"format_version", 1},
                {"tree", GmraTreeSerializer::to_json(state.tree_)},
                {"increments_seen", state.increments_seen_},
                {"snapshots", snaps}};
  }

  static StreamState from_json(const json& j) {
    if (j.value("format", "") != "gmra-checkpoint")
      throw std::runtime_error("not a gmra checkpoint");
    if (j.at("format_version").get<int>() != 1)
      throw std::runtime_error("unsupported checkpoint format version");
    StreamState state;
    state.tree_ = GmraTreeSerializer::from_json(j.at("tree"));
    state.increments_seen_ = j.at("increments_seen").get<std::uint64_t>();
    for (const json& s : j.at("snapshots")) {
      const CellId id = cell_id_from_json(s.at("id"));
      auto& history = state.snapshots_[id];
      for (const json& e : s.at("entries"))
        history.push_back({e.at("increment").get<std::uint64_t>(),
                           mat_from_json(e.at("basis"))});
    }
    return state;
  }
};

json tree_to_json(const GmraTree& tree) {
  return GmraTreeSerializer::to_json(tree);
}

GmraTree tree_from_json(const json& j) {
  return GmraTreeSerializer::from_json(j);
}

json state_to_json(const StreamState& state) {
  return StreamStateSerializer::to_json(state);
}

StreamState state_from_json(const json& j) {
  return StreamStateSerializer::from_json(j);
}

void save_checkpoint(const StreamState& state, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << state_to_json(state).dump();
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path);
}

StreamState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return state_from_json(j);
}

}  // namespace gmra
