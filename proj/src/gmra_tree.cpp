#include "gmra/gmra_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gmra {

namespace {

// Directions of the child plane sticking out of the parent plane are kept
// when their singular value clears this; below it the direction carries no
// usable signal.
constexpr double kPsiRankTol = 1e-10;

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace

void GmraConfig::validate(int dim) const {
  require(d >= 1, "d must be >= 1");
  require(dim <= 0 || d < dim, "d must be below the ambient dimension");
  require(epsilon > 0.0, "epsilon must be positive");
  require(min_split >= 2, "min_split must be >= 2");
  require(max_depth >= 1, "max_depth must be >= 1");
  require(rank_pad >= 0, "rank_pad must be >= 0");
  require(base > 1.0, "base must be > 1");
  require(buffer_exact_below >= 0, "buffer_exact_below must be >= 0");
}

GmraTree GmraTree::batch_construct(const std::vector<Eigen::VectorXd>& points,
                                   const GmraConfig& config) {
  require(!points.empty(), "need points");
  config.validate(static_cast<int>(points[0].size()));
  require(static_cast<long>(points.size()) >= config.min_split,
          "need at least min_split points");

  GmraTree tree;
  tree.config_ = config;
  tree.covertree_ = CoverTree::build(points, config.base);

  std::vector<int> all(points.size());
  std::iota(all.begin(), all.end(), 0);
  const CellId root{1, 0};
  tree.cells_[root] = GmraNode{};
  tree.init_cell_from_members(root, all);
  tree.max_scale_ = 1;
  tree.refine_recursively(root);

  for (auto& [id, node] : tree.cells_) {
    (void)node;
    tree.refresh_wavelets(id);
  }
  tree.version_ = 1;
  return tree;
}

void GmraTree::refine_recursively(CellId id) {
  const GmraNode& node = cells_.at(id);
  if (node.count < config_.min_split) return;
  if (node.running_mse <= config_.epsilon) return;
  if (id.scale >= config_.max_depth) return;
  for (CellId kid : split_cell(id)) refine_recursively(kid);
}

int GmraTree::node_depth(int node_id) const {
  return static_cast<int>(covertree_.chain_to_root(node_id).size());
}

std::optional<CellId> GmraTree::parent_of(CellId id) const {
  if (id.scale <= 1) return std::nullopt;
  if (id.scale > node_depth(id.node)) return CellId{id.scale - 1, id.node};
  return CellId{id.scale - 1, covertree_.node(id.node).parent};
}

std::vector<int> GmraTree::cell_members(CellId id) const {
  const int depth = node_depth(id.node);
  if (id.scale == depth) return covertree_.subtree_points(id.node);
  const CoverTreeNode& n = covertree_.node(id.node);
  std::vector<int> out = {n.point_index};
  out.insert(out.end(), n.residents.begin(), n.residents.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<CellId> GmraTree::leaf_cells() const {
  std::vector<CellId> out;
  for (const auto& [id, node] : cells_)
    if (node.children.empty()) out.push_back(id);
  return out;
}

void GmraTree::init_cell_from_members(CellId id,
                                      const std::vector<int>& members) {
  GmraNode& node = cells_.at(id);
  node.id = id;
  const int dim = covertree_.dim();
  const long n = static_cast<long>(members.size());
  require(n >= 1, "cell must have members");
  node.count = n;

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  double sum_sq = 0.0;
  for (int pi : members) {
    const Eigen::VectorXd& x = covertree_.point(pi);
    mean += x;
    sum_sq += x.squaredNorm();
  }
  mean /= static_cast<double>(n);
  node.center = mean;
  node.sum_sq = sum_sq;

  if (n >= 2) {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
    for (int pi : members) {
      const Eigen::VectorXd c = covertree_.point(pi) - mean;
      cov += c * c.transpose();
    }
    cov /= static_cast<double>(n - 1);
    const int r = std::min(config_.d + config_.rank_pad, dim);
    node.cov = linalg::thin_svd_psd(cov, r);
  } else {
    node.cov = linalg::ThinSvd{};
  }

  const auto parent = parent_of(id);
  if (!parent || n >= config_.d + 1) {
    node.basis = node.cov.u.leftCols(config_.d);
    node.inherited_basis = false;
  } else {
    node.basis = cells_.at(*parent).basis;
    node.inherited_basis = true;
  }

  node.sing_vals = Eigen::VectorXd::Zero(config_.d);
  const int have = std::min<int>(config_.d, node.cov.rank());
  for (int i = 0; i < have; ++i) node.sing_vals(i) = node.cov.s(i);
  refresh_mse(id);
}

void GmraTree::refresh_mse(CellId id) {
  GmraNode& node = cells_.at(id);
  if (node.count <= 1) {
    node.running_mse = 0.0;
    return;
  }
  const double scatter =
      node.sum_sq - static_cast<double>(node.count) * node.center.squaredNorm();
  double top = 0.0;
  const int have = std::min<int>(config_.d, node.cov.rank());
  for (int i = 0; i < have; ++i) top += node.cov.s(i);
  const double mse =
      (scatter - static_cast<double>(node.count - 1) * top) /
      static_cast<double>(node.count);
  node.running_mse = std::max(0.0, mse);
}

void GmraTree::refresh_wavelets(CellId id) {
  GmraNode& node = cells_.at(id);
  const int dim = covertree_.dim();
  const auto parent = parent_of(id);
  if (!parent) {
    node.wavelet_const = Eigen::VectorXd::Zero(dim);
    node.wavelet_basis = Eigen::MatrixXd(dim, 0);
    return;
  }
  const GmraNode& par = cells_.at(*parent);
  const Eigen::VectorXd shift = node.center - par.center;
  node.wavelet_const = shift - par.basis * (par.basis.transpose() * shift);

  const Eigen::MatrixXd sticking_out =
      node.basis - par.basis * (par.basis.transpose() * node.basis);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sticking_out, Eigen::ComputeThinU);
  int keep = 0;
  while (keep < svd.singularValues().size() &&
         svd.singularValues()(keep) >= kPsiRankTol)
    ++keep;
  node.wavelet_basis = svd.matrixU().leftCols(keep);
}

std::vector<CellId> GmraTree::split_cell(CellId id) {
  GmraNode& node = cells_.at(id);
  require(node.children.empty(), "cell already has children");
  require(id.scale < config_.max_depth, "cell is at max depth");

  const int depth = node_depth(id.node);
  std::vector<CellId> kids;
  kids.push_back({id.scale + 1, id.node});  // self-cell
  if (id.scale == depth)
    for (int ch : covertree_.node(id.node).children)
      kids.push_back({id.scale + 1, ch});

  for (CellId kid : kids) {
    cells_[kid] = GmraNode{};
    init_cell_from_members(kid, cell_members(kid));
  }
  node.children = kids;
  max_scale_ = std::max(max_scale_, id.scale + 1);
  for (CellId kid : kids) refresh_wavelets(kid);
  bump_version();
  return kids;
}

CellId GmraTree::adopt_node(int node_id) {
  const int depth = node_depth(node_id);
  const CellId id{depth, node_id};
  require(!has_cell(id), "cell already exists");
  const auto parent = parent_of(id);
  require(parent.has_value() && has_cell(*parent), "parent cell missing");
  GmraNode& par = cells_.at(*parent);
  require(!par.children.empty(), "parent cell is not split");

  GmraNode fresh;
  fresh.id = id;
  fresh.center = Eigen::VectorXd::Zero(covertree_.dim());
  fresh.basis = par.basis;
  fresh.inherited_basis = true;
  fresh.sing_vals = Eigen::VectorXd::Zero(config_.d);
  cells_[id] = std::move(fresh);

  auto& kids = par.children;
  kids.insert(std::upper_bound(kids.begin(), kids.end(), id), id);
  max_scale_ = std::max(max_scale_, depth);
  refresh_wavelets(id);
  bump_version();
  return id;
}

void GmraTree::refit_cell(CellId id) {
  init_cell_from_members(id, cell_members(id));
}

std::vector<CellId> GmraTree::route(const Eigen::VectorXd& point) const {
  require(!cells_.empty(), "tree is not constructed");
  require(point.size() == dim(), "point dimension mismatch");
  std::vector<CellId> path = {CellId{1, 0}};
  while (true) {
    const GmraNode& cur = cells_.at(path.back());
    if (cur.children.empty()) break;
    double best = std::numeric_limits<double>::infinity();
    CellId next{};
    bool found = false;
    for (CellId kid : cur.children) {
      const GmraNode& child = cells_.at(kid);
      if (child.count == 0) continue;  // just adopted, not yet populated
      const double dist = (point - child.center).norm();
      if (dist < best) {
        best = dist;
        next = kid;
        found = true;
      }
    }
    if (!found) break;
    path.push_back(next);
  }
  return path;
}

std::vector<CellId> GmraTree::membership_path(int point_index) const {
  const std::vector<int> chain =
      covertree_.chain_to_root(covertree_.leaf_node_of(point_index));
  std::vector<CellId> path = {CellId{1, chain[0]}};
  while (!cells_.at(path.back()).children.empty()) {
    const int scale = path.back().scale;
    const int next_node = scale < static_cast<int>(chain.size())
                              ? chain[scale]
                              : chain.back();
    path.push_back(CellId{scale + 1, next_node});
  }
  return path;
}

Eigen::VectorXd GmraTree::project_in_cell(const Eigen::VectorXd& point,
                                          CellId id) const {
  const GmraNode& node = cells_.at(id);
  const Eigen::VectorXd centered = point - node.center;
  return node.center + node.basis * (node.basis.transpose() * centered);
}

Eigen::VectorXd GmraTree::project(const Eigen::VectorXd& point,
                                 int scale) const {
  if (scale < 1 || scale > max_scale_)
    throw std::out_of_range("scale outside [1, max_scale]");
  const std::vector<CellId> path = route(point);
  const std::size_t idx =
      std::min<std::size_t>(static_cast<std::size_t>(scale), path.size()) - 1;
  return project_in_cell(point, path[idx]);
}

WaveletCoefficients GmraTree::wavelet_coefficients(
    const Eigen::VectorXd& point) const {
  const std::vector<CellId> path = route(point);
  WaveletCoefficients out;
  out.tree_version = version_;
  Eigen::VectorXd prev;
  for (std::size_t k = 0; k < path.size(); ++k) {
    const GmraNode& node = cells_.at(path[k]);
    const Eigen::VectorXd proj = project_in_cell(point, path[k]);
    WaveletBlock blk;
    blk.cell = path[k];
    if (k == 0) {
      blk.scaling = node.basis.transpose() * (point - node.center);
    } else {
      const GmraNode& par = cells_.at(path[k - 1]);
      const Eigen::VectorXd delta = proj - prev;
      if (node.wavelet_basis.cols() > 0)
        blk.psi_coeff =
            node.wavelet_basis.transpose() * (delta - node.wavelet_const);
      blk.parent_coeff = par.basis.transpose() * delta;
    }
    prev = proj;
    out.blocks.push_back(std::move(blk));
  }
  return out;
}

Eigen::VectorXd GmraTree::reconstruct(const WaveletCoefficients& coeffs) const {
  require(coeffs.tree_version == version_,
          "coefficients were produced by a different tree version");
  require(!coeffs.blocks.empty(), "no coefficient blocks");
  require(coeffs.blocks[0].cell == CellId{1, 0},
          "coefficients must start at the root");

  const GmraNode& root = cells_.at(coeffs.blocks[0].cell);
  Eigen::VectorXd x = root.center + root.basis * coeffs.blocks[0].scaling;
  for (std::size_t k = 1; k < coeffs.blocks.size(); ++k) {
    const WaveletBlock& blk = coeffs.blocks[k];
    const auto parent = parent_of(blk.cell);
    require(parent.has_value() && *parent == coeffs.blocks[k - 1].cell,
            "coefficient blocks do not form a root-to-leaf chain");
    const GmraNode& node = cells_.at(blk.cell);
    const GmraNode& par = cells_.at(*parent);
    x += node.wavelet_const;
    if (blk.psi_coeff.size() > 0) x += node.wavelet_basis * blk.psi_coeff;
    if (blk.parent_coeff.size() > 0) x += par.basis * blk.parent_coeff;
  }
  return x;
}

double GmraTree::cell_mse(CellId id,
                          const std::vector<Eigen::VectorXd>& members) const {
  require(!members.empty(), "cell MSE of an empty member set");
  double total = 0.0;
  for (const auto& x : members)
    total += (x - project_in_cell(x, id)).squaredNorm();
  return total / static_cast<double>(members.size());
}

double GmraTree::global_mse(const std::vector<Eigen::VectorXd>& points) const {
  require(!points.empty(), "global MSE of an empty point set");
  double total = 0.0;
  for (const auto& x : points) {
    const std::vector<CellId> path = route(x);
    total += (x - project_in_cell(x, path.back())).squaredNorm();
  }
  return total / static_cast<double>(points.size());
}

double GmraTree::training_mse() const {
  double total = 0.0;
  for (int pi = 0; pi < covertree_.size(); ++pi) {
    const Eigen::VectorXd& x = covertree_.point(pi);
    total += (x - project_in_cell(x, membership_path(pi).back())).squaredNorm();
  }
  return total / static_cast<double>(covertree_.size());
}

double GmraTree::membership_mse_at_scale(int scale) const {
  if (scale < 1 || scale > max_scale_)
    throw std::out_of_range("scale outside [1, max_scale]");
  double total = 0.0;
  for (int pi = 0; pi < covertree_.size(); ++pi) {
    const std::vector<CellId> path = membership_path(pi);
    const std::size_t idx =
        std::min<std::size_t>(static_cast<std::size_t>(scale), path.size()) - 1;
    const Eigen::VectorXd& x = covertree_.point(pi);
    total += (x - project_in_cell(x, path[idx])).squaredNorm();
  }
  return total / static_cast<double>(covertree_.size());
}

}  // namespace gmra
