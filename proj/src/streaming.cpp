#include "gmra/streaming.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gmra {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace

StreamState::StreamState(GmraTree tree) : tree_(std::move(tree)) {
  for (const auto& [id, cell] : tree_.cells()) {
    (void)cell;
    push_snapshot(id);
  }
}

StreamState StreamState::init(const std::vector<Eigen::VectorXd>& points,
                              const GmraConfig& config) {
  return StreamState(GmraTree::batch_construct(points, config));
}

void StreamState::require_ready(const Eigen::VectorXd& point) const {
  require(!tree_.cells().empty(), "stream state is not initialized");
  require(point.size() == tree_.dim(), "point dimension mismatch");
}

void StreamState::push_snapshot(CellId id) {
  auto& history = snapshots_[id];
  history.push_back({increments_seen_, tree_.cell(id).basis});
  // keep the oldest entry so long windows stay answerable
  if (history.size() > kMaxSnapshots) history.erase(history.begin() + 1);
}

std::vector<CellId> StreamState::decorated_chain(
    const std::vector<int>& node_chain, std::vector<CellId>* adopted) {
  std::vector<CellId> path = {CellId{1, node_chain.front()}};
  while (true) {
    const GmraNode& cur = tree_.cell(path.back());
    if (cur.children.empty()) break;
    const int scale = path.back().scale;
    const int next_node = scale < static_cast<int>(node_chain.size())
                              ? node_chain[scale]
                              : node_chain.back();
    const CellId next{scale + 1, next_node};
    if (!tree_.has_cell(next)) {
      // a cover-tree node that appeared below an already split cell
      const CellId made = tree_.adopt_node(next_node);
      require(made == next, "adopted cell mismatch");
      if (adopted) adopted->push_back(made);
    }
    path.push_back(next);
  }
  return path;
}

void StreamState::refresh_basis(CellId id) {
  GmraNode& cell = tree_.cell_mut(id);
  const int d = tree_.config().d;
  const auto parent = tree_.parent_of(id);
  if (cell.count >= d + 1 || !parent) {
    cell.basis = cell.cov.u.leftCols(d);
    cell.inherited_basis = false;
  } else {
    cell.basis = tree_.cell(*parent).basis;
    cell.inherited_basis = true;
  }
  cell.sing_vals = Eigen::VectorXd::Zero(d);
  const int have = std::min<int>(d, cell.cov.rank());
  for (int i = 0; i < have; ++i) cell.sing_vals(i) = cell.cov.s(i);
}

void StreamState::cascade_inherited(CellId id, std::set<CellId>& basis_changed) {
  const GmraNode& cell = tree_.cell(id);
  for (CellId kid : cell.children) {
    GmraNode& child = tree_.cell_mut(kid);
    if (!child.inherited_basis) continue;
    child.basis = cell.basis;
    basis_changed.insert(kid);
    cascade_inherited(kid, basis_changed);
  }
}

SplitDecision StreamState::evaluate_split(CellId id) const {
  require(tree_.has_cell(id), "unknown cell");
  const GmraNode& cell = tree_.cell(id);
  const GmraConfig& cfg = tree_.config();
  SplitDecision dec;
  dec.leaf = cell.children.empty();
  dec.count_ok = cell.count >= cfg.min_split;
  dec.mse_ok = cell.running_mse > cfg.epsilon;
  dec.depth_ok = id.scale < cfg.max_depth;
  dec.split = dec.count_ok && dec.mse_ok && dec.depth_ok;
  return dec;
}

std::vector<CellId> StreamState::apply_split(CellId id) {
  const SplitDecision dec = evaluate_split(id);
  require(dec.split && dec.leaf, "split is not due for this cell");
  const std::vector<CellId> kids = tree_.split_cell(id);
  for (CellId kid : kids) push_snapshot(kid);
  return kids;
}

void StreamState::run_splits(std::vector<CellId> due, IngestReport& report,
                             std::set<CellId>& basis_changed) {
  for (std::size_t head = 0; head < due.size(); ++head) {
    const CellId id = due[head];
    const SplitDecision dec = evaluate_split(id);
    if (!dec.split || !dec.leaf) continue;
    const std::vector<CellId> kids = tree_.split_cell(id);
    report.split_cells.push_back(id);
    for (CellId kid : kids) {
      report.new_cells.push_back(kid);
      basis_changed.insert(kid);
      due.push_back(kid);
    }
  }
}

IngestReport StreamState::ingest(const Eigen::VectorXd& point) {
  require_ready(point);
  IngestReport report;

  const InsertOutcome outcome = tree_.covertree_mut().insert(point);
  ++increments_seen_;
  report.point_indices.push_back(outcome.point_index);

  const std::vector<CellId> chain =
      decorated_chain(outcome.chain, &report.new_cells);
  report.touched = chain;

  std::set<CellId> basis_changed(chain.begin(), chain.end());
  for (CellId id : chain) {
    GmraNode& cell = tree_.cell_mut(id);
    if (cell.count <= 1) {
      // the cover tree already holds the point, so an exact refit covers
      // both the just-adopted cell and the 1 -> 2 transition
      tree_.refit_cell(id);
    } else {
      const linalg::CovarianceUpdate up =
          linalg::cov_rank1_terms(cell.center, cell.count, point);
      cell.cov.s *= up.a;
      const Eigen::MatrixXd col = std::sqrt(up.b) * up.bmat;
      cell.cov = linalg::brand_update(cell.cov, col, col);
      auto [mean, n] = linalg::update_mean(cell.center, cell.count, point);
      cell.center = std::move(mean);
      cell.count = n;
      cell.sum_sq += point.squaredNorm();
    }
    refresh_basis(id);
    tree_.refresh_mse(id);
    cascade_inherited(id, basis_changed);
  }

  run_splits({chain.back()}, report, basis_changed);

  std::set<CellId> wavelets;
  for (CellId id : basis_changed) {
    wavelets.insert(id);
    for (CellId kid : tree_.cell(id).children) wavelets.insert(kid);
  }
  for (CellId id : wavelets) tree_.refresh_wavelets(id);

  for (CellId id : basis_changed) push_snapshot(id);
  for (CellId id : chain)
    report.touched_mse.push_back(tree_.cell(id).running_mse);
  tree_.bump_version();
  return report;
}

IngestReport StreamState::ingest_buffered(
    const std::vector<Eigen::VectorXd>& points) {
  require(!points.empty(), "empty buffer");
  require(static_cast<int>(points.size()) <= kMaxBuffer,
          "buffered ingest is limited to kMaxBuffer points");
  for (const auto& x : points) require_ready(x);
  IngestReport report;

  // insert everything first, grouping the new arrivals by touched cell
  std::map<CellId, std::vector<int>> arrivals;
  std::set<CellId> chain_leaves;
  for (const auto& x : points) {
    const InsertOutcome outcome = tree_.covertree_mut().insert(x);
    ++increments_seen_;
    report.point_indices.push_back(outcome.point_index);
    const std::vector<CellId> chain =
        decorated_chain(outcome.chain, &report.new_cells);
    for (CellId id : chain) arrivals[id].push_back(outcome.point_index);
    chain_leaves.insert(chain.back());
  }

  std::set<CellId> basis_changed;
  for (const auto& [id, idxs] : arrivals) {
    report.touched.push_back(id);
    basis_changed.insert(id);
    GmraNode& cell = tree_.cell_mut(id);
    const long m = static_cast<long>(idxs.size());
    if (cell.count <= 1) {
      tree_.refit_cell(id);
    } else {
      Eigen::MatrixXd batch(tree_.dim(), m);
      double added_sq = 0.0;
      for (long j = 0; j < m; ++j) {
        batch.col(j) = tree_.covertree().point(idxs[j]);
        added_sq += batch.col(j).squaredNorm();
      }
      const linalg::CovarianceUpdate up =
          linalg::cov_rankm_terms(cell.center, cell.count, batch);
      cell.cov.s *= up.a;
      const Eigen::MatrixXd cols = std::sqrt(up.b) * up.bmat;
      cell.cov = linalg::brand_update(cell.cov, cols, cols);
      auto [mean, n] = linalg::update_mean(cell.center, cell.count, batch);
      cell.center = std::move(mean);
      cell.count = n;
      cell.sum_sq += added_sq;
    }
    refresh_basis(id);
    tree_.refresh_mse(id);
    cascade_inherited(id, basis_changed);
  }

  run_splits({chain_leaves.begin(), chain_leaves.end()}, report,
             basis_changed);

  std::set<CellId> wavelets;
  for (CellId id : basis_changed) {
    wavelets.insert(id);
    for (CellId kid : tree_.cell(id).children) wavelets.insert(kid);
  }
  for (CellId id : wavelets) tree_.refresh_wavelets(id);

  for (CellId id : basis_changed) push_snapshot(id);
  for (CellId id : report.touched)
    report.touched_mse.push_back(tree_.cell(id).running_mse);
  tree_.bump_version();
  return report;
}

linalg::PrincipalAngles StreamState::subspace_drift(
    CellId id, std::uint64_t window) const {
  require(tree_.has_cell(id), "unknown cell");
  const auto it = snapshots_.find(id);
  require(it != snapshots_.end() && !it->second.empty(),
          "cell has no basis snapshot");
  const BasisSnapshot* best = nullptr;
  for (const BasisSnapshot& snap : it->second) {
    if (increments_seen_ - snap.increment < window) break;  // too recent
    best = &snap;
  }
  require(best != nullptr, "no snapshot at least `window` increments old");
  return linalg::principal_angles(best->basis, tree_.cell(id).basis);
}

ComparisonReport StreamState::rebuild_check(
    const std::vector<Eigen::VectorXd>& points) const {
  const auto& own = tree_.covertree().points();
  if (points.size() != own.size())
    throw std::invalid_argument(
        "rebuild_check expects the tree's own points in insertion order");
  for (std::size_t i = 0; i < points.size(); ++i)
    if (points[i] != own[i])
      throw std::invalid_argument(
          "rebuild_check expects the tree's own points in insertion order");

  const GmraTree batch = GmraTree::batch_construct(points, tree_.config());
  ComparisonReport report;

  // both trees contain every point, so each side projects at the leaf cell
  // that holds the point rather than re-routing by nearest centers
  double total = 0.0;
  for (int pi = 0; pi < static_cast<int>(points.size()); ++pi) {
    const Eigen::VectorXd& x = points[static_cast<std::size_t>(pi)];
    const Eigen::VectorXd mine =
        tree_.project_in_cell(x, tree_.membership_path(pi).back());
    const Eigen::VectorXd theirs =
        batch.project_in_cell(x, batch.membership_path(pi).back());
    total += (mine - theirs).squaredNorm();
  }
  report.rmse = std::sqrt(total / static_cast<double>(points.size()));

  for (CellId id : tree_.leaf_cells()) {
    if (!batch.has_cell(id)) {
      ++report.unmatched;
      continue;
    }
    MatchedLeaf leaf;
    leaf.id = id;
    leaf.count_stream = tree_.cell(id).count;
    leaf.count_batch = batch.cell(id).count;
    leaf.max_angle =
        linalg::principal_angles(tree_.cell(id).basis, batch.cell(id).basis)
            .max_angle();
    report.leaves.push_back(leaf);
  }
  return report;
}

}  // namespace gmra
