#include "gmra/covertree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace gmra {

namespace {

// Deeper than any separation structure double precision can express.
constexpr int kMaxDescent = 64;

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace

CoverTree::CoverTree(double base) : base_(base) {
  require(base > 1.0 && std::isfinite(base), "base must be finite and > 1");
  admission_ = base / (base - 1.0);
}

CoverTree CoverTree::build(const std::vector<Eigen::VectorXd>& points,
                           double base) {
  require(!points.empty(), "need at least one point");
  CoverTree tree(base);
  for (const auto& p : points) tree.insert(p);
  return tree;
}

int CoverTree::root_level() const {
  return nodes_.empty() ? 0 : nodes_[0].level;
}

int CoverTree::min_level() const { return nodes_.empty() ? 0 : min_level_; }

InsertOutcome CoverTree::make_resident(int node_id, int point_index) {
  nodes_[node_id].residents.push_back(point_index);
  host_of_point_.push_back(node_id);
  InsertOutcome out;
  out.chain = chain_to_root(node_id);
  out.point_index = point_index;
  out.host = node_id;
  return out;
}

InsertOutcome CoverTree::insert(const Eigen::VectorXd& point) {
  require(point.size() > 0 && point.allFinite(),
          "point must be non-empty and finite");
  if (!points_.empty())
    require(point.size() == points_[0].size(), "point dimension mismatch");

  const int pi = static_cast<int>(points_.size());
  points_.push_back(point);

  if (nodes_.empty()) {
    CoverTreeNode root;
    root.id = 0;
    root.level = 0;
    root.point_index = pi;
    nodes_.push_back(root);
    host_of_point_.push_back(0);
    min_level_ = 0;
    InsertOutcome out;
    out.chain = {0};
    out.created = {0};
    out.point_index = pi;
    out.host = 0;
    return out;
  }

  const double root_dist = (point - points_[nodes_[0].point_index]).norm();
  while (std::pow(base_, nodes_[0].level) < root_dist) ++nodes_[0].level;

  struct Cand {
    int node;
    double dist;
  };
  std::vector<Cand> cands = {{0, root_dist}};
  int level = nodes_[0].level;

  // Lowest level at which a candidate covers the point, with the nearest
  // such candidate; ties go to the lowest node id.
  int best_level = 0;
  int best_node = -1;
  int nearest_node = 0;
  double nearest_dist = root_dist;

  while (true) {
    double dmin = std::numeric_limits<double>::infinity();
    int qmin = -1;
    for (const Cand& c : cands) {
      if (c.dist < dmin || (c.dist == dmin && c.node < qmin)) {
        dmin = c.dist;
        qmin = c.node;
      }
    }
    if (dmin < nearest_dist ||
        (dmin == nearest_dist && qmin < nearest_node)) {
      nearest_dist = dmin;
      nearest_node = qmin;
    }
    if (dmin == 0.0) return make_resident(qmin, pi);
    if (dmin <= std::pow(base_, level)) {
      best_level = level;
      best_node = qmin;
    }
    if (nodes_[0].level - level >= kMaxDescent)
      return make_resident(nearest_node, pi);

    // Candidates for level - 1: surviving implicit copies plus explicit
    // children that become active at that level.  Children of candidates
    // pruned this step must still be scanned; their parent was only required
    // to sit inside the larger level radius.
    const double admit = admission_ * std::pow(base_, level - 1);
    std::vector<Cand> next;
    for (const Cand& c : cands) {
      if (c.dist <= admit) next.push_back(c);
      for (int ch : nodes_[c.node].children) {
        if (nodes_[ch].level != level - 1) continue;
        const double d = (point - points_[nodes_[ch].point_index]).norm();
        if (d <= admit) next.push_back({ch, d});
      }
    }
    if (next.empty()) break;
    cands.swap(next);
    --level;
  }

  // After root promotion the root always covers, so a host exists.
  if (best_node < 0) return make_resident(nearest_node, pi);

  CoverTreeNode fresh;
  fresh.id = static_cast<int>(nodes_.size());
  fresh.level = best_level - 1;
  fresh.parent = best_node;
  fresh.point_index = pi;
  nodes_.push_back(fresh);
  nodes_[best_node].children.push_back(fresh.id);
  host_of_point_.push_back(fresh.id);
  min_level_ = std::min(min_level_, fresh.level);

  InsertOutcome out;
  out.chain = chain_to_root(fresh.id);
  out.created = {fresh.id};
  out.point_index = pi;
  out.host = fresh.id;
  return out;
}

std::vector<int> CoverTree::chain_to_root(int node_id) const {
  std::vector<int> chain;
  for (int id = node_id; id >= 0; id = nodes_.at(id).parent)
    chain.push_back(id);
  std::reverse(chain.begin(), chain.end());
  return chain;
}

std::vector<int> CoverTree::subtree_points(int node_id) const {
  std::vector<int> stack = {node_id};
  std::vector<int> out;
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const CoverTreeNode& n = nodes_.at(id);
    out.push_back(n.point_index);
    out.insert(out.end(), n.residents.begin(), n.residents.end());
    stack.insert(stack.end(), n.children.begin(), n.children.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

int CoverTree::ancestor_at_level(int node_id, int level) const {
  int id = node_id;
  while (nodes_.at(id).level < level) id = nodes_.at(id).parent;
  return id;
}

std::vector<CoverTree::Cell> CoverTree::partition_at(int level) const {
  if (nodes_.empty() || level < min_level_ || level > nodes_[0].level)
    throw std::out_of_range("level outside [min_level, root_level]");

  std::unordered_map<int, std::vector<int>> members;
  for (int pi = 0; pi < size(); ++pi)
    members[ancestor_at_level(host_of_point_[pi], level)].push_back(pi);

  std::vector<Cell> cells;
  cells.reserve(members.size());
  for (auto& [node, pts] : members) cells.push_back({node, std::move(pts)});
  std::sort(cells.begin(), cells.end(),
            [](const Cell& a, const Cell& b) { return a.node < b.node; });
  return cells;
}

std::vector<std::string> CoverTree::check_invariants() const {
  std::vector<std::string> issues;
  if (nodes_.empty()) return issues;
  const auto complain = [&](const std::string& s) { issues.push_back(s); };

  for (const CoverTreeNode& n : nodes_) {
    if (n.parent >= 0) {
      const CoverTreeNode& p = nodes_.at(n.parent);
      if (p.level <= n.level)
        complain("node " + std::to_string(n.id) + " level not below parent");
      const auto& kids = p.children;
      if (std::find(kids.begin(), kids.end(), n.id) == kids.end())
        complain("node " + std::to_string(n.id) + " missing from parent list");
      const double d =
          (points_[n.point_index] - points_[p.point_index]).norm();
      if (d > std::pow(base_, n.level + 1))
        complain("covering violated at node " + std::to_string(n.id));
    } else if (n.id != 0) {
      complain("non-root node " + std::to_string(n.id) + " has no parent");
    }
    for (int ch : n.children)
      if (nodes_.at(ch).parent != n.id)
        complain("child link mismatch at node " + std::to_string(n.id));
  }

  for (std::size_t a = 0; a < nodes_.size(); ++a) {
    for (std::size_t b = a + 1; b < nodes_.size(); ++b) {
      const int lvl = std::min(nodes_[a].level, nodes_[b].level);
      const double d = (points_[nodes_[a].point_index] -
                        points_[nodes_[b].point_index])
                           .norm();
      if (d <= std::pow(base_, lvl))
        complain("separation violated between nodes " + std::to_string(a) +
                 " and " + std::to_string(b));
    }
  }

  // Nesting via explicit expansion: every level partitions the points and
  // refines the partition one level up.
  std::vector<Cell> coarser;
  for (int level = nodes_[0].level; level >= min_level_; --level) {
    const std::vector<Cell> cells = partition_at(level);
    std::vector<char> seen(size(), 0);
    long covered = 0;
    for (const Cell& cell : cells) {
      for (int pi : cell.members) {
        if (seen[pi]) complain("point in two cells at level " +
                               std::to_string(level));
        seen[pi] = 1;
        ++covered;
      }
    }
    if (covered != size())
      complain("partition at level " + std::to_string(level) +
               " misses points");
    if (!coarser.empty()) {
      // each finer cell must be contained in exactly one coarser cell
      std::unordered_map<int, int> coarse_of;
      for (std::size_t ci = 0; ci < coarser.size(); ++ci)
        for (int pi : coarser[ci].members)
          coarse_of[pi] = static_cast<int>(ci);
      for (const Cell& cell : cells) {
        int owner = -2;
        for (int pi : cell.members) {
          const int c = coarse_of.at(pi);
          if (owner == -2) owner = c;
          if (owner != c) {
            complain("cell at level " + std::to_string(level) +
                     " straddles two parents");
            break;
          }
        }
      }
    }
    coarser = cells;
  }
  return issues;
}

}  // namespace gmra
