#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace gmra {

/// Node of the spatial index.  Levels decrease from the root downward and a
/// node conceptually exists at every level at or below its own (the implicit
/// copies are never materialized).  The cell radius at level l is base^l.
struct CoverTreeNode {
  int id = -1;           ///< dense, in creation order; the root is 0
  int level = 0;
  int parent = -1;       ///< -1 for the root
  int point_index = -1;  ///< representative point, index into points()
  std::vector<int> children;   ///< explicit children, ids ascending
  std::vector<int> residents;  ///< co-located or depth-capped point indices
};

/// Result of one insertion.
struct InsertOutcome {
  std::vector<int> chain;    ///< node ids, root first, host last
  std::vector<int> created;  ///< newly created node ids (at most one)
  int point_index = -1;
  int host = -1;             ///< node whose cell received the point
};

/// Cover tree over points in R^D with Euclidean distances.
///
/// Structural invariants (verified by check_invariants):
///   covering:   d(child, parent) <= base^(child.level + 1)
///   separation: d(u, v) > base^min(u.level, v.level) for distinct nodes
///   nesting:    implicit; at any level l the cells of all nodes with
///               node.level >= l partition the inserted points
///
/// Insertion is deterministic: candidate scans keep the nearest node and
/// break distance ties by the lowest node id.  Exact duplicates of an
/// existing node's point and points that would exceed the depth cap are
/// stored as residents instead of creating a node.
class CoverTree {
 public:
  explicit CoverTree(double base = 2.0);

  /// Sequential insertion of all points in order; at least one required.
  static CoverTree build(const std::vector<Eigen::VectorXd>& points,
                         double base = 2.0);

  /// Adds one point.  The first point becomes the root; later points that
  /// fall outside the root radius promote the root level first.  Existing
  /// points never move between cells.
  InsertOutcome insert(const Eigen::VectorXd& point);

  int size() const { return static_cast<int>(points_.size()); }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  bool empty() const { return points_.empty(); }
  int dim() const { return points_.empty() ? 0 : static_cast<int>(points_[0].size()); }
  double base() const { return base_; }
  int root_level() const;
  int min_level() const;

  const CoverTreeNode& node(int id) const { return nodes_.at(id); }
  const Eigen::VectorXd& point(int index) const { return points_.at(index); }
  const std::vector<Eigen::VectorXd>& points() const { return points_; }

  /// Node hosting the point: the node it created, or the resident host.
  int leaf_node_of(int point_index) const { return host_of_point_.at(point_index); }

  /// Node ids from the root down to `node_id` along explicit parent links.
  std::vector<int> chain_to_root(int node_id) const;

  /// Point indices hosted in the subtree rooted at `node_id`, ascending.
  std::vector<int> subtree_points(int node_id) const;

  struct Cell {
    int node = -1;
    std::vector<int> members;  ///< point indices, ascending
  };

  /// Cells at a level: one per node with node.level >= level, holding the
  /// points whose host chain meets that node first.  Throws std::out_of_range
  /// outside [min_level(), root_level()].
  std::vector<Cell> partition_at(int level) const;

  /// Explicit-expansion check of covering / separation / nesting plus link
  /// consistency.  Returns human-readable violations; empty means valid.
  std::vector<std::string> check_invariants() const;

 private:
  InsertOutcome make_resident(int node_id, int point_index);
  int ancestor_at_level(int node_id, int level) const;

  double base_;
  double admission_;  ///< base / (base - 1), scales the candidate radius
  std::vector<Eigen::VectorXd> points_;
  std::vector<CoverTreeNode> nodes_;
  std::vector<int> host_of_point_;
  int min_level_ = 0;
};

}  // namespace gmra
