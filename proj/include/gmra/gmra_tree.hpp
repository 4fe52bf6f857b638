#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "gmra/covertree.hpp"
#include "gmra/linalg.hpp"

namespace gmra {

/// Multiscale cell identifier: `scale` counts tree depth from the root
/// (root = 1) and `node` is the cover-tree node whose subtree the cell
/// tracks.  A node of chain depth k owns cell (k, node); cells (s, node)
/// with s > k are self-cells holding just the node's own point and
/// residents (a cell that refines without separating repeats itself one
/// scale down).
struct CellId {
  int scale = 0;
  int node = -1;

  friend bool operator==(const CellId& a, const CellId& b) {
    return a.scale == b.scale && a.node == b.node;
  }
  friend bool operator!=(const CellId& a, const CellId& b) { return !(a == b); }
  friend bool operator<(const CellId& a, const CellId& b) {
    if (a.scale != b.scale) return a.scale < b.scale;
    return a.node < b.node;
  }
};

struct GmraConfig {
  int d = 2;             ///< plane dimension per cell
  double epsilon = 0.1;  ///< split when cell MSE exceeds this
  int min_split = 30;    ///< and the cell has at least this many members
  int max_depth = 12;    ///< hard cap on scale
  int rank_pad = 5;      ///< maintained covariance rank is min(d + rank_pad, D)
  double base = 2.0;     ///< cover-tree expansion base

  /// Streaming keeps raw member coordinates for cells below this size so the
  /// first split can refit children exactly.  The cover tree stores every
  /// coordinate anyway, so splits are always exact; the knob is kept for
  /// compatibility with configs that tune it.
  long buffer_exact_below = 120;

  void validate(int dim) const;  ///< throws std::invalid_argument
};

/// Per-cell data.  `center` is the exact member mean.  `basis` spans the
/// cell's approximation plane: the top-d covariance eigenvectors once the
/// cell has at least d+1 members, the parent's plane before that
/// (`inherited_basis` set).  `running_mse` is the mean squared residual of
/// the members against the cell's top-d covariance plane, computed from the
/// maintained statistics without touching the members.
struct GmraNode {
  CellId id;
  Eigen::VectorXd center;
  Eigen::MatrixXd basis;          ///< D x d, orthonormal
  Eigen::VectorXd sing_vals;      ///< top-d covariance eigenvalues, zero-padded
  Eigen::VectorXd wavelet_const;  ///< zero at the root
  Eigen::MatrixXd wavelet_basis;  ///< D x d' with d' <= d; empty at the root
  long count = 0;
  double running_mse = 0.0;
  std::vector<CellId> children;   ///< sorted; self-cell (if any) first
  bool inherited_basis = false;

  // streaming statistics
  double sum_sq = 0.0;         ///< sum of squared member norms
  linalg::ThinSvd cov;         ///< maintained covariance; rank 0 until count >= 2
};

/// One scale of a wavelet expansion.  The root block stores the scaling
/// coefficients q = basis^T (x - center); every other block stores the
/// in-plane correction p = wavelet_basis^T (delta - wavelet_const) and the
/// parent-plane correction t = parent_basis^T delta, where delta is the
/// difference between this scale's projection and the parent's.
struct WaveletBlock {
  CellId cell;
  Eigen::VectorXd scaling;       ///< root only
  Eigen::VectorXd psi_coeff;     ///< p, size d'
  Eigen::VectorXd parent_coeff;  ///< t, size d
};

struct WaveletCoefficients {
  std::vector<WaveletBlock> blocks;  ///< root first, one per routed scale
  std::uint64_t tree_version = 0;
};

/// Multiscale plane hierarchy over a cover tree.  Construction refines any
/// cell whose member MSE exceeds epsilon while it has at least min_split
/// members and room below max_depth.  All public queries route points by
/// greedy nearest-center descent, so they accept points outside the
/// training set.
class GmraTree {
 public:
  GmraTree() = default;

  static GmraTree batch_construct(const std::vector<Eigen::VectorXd>& points,
                                  const GmraConfig& config);

  const GmraConfig& config() const { return config_; }
  const CoverTree& covertree() const { return covertree_; }
  CoverTree& covertree_mut() { return covertree_; }
  std::uint64_t version() const { return version_; }
  void bump_version() { ++version_; }
  int dim() const { return covertree_.dim(); }
  long point_count() const { return covertree_.size(); }
  int max_scale() const { return max_scale_; }

  bool has_cell(CellId id) const { return cells_.count(id) > 0; }
  const GmraNode& cell(CellId id) const { return cells_.at(id); }
  GmraNode& cell_mut(CellId id) { return cells_.at(id); }
  const std::map<CellId, GmraNode>& cells() const { return cells_; }
  std::vector<CellId> leaf_cells() const;
  std::optional<CellId> parent_of(CellId id) const;

  /// Chain depth of a cover-tree node; the node's natural cell scale.
  int node_depth(int node_id) const;

  /// Point indices belonging to a cell under cover-tree membership.
  std::vector<int> cell_members(CellId id) const;

  /// Cell ids visited by greedy nearest-center descent, root first.
  std::vector<CellId> route(const Eigen::VectorXd& point) const;

  /// Membership path of an already-inserted point: the decorated cells its
  /// cover-tree chain passes through, extended through self-cells.
  std::vector<CellId> membership_path(int point_index) const;

  Eigen::VectorXd project_in_cell(const Eigen::VectorXd& point,
                                  CellId id) const;

  /// Projection at a scale; scales beyond the routed leaf reuse the leaf
  /// plane (an unrefined cell repeats itself).  Throws std::out_of_range
  /// unless 1 <= scale <= max_scale().
  Eigen::VectorXd project(const Eigen::VectorXd& point, int scale) const;

  WaveletCoefficients wavelet_coefficients(const Eigen::VectorXd& point) const;

  /// Inverse of wavelet_coefficients up to the finest routed scale.  Throws
  /// std::invalid_argument when the coefficients came from another tree
  /// version.
  Eigen::VectorXd reconstruct(const WaveletCoefficients& coeffs) const;

  /// Brute-force mean squared residual of `members` against the cell plane.
  double cell_mse(CellId id,
                  const std::vector<Eigen::VectorXd>& members) const;

  /// Mean squared residual of `points` against their routed leaf planes.
  /// Routing descends by nearest centers, which is the right notion for
  /// unseen points; for the tree's own points use training_mse.
  double global_mse(const std::vector<Eigen::VectorXd>& points) const;

  /// Mean squared residual of every contained point against the leaf cell
  /// that holds it.  This is the approximation error of the data seen so
  /// far, independent of how test points would be routed.
  double training_mse() const;

  /// Training-set MSE at a scale under cover-tree membership (not routing);
  /// refining one scale never increases this.
  double membership_mse_at_scale(int scale) const;

  // -- mutation hooks shared with the streaming layer --

  /// Splits a leaf cell into its cover-tree children plus a self-cell, each
  /// fitted exactly from its members; returns the new ids.  Throws when the
  /// cell already has children or sits at max_depth.
  std::vector<CellId> split_cell(CellId id);

  /// Creates the cell for a cover-tree node that appeared under an already
  /// split parent cell; the cell starts empty and inherits the parent plane.
  CellId adopt_node(int node_id);

  /// Rebuilds a cell's statistics and plane exactly from its members.
  void refit_cell(CellId id);

  void refresh_wavelets(CellId id);
  void refresh_mse(CellId id);

 private:
  void init_cell_from_members(CellId id, const std::vector<int>& members);
  void refine_recursively(CellId id);

  GmraConfig config_;
  CoverTree covertree_;
  std::map<CellId, GmraNode> cells_;
  std::uint64_t version_ = 0;
  int max_scale_ = 0;

  friend struct GmraTreeSerializer;
};

}  // namespace gmra
