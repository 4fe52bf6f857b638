#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace gmra::linalg {

/// Truncated singular value decomposition kept in factored form.
///
/// Invariants: u and v have orthonormal columns, s is non-negative and
/// non-increasing, and u.cols() == s.size() == v.cols().  max_rank is the
/// rank the factorization is re-truncated to after incremental updates; the
/// current rank may be smaller while the underlying matrix has low rank.
struct ThinSvd {
  Eigen::MatrixXd u;
  Eigen::VectorXd s;
  Eigen::MatrixXd v;
  int max_rank = 0;
  /// True when this factors a symmetric PSD matrix; v then mirrors u and
  /// updates go through a symmetric eigenproblem instead of a general SVD.
  bool symmetric = false;

  int rank() const { return static_cast<int>(s.size()); }
  int rows() const { return static_cast<int>(u.rows()); }
  int cols() const { return static_cast<int>(v.rows()); }

  /// Dense reconstruction u * diag(s) * v^T.  Intended for small matrices
  /// and tests; the incremental update path never forms this product.
  Eigen::MatrixXd reconstruct() const;
};

/// Rank-`rank` SVD of `mat` with deterministic column signs (the entry of
/// largest magnitude in each left singular vector is made positive).
/// Throws std::invalid_argument for empty/non-finite input or a rank outside
/// [1, min(rows, cols)].
ThinSvd thin_svd(const Eigen::MatrixXd& mat, int rank);

/// Rank-`rank` factorization of a symmetric PSD matrix via its
/// eigendecomposition.  Negative eigenvalues from round-off are clamped to
/// zero.  The result has symmetric == true and v == u.
ThinSvd thin_svd_psd(const Eigen::MatrixXd& mat, int rank);

/// Additive low-rank update: returns a thin SVD of
///   u * diag(s) * v^T + a_cols * b_cols^T
/// without materializing either full matrix.  Residual directions of a_cols
/// (resp. b_cols) outside span(u) (resp. span(v)) with norm below 1e-10 are
/// dropped; the result is re-truncated to svd.max_rank.  When svd.symmetric
/// is set and a_cols == b_cols the update stays on the symmetric path and
/// preserves u == v exactly.
///
/// Cost is O(rows * (r + c)^2 + (r + c)^3) for rank r and c update columns.
ThinSvd brand_update(const ThinSvd& svd, const Eigen::MatrixXd& a_cols,
                     const Eigen::MatrixXd& b_cols);

/// Terms (a, b, bmat) such that the sample covariance after appending the
/// new points equals a * cov + b * bmat * bmat^T.
///
/// n is the current sample count and m the number of appended points; the
/// recorded values let downstream checks recover the counts.
struct CovarianceUpdate {
  double a = 0.0;
  double b = 0.0;
  /// D x 1 for the single-point form, D x (m + 1) for the batch form
  /// (m re-centered points plus one scaled mean-shift column).
  Eigen::MatrixXd bmat;
  long n = 0;
  long m = 0;
};

/// Single appended point: a = (n-1)/n, b = 1/(n+1), bmat = mean - point.
/// Requires n >= 2 so the current covariance exists.
CovarianceUpdate cov_rank1_terms(const Eigen::VectorXd& mean, long n,
                                 const Eigen::VectorXd& point);

/// Batch of m appended points (columns of new_points):
///   a = (n-1)/(n+m-1), b = 1/(n+m-1),
///   bmat = [x_1 - cbar, ..., x_m - cbar, sqrt(nm/(n+m)) * (mean - cbar)]
/// where cbar is the mean of the new points.  Requires n >= 2, m >= 1.
CovarianceUpdate cov_rankm_terms(const Eigen::VectorXd& mean, long n,
                                 const Eigen::MatrixXd& new_points);

/// Exact streaming mean update; returns the new mean and count n + m.
std::pair<Eigen::VectorXd, long> update_mean(const Eigen::VectorXd& mean,
                                             long n,
                                             const Eigen::MatrixXd& new_points);

/// Principal angles between two subspaces given by orthonormal bases.
struct PrincipalAngles {
  Eigen::VectorXd cosines;  ///< non-increasing, in [0, 1]
  Eigen::VectorXd angles;   ///< non-decreasing, in [0, pi/2]

  double max_angle() const {
    return angles.size() == 0 ? 0.0 : angles(angles.size() - 1);
  }
};

/// Cosines are the singular values of u2^T * u1.  Small angles are recovered
/// from the sines (singular values of u1 - u2 u2^T u1) because acos near 1
/// cannot resolve angles below ~1e-8.  Requires u1.cols() <= u2.cols() and
/// both inputs orthonormal to 1e-8 (throws std::invalid_argument otherwise).
PrincipalAngles principal_angles(const Eigen::MatrixXd& u1,
                                 const Eigen::MatrixXd& u2);

/// Effect of truncating the covariance to rank d before an additive update.
///
/// Compares the spectra of  a*C + b*B*B^T  and  a*C_d + b*B*B^T  where C_d
/// is the best rank-d approximation of C.  The per-index singular value gaps
/// are bounded by  a * sigma_{d+1}(C) + b * sigma_1(B)^2.
struct GapBoundReport {
  Eigen::VectorXd observed_gaps;
  double max_gap = 0.0;
  double bound = 0.0;
  bool holds = false;
};

GapBoundReport truncation_gap_bound(const Eigen::MatrixXd& cov, int d,
                                    const CovarianceUpdate& update);

/// Rotation of the top-d eigenspace caused by the same truncation.
///
/// observed = || R~_d R~_d^T - R_d R_d^T ||_2 where R_d / R~_d hold the top-d
/// eigenvectors of the updated full / truncated covariance; this equals
/// sin(theta_max) of the principal angles between the two bases.  The bound
///   2 (n-1) sigma_{d+1}(C) / ((n-1) sigma_d(C) + sigma_1(B)^2)
/// applies under the gap hypothesis
///   a * sigma_{d+1}(C) < (sigma_d(C) + sigma_1(B)^2) / 4.
/// `applicable` records that hypothesis as printed; `applicable_weighted`
/// records the variant with a- and b-weighted denominator terms, since the
/// two normalizations disagree and both are worth reporting.
struct AngleBoundReport {
  double observed = 0.0;
  double bound = 0.0;
  bool applicable = false;
  bool applicable_weighted = false;
  bool holds = false;
  Eigen::MatrixXd basis_full;       ///< top-d eigenvectors of a*C + b*BB^T
  Eigen::MatrixXd basis_truncated;  ///< top-d eigenvectors of a*C_d + b*BB^T
};

AngleBoundReport truncation_angle_bound(const Eigen::MatrixXd& cov, int d,
                                        const CovarianceUpdate& update,
                                        long n);

/// One probe of the truncation error scaling study: discrepancy is
/// || S_d - S~_d ||_2 over the top-d updated singular values, predictor is
/// sigma_{d+1}(C) * ||B||_F^4.
struct ScalingProbeRow {
  double discrepancy = 0.0;
  double predictor = 0.0;
};

/// Randomized covariance/update pair for bound probes.  The covariance has a
/// strong d-dimensional spectrum plus a tail whose scale is drawn
/// log-uniformly; update points are drawn from the covariance's own
/// distribution, which is the regime an incremental tracker sees.
struct CovProbe {
  Eigen::MatrixXd cov;
  CovarianceUpdate update;
  long n = 0;
  int d = 0;
};

CovProbe random_cov_probe(int dim, int d, int m, std::uint64_t seed);

/// `count` probes at dimension `dim` with intrinsic rank `d` and `m` update
/// points per probe; deterministic in `seed`.
std::vector<ScalingProbeRow> truncation_scaling_probe(int count, int dim,
                                                      int d, int m,
                                                      std::uint64_t seed);

/// Spearman rank correlation with average ranks for ties.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace gmra::linalg
