#include "gmra/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gmra::linalg {

namespace {

constexpr double kResidualDropTol = 1e-10;
constexpr double kOrthoDriftTol = 1e-9;

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

void require_finite(const Eigen::MatrixXd& m, const char* name) {
  require(m.allFinite(), std::string(name) + " contains non-finite values");
}

/// First index of the entry with strictly largest magnitude (ties keep the
/// lowest index, which keeps the sign convention deterministic).
int argmax_abs(const Eigen::VectorXd& v) {
  int best = 0;
  double mag = std::abs(v(0));
  for (int i = 1; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    if (a > mag) {
      mag = a;
      best = i;
    }
  }
  return best;
}

/// Flips column signs so the largest-magnitude entry of each u column is
/// positive; the matching v column is flipped too so the product u s v^T is
/// unchanged.
void fix_column_signs(Eigen::MatrixXd& u, Eigen::MatrixXd& v) {
  for (int j = 0; j < u.cols(); ++j) {
    if (u.rows() == 0) continue;
    if (u(argmax_abs(u.col(j)), j) < 0.0) {
      u.col(j) = -u.col(j);
      if (j < v.cols()) v.col(j) = -v.col(j);
    }
  }
}

/// Eigendecomposition of a symmetric matrix with eigenvalues descending.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> sym_eig_desc(
    const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("symmetric eigendecomposition failed");
  const int n = static_cast<int>(m.rows());
  Eigen::VectorXd vals(n);
  Eigen::MatrixXd vecs(n, n);
  for (int i = 0; i < n; ++i) {
    vals(i) = es.eigenvalues()(n - 1 - i);
    vecs.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return {vals, vecs};
}

/// Orthonormal basis of the columns of x that fall outside span(u0), built
/// with modified Gram-Schmidt and a second re-projection pass.  Columns whose
/// residual norm ends up below `tol` are dropped.
Eigen::MatrixXd residual_basis(const Eigen::MatrixXd& u0,
                               const Eigen::MatrixXd& x, double tol) {
  const int rows = static_cast<int>(x.rows());
  Eigen::MatrixXd basis(rows, x.cols());
  int kept = 0;
  for (int j = 0; j < x.cols(); ++j) {
    Eigen::VectorXd v = x.col(j);
    for (int pass = 0; pass < 2; ++pass) {
      if (u0.cols() > 0) v -= u0 * (u0.transpose() * v);
      if (kept > 0)
        v -= basis.leftCols(kept) * (basis.leftCols(kept).transpose() * v);
    }
    const double norm = v.norm();
    if (norm >= tol) basis.col(kept++) = v / norm;
  }
  return basis.leftCols(kept);
}

struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  long uniform_int(long lo, long hi) {
    return lo + static_cast<long>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  double gauss() {
    // Box-Muller; fresh pair every call keeps the stream position predictable.
    const double u1 = std::max(u01(), 1e-300);
    const double u2 = u01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Eigen::VectorXd gauss_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = gauss();
    return v;
  }

  Eigen::MatrixXd gauss_matrix(int r, int c) {
    Eigen::MatrixXd m(r, c);
    for (int j = 0; j < c; ++j) m.col(j) = gauss_vector(r);
    return m;
  }
};

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

void require_square_symmetric(const Eigen::MatrixXd& cov) {
  require(cov.rows() == cov.cols() && cov.rows() > 0,
          "covariance must be square and non-empty");
  require_finite(cov, "covariance");
  const double scale = 1.0 + cov.cwiseAbs().maxCoeff();
  require((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * scale,
          "covariance must be symmetric");
}

double largest_singular_value(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  // sqrt of the top eigenvalue of the small Gram matrix
  const Eigen::MatrixXd gram = m.cols() <= m.rows()
                                   ? Eigen::MatrixXd(m.transpose() * m)
                                   : Eigen::MatrixXd(m * m.transpose());
  auto [vals, vecs] = sym_eig_desc(gram);
  (void)vecs;
  return std::sqrt(std::max(vals(0), 0.0));
}

/// Shared setup for the truncation bound checks: spectra of the full and
/// rank-d-truncated covariance updates.
struct TruncationPair {
  Eigen::VectorXd cov_vals;   // eigenvalues of C, descending
  Eigen::MatrixXd full;       // a*C + b*BB^T
  Eigen::MatrixXd truncated;  // a*C_d + b*BB^T
  double sigma_d = 0.0;       // sigma_d(C)
  double sigma_d1 = 0.0;      // sigma_{d+1}(C), zero when d == D
  double sigma1_b = 0.0;      // largest singular value of B
};

TruncationPair make_truncation_pair(const Eigen::MatrixXd& cov, int d,
                                    const CovarianceUpdate& update) {
  require_square_symmetric(cov);
  const int dim = static_cast<int>(cov.rows());
  require(d >= 1 && d <= dim, "d must lie in [1, dim]");
  require(update.bmat.rows() == dim, "update dimension mismatch");
  require_finite(update.bmat, "update.bmat");

  const Eigen::MatrixXd c = symmetrized(cov);
  auto [vals, vecs] = sym_eig_desc(c);
  Eigen::MatrixXd cd = vecs.leftCols(d) *
                       vals.head(d).cwiseMax(0.0).asDiagonal() *
                       vecs.leftCols(d).transpose();

  TruncationPair out;
  out.cov_vals = vals;
  const Eigen::MatrixXd bbt = update.bmat * update.bmat.transpose();
  out.full = update.a * c + update.b * bbt;
  out.truncated = update.a * cd + update.b * bbt;
  out.sigma_d = std::max(vals(d - 1), 0.0);
  out.sigma_d1 = d < dim ? std::max(vals(d), 0.0) : 0.0;
  out.sigma1_b = largest_singular_value(update.bmat);
  return out;
}

}  // namespace

Eigen::MatrixXd ThinSvd::reconstruct() const {
  return u * s.asDiagonal() * v.transpose();
}

ThinSvd thin_svd(const Eigen::MatrixXd& mat, int rank) {
  require(mat.rows() > 0 && mat.cols() > 0, "matrix must be non-empty");
  require_finite(mat, "matrix");
  const int max_possible = static_cast<int>(std::min(mat.rows(), mat.cols()));
  require(rank >= 1 && rank <= max_possible,
          "rank must lie in [1, min(rows, cols)]");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  ThinSvd out;
  out.u = svd.matrixU().leftCols(rank);
  out.s = svd.singularValues().head(rank);
  out.v = svd.matrixV().leftCols(rank);
  out.max_rank = rank;
  out.symmetric = false;
  fix_column_signs(out.u, out.v);
  return out;
}

ThinSvd thin_svd_psd(const Eigen::MatrixXd& mat, int rank) {
  require_square_symmetric(mat);
  require(rank >= 1 && rank <= mat.rows(), "rank must lie in [1, dim]");
  auto [vals, vecs] = sym_eig_desc(symmetrized(mat));
  ThinSvd out;
  out.u = vecs.leftCols(rank);
  out.s = vals.head(rank).cwiseMax(0.0);
  out.max_rank = rank;
  out.symmetric = true;
  Eigen::MatrixXd dummy(out.u.rows(), 0);
  fix_column_signs(out.u, dummy);
  out.v = out.u;
  return out;
}

ThinSvd brand_update(const ThinSvd& svd, const Eigen::MatrixXd& a_cols,
                     const Eigen::MatrixXd& b_cols) {
  require(svd.rank() >= 1, "svd must have rank >= 1");
  require(a_cols.rows() == svd.u.rows(), "a_cols row mismatch");
  require(b_cols.rows() == svd.v.rows(), "b_cols row mismatch");
  require(a_cols.cols() == b_cols.cols() && a_cols.cols() >= 1,
          "a_cols and b_cols must have the same positive column count");
  require_finite(a_cols, "a_cols");
  require_finite(b_cols, "b_cols");

  const int r = svd.rank();
  const bool sym_path =
      svd.symmetric && a_cols.rows() == b_cols.rows() && a_cols == b_cols;

  const Eigen::MatrixXd ut_a = svd.u.transpose() * a_cols;
  const Eigen::MatrixXd a_res = a_cols - svd.u * ut_a;
  const Eigen::MatrixXd p = residual_basis(svd.u, a_res, kResidualDropTol);
  const Eigen::MatrixXd ra = p.transpose() * a_res;
  const int cp = static_cast<int>(p.cols());

  Eigen::MatrixXd left(r + cp, a_cols.cols());
  left.topRows(r) = ut_a;
  left.bottomRows(cp) = ra;

  ThinSvd out;
  out.max_rank = svd.max_rank > 0 ? svd.max_rank : r;
  out.symmetric = svd.symmetric;

  if (sym_path) {
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(r + cp, r + cp);
    for (int i = 0; i < r; ++i) k(i, i) = svd.s(i);
    k += left * left.transpose();
    auto [vals, vecs] = sym_eig_desc(k);
    const int keep = std::min(out.max_rank, r + cp);
    Eigen::MatrixXd joint(svd.u.rows(), r + cp);
    joint.leftCols(r) = svd.u;
    joint.rightCols(cp) = p;
    out.u = joint * vecs.leftCols(keep);
    out.s = vals.head(keep).cwiseMax(0.0);
    Eigen::MatrixXd dummy(out.u.rows(), 0);
    fix_column_signs(out.u, dummy);
    out.v = out.u;
  } else {
    const Eigen::MatrixXd vt_b = svd.v.transpose() * b_cols;
    const Eigen::MatrixXd b_res = b_cols - svd.v * vt_b;
    const Eigen::MatrixXd q = residual_basis(svd.v, b_res, kResidualDropTol);
    const Eigen::MatrixXd rb = q.transpose() * b_res;
    const int cq = static_cast<int>(q.cols());

    Eigen::MatrixXd right(r + cq, b_cols.cols());
    right.topRows(r) = vt_b;
    right.bottomRows(cq) = rb;

    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(r + cp, r + cq);
    for (int i = 0; i < r; ++i) k(i, i) = svd.s(i);
    k += left * right.transpose();

    Eigen::JacobiSVD<Eigen::MatrixXd> ksvd(
        k, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const int avail = static_cast<int>(ksvd.singularValues().size());
    const int keep = std::min(out.max_rank, avail);

    Eigen::MatrixXd joint_u(svd.u.rows(), r + cp);
    joint_u.leftCols(r) = svd.u;
    joint_u.rightCols(cp) = p;
    Eigen::MatrixXd joint_v(svd.v.rows(), r + cq);
    joint_v.leftCols(r) = svd.v;
    joint_v.rightCols(cq) = q;

    out.u = joint_u * ksvd.matrixU().leftCols(keep);
    out.s = ksvd.singularValues().head(keep);
    out.v = joint_v * ksvd.matrixV().leftCols(keep);
    fix_column_signs(out.u, out.v);
  }

  // Round-off accumulates over long update sequences; restore orthonormality
  // before it becomes visible to callers.
  const auto drift = [](const Eigen::MatrixXd& m) {
    return (m.transpose() * m -
            Eigen::MatrixXd::Identity(m.cols(), m.cols()))
        .norm();
  };
  if (drift(out.u) > kOrthoDriftTol) {
    out.u = residual_basis(Eigen::MatrixXd(out.u.rows(), 0), out.u, 1e-14);
    if (out.symmetric) out.v = out.u;
  }
  if (!out.symmetric && drift(out.v) > kOrthoDriftTol) {
    out.v = residual_basis(Eigen::MatrixXd(out.v.rows(), 0), out.v, 1e-14);
  }
  return out;
}

CovarianceUpdate cov_rank1_terms(const Eigen::VectorXd& mean, long n,
                                 const Eigen::VectorXd& point) {
  require(mean.size() > 0 && mean.size() == point.size(),
          "mean and point must have equal positive dimension");
  require_finite(mean, "mean");
  require_finite(point, "point");
  require(n >= 2, "n must be >= 2");

  CovarianceUpdate out;
  out.a = static_cast<double>(n - 1) / static_cast<double>(n);
  out.b = 1.0 / static_cast<double>(n + 1);
  out.bmat = mean - point;
  out.n = n;
  out.m = 1;
  return out;
}

CovarianceUpdate cov_rankm_terms(const Eigen::VectorXd& mean, long n,
                                 const Eigen::MatrixXd& new_points) {
  require(mean.size() > 0 && new_points.rows() == mean.size(),
          "mean and new_points must have equal positive dimension");
  require(new_points.cols() >= 1, "need at least one new point");
  require_finite(mean, "mean");
  require_finite(new_points, "new_points");
  require(n >= 2, "n must be >= 2");

  const long m = new_points.cols();
  const Eigen::VectorXd cbar = new_points.rowwise().mean();

  CovarianceUpdate out;
  out.a = static_cast<double>(n - 1) / static_cast<double>(n + m - 1);
  out.b = 1.0 / static_cast<double>(n + m - 1);
  out.bmat.resize(mean.size(), m + 1);
  for (long j = 0; j < m; ++j) out.bmat.col(j) = new_points.col(j) - cbar;
  const double shift_scale =
      std::sqrt(static_cast<double>(n) * static_cast<double>(m) /
                static_cast<double>(n + m));
  out.bmat.col(m) = shift_scale * (mean - cbar);
  out.n = n;
  out.m = m;
  return out;
}

std::pair<Eigen::VectorXd, long> update_mean(const Eigen::VectorXd& mean,
                                             long n,
                                             const Eigen::MatrixXd& new_points) {
  require(mean.size() > 0 && new_points.rows() == mean.size(),
          "mean and new_points must have equal positive dimension");
  require(n >= 1, "n must be >= 1");
  require(new_points.cols() >= 1, "need at least one new point");
  require_finite(mean, "mean");
  require_finite(new_points, "new_points");

  const long m = new_points.cols();
  const Eigen::VectorXd total =
      static_cast<double>(n) * mean + new_points.rowwise().sum();
  return {total / static_cast<double>(n + m), n + m};
}

PrincipalAngles principal_angles(const Eigen::MatrixXd& u1,
                                 const Eigen::MatrixXd& u2) {
  require(u1.rows() == u2.rows() && u1.rows() > 0, "bases must share row count");
  require(u1.cols() >= 1 && u2.cols() >= 1, "bases must be non-empty");
  require(u1.cols() <= u2.cols(), "u1 must not have more columns than u2");
  require_finite(u1, "u1");
  require_finite(u2, "u2");
  const auto check_ortho = [](const Eigen::MatrixXd& u, const char* name) {
    const Eigen::MatrixXd g =
        u.transpose() * u - Eigen::MatrixXd::Identity(u.cols(), u.cols());
    require(g.cwiseAbs().maxCoeff() <= 1e-8,
            std::string(name) + " is not orthonormal");
  };
  check_ortho(u1, "u1");
  check_ortho(u2, "u2");

  const Eigen::MatrixXd cross = u2.transpose() * u1;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross);
  PrincipalAngles out;
  out.cosines = svd.singularValues().cwiseMin(1.0).cwiseMax(0.0);

  // acos loses half the precision when the cosine is near 1, so small angles
  // come from the singular values of the residual u1 - u2 (u2^T u1) instead.
  // Those are the sines of the same angles, sorted descending; reversing
  // aligns them with the descending cosines.
  Eigen::JacobiSVD<Eigen::MatrixXd> res_svd(u1 - u2 * cross);
  const Eigen::VectorXd sines_desc =
      res_svd.singularValues().cwiseMin(1.0).cwiseMax(0.0);

  const int k = static_cast<int>(out.cosines.size());
  out.angles.resize(k);
  for (int i = 0; i < k; ++i) {
    const double c = out.cosines(i);
    const double s = sines_desc(k - 1 - i);
    out.angles(i) = c * c >= 0.5 ? std::asin(s) : std::acos(c);
  }
  return out;
}

GapBoundReport truncation_gap_bound(const Eigen::MatrixXd& cov, int d,
                                    const CovarianceUpdate& update) {
  const TruncationPair pair = make_truncation_pair(cov, d, update);
  auto [full_vals, fv] = sym_eig_desc(pair.full);
  auto [trunc_vals, tv] = sym_eig_desc(pair.truncated);
  (void)fv;
  (void)tv;

  GapBoundReport out;
  out.observed_gaps = (full_vals - trunc_vals).cwiseAbs();
  out.max_gap = out.observed_gaps.maxCoeff();
  out.bound = update.a * pair.sigma_d1 + update.b * pair.sigma1_b * pair.sigma1_b;
  out.holds = out.max_gap <= out.bound + 1e-10 * (1.0 + out.bound);
  return out;
}

AngleBoundReport truncation_angle_bound(const Eigen::MatrixXd& cov, int d,
                                        const CovarianceUpdate& update,
                                        long n) {
  require(n >= 2, "n must be >= 2");
  const TruncationPair pair = make_truncation_pair(cov, d, update);
  auto [full_vals, full_vecs] = sym_eig_desc(pair.full);
  auto [trunc_vals, trunc_vecs] = sym_eig_desc(pair.truncated);
  (void)full_vals;
  (void)trunc_vals;

  AngleBoundReport out;
  out.basis_full = full_vecs.leftCols(d);
  out.basis_truncated = trunc_vecs.leftCols(d);

  const Eigen::MatrixXd diff =
      out.basis_truncated * out.basis_truncated.transpose() -
      out.basis_full * out.basis_full.transpose();
  auto [diff_vals, diff_vecs] = sym_eig_desc(symmetrized(diff));
  (void)diff_vecs;
  out.observed = diff_vals.cwiseAbs().maxCoeff();

  const double s1b2 = pair.sigma1_b * pair.sigma1_b;
  out.applicable =
      update.a * pair.sigma_d1 < (pair.sigma_d + s1b2) / 4.0;
  out.applicable_weighted =
      update.a * pair.sigma_d1 <
      (update.a * pair.sigma_d + update.b * s1b2) / 4.0;

  const double denom =
      static_cast<double>(n - 1) * pair.sigma_d + s1b2;
  out.bound = denom > 0.0
                  ? 2.0 * static_cast<double>(n - 1) * pair.sigma_d1 / denom
                  : 0.0;
  out.holds = !out.applicable ||
              out.observed <= out.bound + 1e-9 * (1.0 + out.bound);
  return out;
}

CovProbe random_cov_probe(int dim, int d, int m, std::uint64_t seed) {
  require(dim >= 2 && d >= 1 && d < dim, "need 1 <= d < dim");
  require(m >= 1, "need m >= 1");
  SplitMix64 rng(seed);

  // Spectrum: top-d in [1, 2], tail scaled log-uniformly over [1e-4, 1e-1].
  std::vector<double> main_part(d), tail_part(dim - d);
  for (auto& v : main_part) v = rng.uniform(1.0, 2.0);
  const double tail_scale = std::pow(10.0, rng.uniform(-4.0, -1.0));
  for (auto& v : tail_part) v = rng.u01() * tail_scale;
  std::sort(main_part.rbegin(), main_part.rend());
  std::sort(tail_part.rbegin(), tail_part.rend());
  Eigen::VectorXd lam(dim);
  for (int i = 0; i < d; ++i) lam(i) = main_part[i];
  for (int i = d; i < dim; ++i) lam(i) = tail_part[i - d];

  const Eigen::MatrixXd gauss = rng.gauss_matrix(dim, dim);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, dim);

  CovProbe out;
  out.cov = q * lam.asDiagonal() * q.transpose();
  out.cov = symmetrized(out.cov);
  out.d = d;
  out.n = rng.uniform_int(10, 100);

  const Eigen::VectorXd mean = rng.gauss_vector(dim);
  const Eigen::MatrixXd half = q * lam.cwiseSqrt().asDiagonal();
  Eigen::MatrixXd pts(dim, m);
  for (int j = 0; j < m; ++j) pts.col(j) = mean + half * rng.gauss_vector(dim);
  out.update = cov_rankm_terms(mean, out.n, pts);
  return out;
}

std::vector<ScalingProbeRow> truncation_scaling_probe(int count, int dim,
                                                      int d, int m,
                                                      std::uint64_t seed) {
  require(count >= 1, "count must be >= 1");
  std::vector<ScalingProbeRow> rows;
  rows.reserve(count);
  for (int i = 0; i < count; ++i) {
    // Re-scale the update points around their mean so the predictor spans
    // several orders of magnitude; the trend test needs the spread.
    SplitMix64 scale_rng(seed ^ (0x51ed2701u + static_cast<std::uint64_t>(i)));
    const double scale = std::pow(10.0, scale_rng.uniform(-0.5, 0.5));
    CovProbe probe =
        random_cov_probe(dim, d, m, seed + static_cast<std::uint64_t>(i));
    CovarianceUpdate upd = probe.update;
    upd.bmat *= scale;

    const TruncationPair pair = make_truncation_pair(probe.cov, d, upd);
    auto [full_vals, fv] = sym_eig_desc(pair.full);
    auto [trunc_vals, tv] = sym_eig_desc(pair.truncated);
    (void)fv;
    (void)tv;

    ScalingProbeRow row;
    row.discrepancy =
        (full_vals.head(d) - trunc_vals.head(d)).cwiseAbs().maxCoeff();
    row.predictor =
        pair.sigma_d1 * std::pow(upd.bmat.norm(), 4.0);
    rows.push_back(row);
  }
  return rows;
}

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2,
          "need two sequences of equal length >= 2");
  const auto ranks = [](const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
      i = j + 1;
    }
    return rank;
  };

  const std::vector<double> rx = ranks(x);
  const std::vector<double> ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace gmra::linalg
