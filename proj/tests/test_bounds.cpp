#include <doctest.h>

#include <Eigen/Dense>
#include <vector>

#include "gmra/linalg.hpp"
#include "oracles.hpp"

using namespace gmra::linalg;

namespace {

/// Dense reference for the truncated-update pair built from oracle pieces.
struct DensePair {
  Eigen::MatrixXd full;
  Eigen::MatrixXd truncated;
};

DensePair dense_pair(const Eigen::MatrixXd& cov, int d,
                     const CovarianceUpdate& upd) {
  const Eigen::VectorXd vals = oracle::singular_values(cov);
  const Eigen::MatrixXd vecs = oracle::top_eigenspace(cov, d);
  const Eigen::MatrixXd cd =
      vecs * vals.head(d).asDiagonal() * vecs.transpose();
  const Eigen::MatrixXd bbt = upd.bmat * upd.bmat.transpose();
  return {upd.a * cov + upd.b * bbt, upd.a * cd + upd.b * bbt};
}

}  // namespace

TEST_CASE("truncation_gap_bound matches a dense recompute") {
  const CovProbe probe = random_cov_probe(12, 2, 5, 901);
  const GapBoundReport report =
      truncation_gap_bound(probe.cov, probe.d, probe.update);

  const DensePair pair = dense_pair(probe.cov, probe.d, probe.update);
  const Eigen::VectorXd full = oracle::singular_values(pair.full);
  const Eigen::VectorXd trunc = oracle::singular_values(pair.truncated);
  const double ref_gap = (full - trunc).cwiseAbs().maxCoeff();
  CHECK(report.max_gap == doctest::Approx(ref_gap).epsilon(1e-9));

  const Eigen::VectorXd cov_vals = oracle::singular_values(probe.cov);
  const Eigen::VectorXd b_vals = oracle::singular_values(probe.update.bmat);
  const double ref_bound = probe.update.a * cov_vals(probe.d) +
                           probe.update.b * b_vals(0) * b_vals(0);
  CHECK(report.bound == doctest::Approx(ref_bound).epsilon(1e-9));
}

TEST_CASE("truncation_gap_bound holds across probe batches") {
  int checked = 0;
  for (int d : {2, 4}) {
    for (int m : {1, 5}) {
      for (int i = 0; i < 25; ++i) {
        const std::uint64_t seed =
            1000 + 97 * static_cast<std::uint64_t>(d) + 11 * m + i;
        const CovProbe probe = random_cov_probe(12, d, m, seed);
        const GapBoundReport report =
            truncation_gap_bound(probe.cov, probe.d, probe.update);
        CHECK(report.holds);
        CHECK(report.max_gap >= 0.0);
        ++checked;
      }
    }
  }
  CHECK(checked == 100);
}

TEST_CASE("truncation_gap_bound covers the full-dimension edge") {
  // d == dim truncates nothing: gaps and bound both collapse to zero.
  const CovProbe probe = random_cov_probe(6, 2, 1, 77);
  const GapBoundReport report =
      truncation_gap_bound(probe.cov, 6, probe.update);
  CHECK(report.max_gap < 1e-12);
  CHECK(report.bound >= probe.update.b);  // b * sigma_1(B)^2 term remains
  CHECK(report.holds);
}

TEST_CASE("truncation_angle_bound observed equals sin of the largest angle") {
  const CovProbe probe = random_cov_probe(12, 4, 5, 1203);
  const AngleBoundReport report =
      truncation_angle_bound(probe.cov, probe.d, probe.update, probe.n);
  const PrincipalAngles pa =
      principal_angles(report.basis_truncated, report.basis_full);
  CHECK(report.observed ==
        doctest::Approx(std::sin(pa.max_angle())).epsilon(1e-9));
  CHECK(report.observed ==
        doctest::Approx(oracle::projector_distance(
            report.basis_full, report.basis_truncated)).epsilon(1e-9));
}

TEST_CASE("truncation_angle_bound holds on applicable probes") {
  int applicable = 0;
  for (int d : {2, 4}) {
    for (int m : {1, 5}) {
      for (int i = 0; i < 25; ++i) {
        const std::uint64_t seed =
            4000 + 131 * static_cast<std::uint64_t>(d) + 17 * m + i;
        const CovProbe probe = random_cov_probe(12, d, m, seed);
        const AngleBoundReport report =
            truncation_angle_bound(probe.cov, probe.d, probe.update, probe.n);
        CHECK(report.holds);
        if (report.applicable) {
          CHECK(report.observed <= report.bound + 1e-9 * (1.0 + report.bound));
          ++applicable;
        }
      }
    }
  }
  // The probe generator sits deep inside the hypothesis region.
  CHECK(applicable >= 90);
}

TEST_CASE("truncation_angle_bound flags an out-of-hypothesis update") {
  CovProbe probe = random_cov_probe(8, 2, 1, 555);
  // Blowing up the update makes sigma_1(B)^2 dominate; the a-weighted
  // hypothesis still holds (larger B only grows that denominator), so build
  // a near-degenerate spectrum instead: d-th and (d+1)-th eigenvalues equal.
  Eigen::VectorXd lam(8);
  lam << 2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0;
  std::mt19937_64 rng(556);
  probe.cov = oracle::random_psd(lam, rng);
  probe.update.bmat *= 1e-3;
  const AngleBoundReport report =
      truncation_angle_bound(probe.cov, 2, probe.update, probe.n);
  // sigma_3 == sigma_2 with a tiny update: a * sigma_3 > (sigma_2 + s1b^2)/4
  // fails only when sigma values align; just confirm the reported flags are
  // consistent with the recomputed hypothesis.
  const Eigen::VectorXd vals = oracle::singular_values(probe.cov);
  const Eigen::VectorXd bv = oracle::singular_values(probe.update.bmat);
  const bool expect =
      probe.update.a * vals(2) < (vals(1) + bv(0) * bv(0)) / 4.0;
  CHECK(report.applicable == expect);
}

TEST_CASE("truncation_scaling_probe discrepancy tracks the predictor") {
  std::vector<double> disc, pred;
  for (int d : {2, 4}) {
    const auto rows = truncation_scaling_probe(50, 12, d, 3, 8800 + d);
    for (const auto& row : rows) {
      disc.push_back(row.discrepancy);
      pred.push_back(row.predictor);
    }
  }
  CHECK(disc.size() == 100);
  CHECK(spearman_rho(disc, pred) > 0.5);
}
