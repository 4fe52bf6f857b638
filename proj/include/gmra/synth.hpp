#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace gmra::synth {

/// xoshiro256++ with splitmix64 seed expansion.  Chosen because its output
/// is defined bit-for-bit by the published reference implementation, which
/// keeps experiment outputs byte-identical across platforms.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed);

  std::uint64_t next();

  /// Uniform double in [0, 1) with 53 random bits.
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

 private:
  std::uint64_t s_[4];
};

/// The rolled-sheet map: t is the spiral parameter, h the height.
inline Eigen::Vector3d roll_point(double t, double h) {
  return {t * std::cos(t), h, t * std::sin(t)};
}

constexpr double kRollTMin = 1.5 * M_PI;
constexpr double kRollTMax = 4.5 * M_PI;
constexpr double kRollHeight = 21.0;

/// n samples of the rolled sheet: t ~ U(1.5*pi, 4.5*pi), h ~ U(0, 21),
/// drawn t-then-h per point.  Deterministic in `seed`.
std::vector<Eigen::Vector3d> swiss_roll(long n, std::uint64_t seed);

/// Bounded planar patch: base + a * u1 + b * u2 with a ~ U(-e1/2, e1/2),
/// b ~ U(-e2/2, e2/2) over the orthonormalized spanning directions.
struct PlaneSpec {
  Eigen::Vector3d base = Eigen::Vector3d::Zero();
  Eigen::Vector3d dir1 = Eigen::Vector3d::UnitX();
  Eigen::Vector3d dir2 = Eigen::Vector3d::UnitY();
  double extent1 = 1.0;
  double extent2 = 1.0;

  Eigen::Vector3d normal() const;

  /// Plane through the roll centroid (2, 10.5, 2/(3*pi)) with normal
  /// (1, 0, 1)/sqrt(2), sized like the roll's bounding box.
  static PlaneSpec default_for_roll();
};

/// n uniform samples on the patch, a-then-b per point.  Throws
/// std::invalid_argument when the spanning directions are parallel.
std::vector<Eigen::Vector3d> hyperplane(long n, std::uint64_t seed,
                                        const PlaneSpec& spec);

struct LabeledPoint {
  Eigen::Vector3d point;
  int source = 0;  ///< index of the originating source
};

/// Deterministic point stream.  All generators materialize their points up
/// front, so replaying a source is rebuilding it with the same seed.
class StreamSource {
 public:
  static StreamSource roll(long total, std::uint64_t seed);
  static StreamSource plane(long total, std::uint64_t seed,
                            const PlaneSpec& spec = PlaneSpec::default_for_roll());
  static StreamSource from_points(std::vector<Eigen::Vector3d> points,
                                  std::string id = "points");

  /// Random interleaving that preserves each source's internal order and
  /// exact totals.  `proportions` must sum to 1 and match the source totals;
  /// they are a cross-check against misconfigured experiments, not a
  /// resampling weight.
  static StreamSource interleave(std::vector<StreamSource> sources,
                                 const std::vector<double>& proportions,
                                 std::uint64_t seed);

  const std::string& id() const { return id_; }
  std::uint64_t seed() const { return seed_; }
  long total() const { return static_cast<long>(points_.size()); }
  long emitted() const { return emitted_; }
  bool exhausted() const { return emitted_ >= total(); }

  LabeledPoint next();
  std::vector<LabeledPoint> take(long k);

  /// Replay support: drop the first `k` emissions without returning them.
  void skip(long k);

 private:
  StreamSource() = default;

  std::string id_;
  std::uint64_t seed_ = 0;
  std::vector<LabeledPoint> points_;
  long emitted_ = 0;
};

}  // namespace gmra::synth
