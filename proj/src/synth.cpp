#include "gmra/synth.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace gmra::synth {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace

Xoshiro256pp::Xoshiro256pp(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& word : s_) word = splitmix64(sm);
}

std::uint64_t Xoshiro256pp::next() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

std::vector<Eigen::Vector3d> swiss_roll(long n, std::uint64_t seed) {
  require(n >= 1, "need n >= 1");
  Xoshiro256pp rng(seed);
  std::vector<Eigen::Vector3d> out;
  out.reserve(n);
  for (long i = 0; i < n; ++i) {
    const double t = rng.uniform(kRollTMin, kRollTMax);
    const double h = rng.uniform(0.0, kRollHeight);
    out.push_back(roll_point(t, h));
  }
  return out;
}

Eigen::Vector3d PlaneSpec::normal() const {
  const Eigen::Vector3d n = dir1.cross(dir2);
  require(n.norm() > 1e-12 * (1.0 + dir1.norm() * dir2.norm()),
          "spanning directions are parallel");
  return n.normalized();
}

PlaneSpec PlaneSpec::default_for_roll() {
  PlaneSpec spec;
  spec.base = Eigen::Vector3d(2.0, 0.5 * kRollHeight, 2.0 / (3.0 * M_PI));
  spec.dir1 = Eigen::Vector3d(1.0, 0.0, -1.0).normalized();
  spec.dir2 = Eigen::Vector3d::UnitY();
  spec.extent1 = 28.0;
  spec.extent2 = kRollHeight;
  return spec;
}

std::vector<Eigen::Vector3d> hyperplane(long n, std::uint64_t seed,
                                        const PlaneSpec& spec) {
  require(n >= 1, "need n >= 1");
  spec.normal();  // validates the spanning pair
  const Eigen::Vector3d u1 = spec.dir1.normalized();
  Eigen::Vector3d u2 = spec.dir2 - u1 * u1.dot(spec.dir2);
  u2.normalize();

  Xoshiro256pp rng(seed);
  std::vector<Eigen::Vector3d> out;
  out.reserve(n);
  for (long i = 0; i < n; ++i) {
    const double a = rng.uniform(-0.5 * spec.extent1, 0.5 * spec.extent1);
    const double b = rng.uniform(-0.5 * spec.extent2, 0.5 * spec.extent2);
    out.push_back(spec.base + a * u1 + b * u2);
  }
  return out;
}

StreamSource StreamSource::roll(long total, std::uint64_t seed) {
  StreamSource src;
  src.id_ = "swissroll";
  src.seed_ = seed;
  for (const auto& p : swiss_roll(total, seed)) src.points_.push_back({p, 0});
  return src;
}

StreamSource StreamSource::plane(long total, std::uint64_t seed,
                                 const PlaneSpec& spec) {
  StreamSource src;
  src.id_ = "plane";
  src.seed_ = seed;
  for (const auto& p : hyperplane(total, seed, spec))
    src.points_.push_back({p, 0});
  return src;
}

StreamSource StreamSource::from_points(std::vector<Eigen::Vector3d> points,
                                       std::string id) {
  StreamSource src;
  src.id_ = std::move(id);
  for (const auto& p : points) src.points_.push_back({p, 0});
  return src;
}

StreamSource StreamSource::interleave(std::vector<StreamSource> sources,
                                      const std::vector<double>& proportions,
                                      std::uint64_t seed) {
  require(!sources.empty(), "need at least one source");
  require(proportions.size() == sources.size(),
          "one proportion per source required");
  long total = 0;
  for (const auto& s : sources) total += s.total();
  require(total > 0, "sources are empty");
  double prop_sum = 0.0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    prop_sum += proportions[i];
    const double actual =
        static_cast<double>(sources[i].total()) / static_cast<double>(total);
    require(std::abs(proportions[i] - actual) <= 1e-9,
            "proportion does not match the source totals");
  }
  require(std::abs(prop_sum - 1.0) <= 1e-9, "proportions must sum to 1");

  // Shuffle the exact label multiset, then fill each label slot with that
  // source's next point so per-source order is preserved.
  std::vector<int> labels;
  labels.reserve(total);
  for (std::size_t i = 0; i < sources.size(); ++i)
    labels.insert(labels.end(), sources[i].total(), static_cast<int>(i));
  Xoshiro256pp rng(seed);
  for (long i = total - 1; i > 0; --i) {
    const long j = static_cast<long>(rng.next() %
                                     static_cast<std::uint64_t>(i + 1));
    std::swap(labels[i], labels[j]);
  }

  StreamSource out;
  out.id_ = "mix";
  out.seed_ = seed;
  out.points_.reserve(total);
  std::vector<long> cursor(sources.size(), 0);
  for (int label : labels) {
    const LabeledPoint& src_pt = sources[label].points_[cursor[label]++];
    out.points_.push_back({src_pt.point, label});
  }
  return out;
}

LabeledPoint StreamSource::next() {
  if (exhausted()) throw std::out_of_range("stream source exhausted");
  return points_[emitted_++];
}

std::vector<LabeledPoint> StreamSource::take(long k) {
  std::vector<LabeledPoint> out;
  out.reserve(k);
  for (long i = 0; i < k && !exhausted(); ++i) out.push_back(next());
  return out;
}

void StreamSource::skip(long k) {
  emitted_ = std::min(emitted_ + k, total());
}

}  // namespace gmra::synth
