#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "gmra/streaming.hpp"
#include "oracles.hpp"

using gmra::CellId;
using gmra::GmraConfig;
using gmra::GmraTree;
using gmra::StreamState;

namespace {

std::vector<Eigen::VectorXd> rolled_sheet(int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(1.5 * M_PI, 4.5 * M_PI);
  std::uniform_real_distribution<double> height(0.0, 21.0);
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double t = angle(rng);
    pts.push_back(Eigen::Vector3d(t * std::cos(t), height(rng), t * std::sin(t)));
  }
  return pts;
}

// Patch of the plane z = noise, rotated about the x-axis by `tilt` and
// shifted by `offset`.
std::vector<Eigen::VectorXd> plane_patch(int count, unsigned seed,
                                         double tilt = 0.0,
                                         double noise = 0.0,
                                         Eigen::Vector3d offset =
                                             Eigen::Vector3d::Zero()) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  std::normal_distribution<double> perturb(0.0, noise);
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double a = coef(rng);
    const double b = coef(rng);
    const double z = noise > 0.0 ? perturb(rng) : 0.0;
    Eigen::Vector3d p(a, b * std::cos(tilt) - z * std::sin(tilt),
                      b * std::sin(tilt) + z * std::cos(tilt));
    pts.push_back(p + offset);
  }
  return pts;
}

Eigen::MatrixXd as_columns(const std::vector<Eigen::VectorXd>& pts) {
  Eigen::MatrixXd m(pts[0].size(), pts.size());
  for (std::size_t j = 0; j < pts.size(); ++j) m.col(j) = pts[j];
  return m;
}

GmraConfig roll_config() {
  GmraConfig cfg;
  cfg.d = 2;
  cfg.epsilon = 0.1;
  cfg.min_split = 30;
  cfg.max_depth = 12;
  return cfg;
}

// Checks every cell's streamed statistics against an exact recomputation
// from its current members.
void check_statistics_exact(const StreamState& state) {
  const GmraTree& tree = state.tree();
  const int d = tree.config().d;
  for (const auto& [id, cell] : tree.cells()) {
    const std::vector<int> members = tree.cell_members(id);
    REQUIRE(cell.count == static_cast<long>(members.size()));
    std::vector<Eigen::VectorXd> pts;
    for (int pi : members) pts.push_back(tree.covertree().point(pi));
    const Eigen::MatrixXd cols = as_columns(pts);
    const Eigen::VectorXd exact_mean = oracle::mean(cols);
    CHECK((cell.center - exact_mean).norm() <= 1e-10 * (1.0 + exact_mean.norm()));
    if (cell.count < 2) {
      CHECK(cell.running_mse == 0.0);
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(oracle::covariance(cols));
    Eigen::VectorXd lambda = es.eigenvalues().reverse();  // descending
    for (int i = 0; i < lambda.size(); ++i)
      lambda(i) = std::max(0.0, lambda(i));
    for (int i = 0; i < std::min<int>(d, lambda.size()); ++i)
      CHECK(cell.sing_vals(i) ==
            doctest::Approx(lambda(i)).epsilon(1e-8).scale(1.0));
    double tail = 0.0;
    for (int i = d; i < lambda.size(); ++i) tail += lambda(i);
    const double exact_mse =
        tail * static_cast<double>(cell.count - 1) / static_cast<double>(cell.count);
    // the streamed scatter subtraction carries ~1e-13 of cancellation noise
    CHECK(std::abs(cell.running_mse - exact_mse) <= 1e-6 * exact_mse + 1e-10);
  }
}

void check_structure(const GmraTree& tree) {
  for (const auto& [id, cell] : tree.cells()) {
    for (CellId kid : cell.children) {
      REQUIRE(tree.has_cell(kid));
      REQUIRE(tree.parent_of(kid).has_value());
      CHECK(*tree.parent_of(kid) == id);
    }
    const auto parent = tree.parent_of(id);
    if (parent) {
      const auto& siblings = tree.cell(*parent).children;
      CHECK(std::find(siblings.begin(), siblings.end(), id) != siblings.end());
    }
  }
}

void check_policy_soundness(const GmraTree& tree) {
  const GmraConfig& cfg = tree.config();
  for (CellId id : tree.leaf_cells()) {
    const gmra::GmraNode& cell = tree.cell(id);
    const bool due = cell.count >= cfg.min_split &&
                     cell.running_mse > cfg.epsilon &&
                     id.scale < cfg.max_depth;
    CHECK(!due);
  }
}

}  // namespace

TEST_CASE("streamed statistics stay exact against member recomputation") {
  const auto train = rolled_sheet(200, 301u);
  StreamState state = StreamState::init(train, roll_config());
  const auto stream = rolled_sheet(300, 302u);

  std::size_t leaves = state.tree().leaf_cells().size();
  int max_scale = state.tree().max_scale();
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const gmra::IngestReport rep = state.ingest(stream[i]);
    REQUIRE(rep.point_indices.size() == 1);

    // the touched chain is a prefix of the point's membership path
    const auto path = state.tree().membership_path(rep.point_indices[0]);
    REQUIRE(rep.touched.size() <= path.size());
    for (std::size_t k = 0; k < rep.touched.size(); ++k)
      CHECK(rep.touched[k] == path[k]);
    if (rep.split_cells.empty()) CHECK(rep.touched.size() == path.size());

    // structure only grows
    CHECK(state.tree().leaf_cells().size() >= leaves);
    CHECK(state.tree().max_scale() >= max_scale);
    leaves = state.tree().leaf_cells().size();
    max_scale = state.tree().max_scale();

    if (i % 50 == 49) check_policy_soundness(state.tree());
  }
  CHECK(state.increments_seen() == stream.size());
  CHECK(state.tree().point_count() == 500);
  check_statistics_exact(state);
  check_structure(state.tree());
  check_policy_soundness(state.tree());
}

TEST_CASE("cells outside the touched set are left alone") {
  const auto train = rolled_sheet(300, 311u);
  StreamState state = StreamState::init(train, roll_config());

  struct Frozen {
    Eigen::VectorXd center;
    long count;
    Eigen::VectorXd spectrum;
    Eigen::MatrixXd basis;
    bool inherited;
  };
  std::map<CellId, Frozen> before;
  for (const auto& [id, cell] : state.tree().cells())
    before[id] = {cell.center, cell.count, cell.sing_vals, cell.basis,
                  cell.inherited_basis};

  const auto one = rolled_sheet(1, 312u);
  const gmra::IngestReport rep = state.ingest(one[0]);
  std::set<CellId> touched(rep.touched.begin(), rep.touched.end());
  for (CellId id : rep.new_cells) touched.insert(id);

  for (const auto& [id, frozen] : before) {
    if (touched.count(id)) continue;
    const gmra::GmraNode& cell = state.tree().cell(id);
    CHECK(cell.count == frozen.count);
    CHECK((cell.center - frozen.center).norm() == 0.0);
    CHECK((cell.sing_vals - frozen.spectrum).norm() == 0.0);
    // only planes inherited from a touched parent may move
    if (!frozen.inherited) CHECK((cell.basis - frozen.basis).norm() == 0.0);
  }
}

TEST_CASE("split policy truth table") {
  const auto train = rolled_sheet(120, 321u);
  StreamState state = StreamState::init(train, roll_config());
  const CellId leaf = state.tree().leaf_cells().front();
  gmra::GmraNode& cell = state.tree_mut().cell_mut(leaf);

  cell.count = 29;  // M - 1
  cell.running_mse = 1.0;
  CHECK(!state.evaluate_split(leaf).split);
  CHECK(!state.evaluate_split(leaf).count_ok);

  cell.count = 60;
  cell.running_mse = 0.05;  // epsilon / 2
  CHECK(!state.evaluate_split(leaf).split);
  CHECK(!state.evaluate_split(leaf).mse_ok);

  cell.running_mse = 0.2;  // 2 epsilon
  const gmra::SplitDecision dec = state.evaluate_split(leaf);
  CHECK(dec.split);
  CHECK(dec.count_ok);
  CHECK(dec.mse_ok);
  CHECK(dec.depth_ok);

  CHECK_THROWS_AS(state.evaluate_split(CellId{40, 9999}),
                  std::invalid_argument);
}

TEST_CASE("a far-off second cluster forces a split with clean children") {
  // train on one planar patch, then stream a second patch 10 units off the
  // first patch's plane
  const auto train = plane_patch(100, 331u);
  StreamState state = StreamState::init(train, roll_config());
  REQUIRE(state.tree().cells().size() == 1);

  const auto stream = plane_patch(80, 332u, 0.0, 0.0, {0.0, 0.0, 10.0});
  bool split_seen = false;
  for (const auto& x : stream) {
    const gmra::IngestReport rep = state.ingest(x);
    split_seen = split_seen || !rep.split_cells.empty();
  }
  CHECK(split_seen);
  CHECK(state.tree().max_scale() >= 2);
  CHECK(!state.tree().cell(CellId{1, 0}).children.empty());

  // each cluster's leaf is planar again
  for (const Eigen::VectorXd& probe : {train[0], stream[40]}) {
    const CellId leaf = state.tree().route(probe).back();
    std::vector<Eigen::VectorXd> members;
    for (int pi : state.tree().cell_members(leaf))
      members.push_back(state.tree().covertree().point(pi));
    CHECK(state.tree().cell_mse(leaf, members) < 1e-6);
  }
  check_policy_soundness(state.tree());
  check_statistics_exact(state);
}

TEST_CASE("identical points replicate the parent instead of refining") {
  std::vector<Eigen::VectorXd> same(40, Eigen::Vector3d(1.0, 2.0, 3.0));
  StreamState state = StreamState::init(same, roll_config());
  REQUIRE(state.tree().cells().size() == 1);
  CHECK(state.tree().cell(CellId{1, 0}).running_mse == 0.0);
  CHECK_THROWS_AS(state.apply_split(CellId{1, 0}), std::invalid_argument);

  // forcing the split shows the pure self-replication: one child, same members
  const auto kids = state.tree_mut().split_cell(CellId{1, 0});
  REQUIRE(kids.size() == 1);
  CHECK(kids[0].node == 0);
  CHECK(kids[0].scale == 2);
  CHECK(state.tree().cell(kids[0]).count == 40);
  CHECK(state.tree().cell(kids[0]).running_mse == 0.0);
}

TEST_CASE("splitting a due roll leaf lowers the worst child MSE") {
  GmraConfig cfg = roll_config();
  cfg.epsilon = 10.0;  // coarse tree, so sizable leaves stay unrefined
  const auto train = rolled_sheet(500, 341u);
  StreamState state = StreamState::init(train, cfg);

  CellId worst{};
  double worst_mse = -1.0;
  for (CellId id : state.tree().leaf_cells()) {
    const gmra::GmraNode& cell = state.tree().cell(id);
    if (cell.count >= cfg.min_split && cell.running_mse > worst_mse) {
      worst_mse = cell.running_mse;
      worst = id;
    }
  }
  REQUIRE(worst_mse > 0.1);

  state.tree_mut().split_cell(worst);
  double worst_child = 0.0;
  for (CellId kid : state.tree().cell(worst).children)
    worst_child = std::max(worst_child, state.tree().cell(kid).running_mse);
  CHECK(worst_child < worst_mse);
}

TEST_CASE("ingesting a duplicate barely moves a planar tree") {
  const auto train = plane_patch(90, 351u);
  StreamState state = StreamState::init(train, roll_config());
  std::vector<Eigen::VectorXd> projections;
  for (const auto& x : train)
    projections.push_back(state.tree().project(x, 1));

  const gmra::IngestReport rep = state.ingest(train[7]);
  CHECK(!rep.touched.empty());
  CHECK(rep.split_cells.empty());
  CHECK(rep.new_cells.empty());

  for (std::size_t i = 0; i < train.size(); ++i)
    CHECK((state.tree().project(train[i], 1) - projections[i]).norm() <=
          1e-10);
  CHECK(state.tree().global_mse(train) <= 1e-12);
}

TEST_CASE("subspace drift telemetry") {
  SUBCASE("no intervening updates reports zero angles") {
    const auto train = plane_patch(100, 361u);
    StreamState state = StreamState::init(train, roll_config());
    const auto angles = state.subspace_drift(CellId{1, 0}, 0);
    CHECK(angles.max_angle() <= 1e-12);
    CHECK_THROWS_AS(state.subspace_drift(CellId{1, 0}, 5),
                    std::invalid_argument);
    CHECK_THROWS_AS(state.subspace_drift(CellId{30, 77}, 0),
                    std::invalid_argument);
  }

  SUBCASE("streaming a rotated plane drags the basis toward the rotation") {
    GmraConfig cfg = roll_config();
    cfg.epsilon = 1.0;  // keep the tree single-cell through the drift
    const double tilt = 0.3;
    const auto train = plane_patch(200, 362u);
    StreamState state = StreamState::init(train, cfg);
    const auto stream = plane_patch(2000, 363u, tilt);
    for (const auto& x : stream) state.ingest(x);
    REQUIRE(state.tree().cells().size() == 1);

    // mixture of 200 flat + 2000 tilted samples: the top plane sits a touch
    // short of the full rotation
    const double drift =
        state.subspace_drift(CellId{1, 0}, stream.size()).max_angle();
    CHECK(drift > 0.24);
    CHECK(drift < 0.31);
  }

  SUBCASE("drift over a fixed window decays as the cell grows") {
    int improved = 0;
    for (unsigned seed = 0; seed < 30; ++seed) {
      const auto train = plane_patch(150, 400u + seed, 0.0, 0.01);
      StreamState state = StreamState::init(train, roll_config());
      const auto stream = plane_patch(1200, 500u + seed, 0.0, 0.01);
      for (int i = 0; i < 300; ++i) state.ingest(stream[i]);
      const double early =
          state.subspace_drift(CellId{1, 0}, 100).max_angle();
      for (std::size_t i = 300; i < stream.size(); ++i)
        state.ingest(stream[i]);
      const double late = state.subspace_drift(CellId{1, 0}, 100).max_angle();
      if (late < early) ++improved;
    }
    CHECK(improved >= 27);
  }
}

TEST_CASE("rebuild comparison") {
  SUBCASE("zero streamed points means zero divergence") {
    const auto train = rolled_sheet(250, 371u);
    StreamState state = StreamState::init(train, roll_config());
    const auto report = state.rebuild_check(train);
    CHECK(report.rmse == 0.0);
    CHECK(report.unmatched == 0);
    for (const auto& leaf : report.leaves) {
      CHECK(leaf.count_stream == leaf.count_batch);
      CHECK(leaf.max_angle <= 1e-12);
    }
  }

  SUBCASE("the linear case stays exact through streaming") {
    const auto train = plane_patch(100, 381u);
    StreamState state = StreamState::init(train, roll_config());
    const auto stream = plane_patch(400, 382u);
    for (const auto& x : stream) state.ingest(x);
    const auto report =
        state.rebuild_check(state.tree().covertree().points());
    CHECK(report.rmse <= 1e-8);
    CHECK(report.unmatched == 0);
    for (const auto& leaf : report.leaves) CHECK(leaf.max_angle <= 1e-8);
  }
}

TEST_CASE("streaming is deterministic") {
  const auto train = rolled_sheet(150, 391u);
  const auto stream = rolled_sheet(150, 392u);
  auto run = [&]() {
    StreamState state = StreamState::init(train, roll_config());
    for (const auto& x : stream) state.ingest(x);
    return state;
  };
  const StreamState a = run();
  const StreamState b = run();

  CHECK(a.increments_seen() == b.increments_seen());
  CHECK(a.tree().version() == b.tree().version());
  REQUIRE(a.tree().cells().size() == b.tree().cells().size());
  auto ib = b.tree().cells().begin();
  for (const auto& [id, cell] : a.tree().cells()) {
    REQUIRE(id == ib->first);
    const gmra::GmraNode& other = ib->second;
    CHECK(cell.count == other.count);
    CHECK(cell.children == other.children);
    CHECK((cell.center - other.center).norm() == 0.0);
    CHECK((cell.basis - other.basis).norm() == 0.0);
    CHECK((cell.wavelet_const - other.wavelet_const).norm() == 0.0);
    ++ib;
  }
}

TEST_CASE("buffered ingest") {
  SUBCASE("buffer size limits") {
    const auto train = plane_patch(60, 401u);
    StreamState state = StreamState::init(train, roll_config());
    std::vector<Eigen::VectorXd> empty;
    CHECK_THROWS_AS(state.ingest_buffered(empty), std::invalid_argument);
    const auto too_many = plane_patch(33, 402u);
    CHECK_THROWS_AS(state.ingest_buffered(too_many), std::invalid_argument);
  }

  SUBCASE("agrees with one-at-a-time on planar data") {
    const auto train = plane_patch(80, 411u);
    const auto stream = plane_patch(64, 412u);
    StreamState one = StreamState::init(train, roll_config());
    StreamState many = StreamState::init(train, roll_config());
    for (const auto& x : stream) one.ingest(x);
    many.ingest_buffered({stream.begin(), stream.begin() + 32});
    many.ingest_buffered({stream.begin() + 32, stream.end()});

    CHECK(one.increments_seen() == many.increments_seen());
    REQUIRE(one.tree().cells().size() == many.tree().cells().size());
    auto im = many.tree().cells().begin();
    for (const auto& [id, cell] : one.tree().cells()) {
      REQUIRE(id == im->first);
      CHECK(cell.count == im->second.count);
      CHECK((cell.center - im->second.center).norm() <= 1e-12);
      CHECK((cell.sing_vals - im->second.sing_vals).norm() <= 1e-9);
      CHECK(gmra::linalg::principal_angles(cell.basis, im->second.basis)
                .max_angle() <= 1e-6);
      ++im;
    }
  }

  SUBCASE("rank-m updates keep the statistics exact on a roll") {
    const auto train = rolled_sheet(200, 421u);
    StreamState state = StreamState::init(train, roll_config());
    const auto stream = rolled_sheet(192, 422u);
    for (std::size_t at = 0; at < stream.size(); at += 32)
      state.ingest_buffered(
          {stream.begin() + at, stream.begin() + at + 32});
    CHECK(state.increments_seen() == stream.size());
    check_statistics_exact(state);
    check_structure(state.tree());
    check_policy_soundness(state.tree());
  }
}
