#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "gmra/covertree.hpp"

using gmra::CoverTree;
using gmra::InsertOutcome;

namespace {

/// Test-local roll sampler, independent of the library generators.
std::vector<Eigen::VectorXd> rolled_sheet(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(1.5 * M_PI, 4.5 * M_PI);
  std::uniform_real_distribution<double> height(0.0, 21.0);
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double t = angle(rng);
    const double h = height(rng);
    Eigen::Vector3d p(t * std::cos(t), h, t * std::sin(t));
    pts.push_back(p);
  }
  return pts;
}

std::map<int, std::set<int>> cell_map(const std::vector<CoverTree::Cell>& cells) {
  std::map<int, std::set<int>> out;
  for (const auto& cell : cells)
    out[cell.node] = std::set<int>(cell.members.begin(), cell.members.end());
  return out;
}

}  // namespace

TEST_CASE("single point forms a single-node tree") {
  CoverTree tree = CoverTree::build({Eigen::Vector2d(1.0, 2.0)});
  CHECK(tree.size() == 1);
  CHECK(tree.node_count() == 1);
  CHECK(tree.root_level() == tree.min_level());
  const auto cells = tree.partition_at(tree.root_level());
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].members == std::vector<int>{0});
  CHECK(tree.check_invariants().empty());
}

TEST_CASE("two unit-separated points share the root cell and split below") {
  CoverTree tree(2.0);
  tree.insert(Eigen::Vector2d(0.0, 0.0));
  const InsertOutcome out = tree.insert(Eigen::Vector2d(1.0, 0.0));
  REQUIRE(out.created.size() == 1);
  CHECK(out.chain == std::vector<int>{0, 1});

  // Shared cell wherever the radius covers distance 1, singletons below.
  const auto at_root = tree.partition_at(0);
  REQUIRE(at_root.size() == 1);
  CHECK(at_root[0].members.size() == 2);
  const auto below = tree.partition_at(-1);
  CHECK(below.size() == 2);
  CHECK(tree.node(1).level == -1);
  CHECK(tree.check_invariants().empty());
}

TEST_CASE("duplicate insertion becomes a resident of the existing leaf") {
  CoverTree tree(2.0);
  tree.insert(Eigen::Vector2d(0.0, 0.0));
  tree.insert(Eigen::Vector2d(1.0, 0.0));
  const InsertOutcome dup = tree.insert(Eigen::Vector2d(1.0, 0.0));
  CHECK(dup.created.empty());
  CHECK(dup.host == 1);
  CHECK(dup.chain.back() == 1);
  CHECK(tree.node_count() == 2);
  CHECK(tree.size() == 3);
  CHECK(tree.leaf_node_of(dup.point_index) == 1);
  CHECK(tree.check_invariants().empty());

  const auto cells = tree.partition_at(-1);
  REQUIRE(cells.size() == 2);
  CHECK(cells[1].members == std::vector<int>{1, 2});
}

TEST_CASE("far outlier promotes the root level") {
  CoverTree tree(2.0);
  tree.insert(Eigen::Vector2d(0.0, 0.0));
  tree.insert(Eigen::Vector2d(1.0, 0.0));
  const int before = tree.root_level();
  const InsertOutcome far = tree.insert(Eigen::Vector2d(100.0, 0.0));
  CHECK_FALSE(far.created.empty());
  CHECK(tree.root_level() > before);
  CHECK(std::pow(2.0, tree.root_level()) >= 100.0);
  CHECK(tree.check_invariants().empty());
}

TEST_CASE("insert validates its input") {
  CHECK_THROWS_AS(CoverTree::build({}), std::invalid_argument);
  CHECK_THROWS_AS(CoverTree(1.0), std::invalid_argument);

  CoverTree tree(2.0);
  tree.insert(Eigen::Vector2d(0.0, 0.0));
  CHECK_THROWS_AS(tree.insert(Eigen::Vector3d(0.0, 0.0, 0.0)),
                  std::invalid_argument);
  Eigen::Vector2d bad(std::numeric_limits<double>::infinity(), 0.0);
  CHECK_THROWS_AS(tree.insert(bad), std::invalid_argument);
  CHECK_THROWS_AS(tree.partition_at(tree.root_level() + 1), std::out_of_range);
}

TEST_CASE("invariants hold on a rolled sheet, checked as the tree grows") {
  const auto pts = rolled_sheet(200, 7101);
  CoverTree tree(2.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    tree.insert(pts[i]);
    if ((i + 1) % 40 == 0) {
      const auto issues = tree.check_invariants();
      CAPTURE(i);
      CHECK(issues.empty());
    }
  }
  const auto issues = tree.check_invariants();
  for (const auto& s : issues) MESSAGE(s);
  CHECK(issues.empty());

  // Every level partitions the full set.
  for (int level = tree.root_level(); level >= tree.min_level(); --level) {
    long covered = 0;
    for (const auto& cell : tree.partition_at(level))
      covered += static_cast<long>(cell.members.size());
    CHECK(covered == tree.size());
  }
}

TEST_CASE("partitions only grow as more points arrive") {
  const auto pts = rolled_sheet(160, 555);
  CoverTree tree(2.0);
  for (int i = 0; i < 80; ++i) tree.insert(pts[i]);

  std::map<int, std::map<int, std::set<int>>> before;
  for (int level = tree.root_level(); level >= tree.min_level(); --level)
    before[level] = cell_map(tree.partition_at(level));

  for (int i = 80; i < 160; ++i) tree.insert(pts[i]);

  for (const auto& [level, cells] : before) {
    const auto after = cell_map(tree.partition_at(level));
    for (const auto& [node, members] : cells) {
      REQUIRE(after.count(node) == 1);
      const auto& grown = after.at(node);
      for (int pi : members) CHECK(grown.count(pi) == 1);
    }
  }
}

TEST_CASE("chains walk parent links from the root") {
  const auto pts = rolled_sheet(60, 9001);
  CoverTree tree(2.0);
  for (const auto& p : pts) {
    const InsertOutcome out = tree.insert(p);
    REQUIRE_FALSE(out.chain.empty());
    CHECK(out.chain.front() == 0);
    CHECK(out.chain.back() == out.host);
    for (std::size_t k = 1; k < out.chain.size(); ++k)
      CHECK(tree.node(out.chain[k]).parent == out.chain[k - 1]);
  }
}

TEST_CASE("sequential inserts equal the batch build") {
  const auto pts = rolled_sheet(300, 4242);
  const CoverTree batch = CoverTree::build(pts);
  CoverTree stream(2.0);
  for (const auto& p : pts) stream.insert(p);

  REQUIRE(stream.node_count() == batch.node_count());
  for (int id = 0; id < batch.node_count(); ++id) {
    CHECK(stream.node(id).level == batch.node(id).level);
    CHECK(stream.node(id).parent == batch.node(id).parent);
    CHECK(stream.node(id).point_index == batch.node(id).point_index);
  }
  for (int level = batch.root_level(); level >= batch.min_level(); --level) {
    const auto a = cell_map(batch.partition_at(level));
    const auto b = cell_map(stream.partition_at(level));
    CHECK(a == b);
  }
}

TEST_CASE("subtree_points accounts for every point exactly once") {
  const auto pts = rolled_sheet(120, 31337);
  CoverTree tree = CoverTree::build(pts);
  const auto all = tree.subtree_points(0);
  CHECK(static_cast<int>(all.size()) == tree.size());

  // Children subtrees plus the node's own points tile the parent subtree.
  for (int id = 0; id < tree.node_count(); ++id) {
    const auto& n = tree.node(id);
    std::size_t total = 1 + n.residents.size();
    for (int ch : n.children) total += tree.subtree_points(ch).size();
    CHECK(tree.subtree_points(id).size() == total);
  }
}
