#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dycil/metrics.hpp"

#include <random>

using namespace dycil;

TEST_CASE("auc on reference orderings") {
  CHECK(auc_score({{0.9, 1}, {0.8, 1}, {0.2, 0}, {0.1, 0}}) == doctest::Approx(1.0));
  CHECK(auc_score({{0.5, 1}, {0.5, 0}, {0.5, 1}, {0.5, 0}}) == doctest::Approx(0.5));
  CHECK(auc_score({{0.9, 1}, {0.8, 0}, {0.7, 1}, {0.1, 0}}) == doctest::Approx(0.75));
  CHECK_THROWS_AS(auc_score({{0.4, 1}, {0.2, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(auc_score({}), std::invalid_argument);
}

TEST_CASE("auc is invariant under strictly monotone score transforms") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> score(-2.0, 2.0);
  std::bernoulli_distribution label(0.4);
  std::vector<std::pair<double, int>> scored;
  for (int i = 0; i < 60; ++i) scored.emplace_back(score(rng), label(rng) ? 1 : 0);
  const double base = auc_score(scored);
  auto transformed = scored;
  for (auto& [s, y] : transformed) s = std::exp(3.0 * s) + 7.0;
  CHECK(auc_score(transformed) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("accuracy basic cases") {
  CHECK(accuracy({1, 2, 3}, {1, 2, 3}) == 1.0);
  CHECK(accuracy({1, 2, 3}, {3, 1, 2}) == 0.0);
  CHECK(accuracy({0, 1, 1, 0}, {0, 1, 0, 0}) == doctest::Approx(0.75));
  CHECK_THROWS_AS(accuracy({1}, {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(accuracy({}, {}), std::invalid_argument);
}

TEST_CASE("negative sampling: forced, exhaustive, and deterministic") {
  auto snap = make_snapshot(1, {0, 1, 2}, {{0, 1}}, Eigen::MatrixXd::Zero(3, 1));
  auto forced = negative_sample(snap, 2, 11);
  REQUIRE(forced.size() == 2);
  CHECK(forced[0] == Edge{0, 2});
  CHECK(forced[1] == Edge{1, 2});

  // Complete graph: zero non-edges.
  auto complete = make_snapshot(1, {0, 1, 2}, {{0, 1}, {0, 2}, {1, 2}},
                                Eigen::MatrixXd::Zero(3, 1));
  CHECK_THROWS_AS(negative_sample(complete, 1, 1), std::invalid_argument);

  auto a = negative_sample(snap, 1, 42);
  auto b = negative_sample(snap, 1, 42);
  CHECK(a == b);
}

TEST_CASE("negative samples avoid existing edges and self pairs") {
  std::vector<NodeId> ids;
  for (NodeId i = 0; i < 30; ++i) ids.push_back(i);
  std::vector<Edge> edges;
  for (NodeId i = 0; i + 1 < 30; ++i) edges.push_back({i, i + 1});
  auto snap = make_snapshot(1, ids, edges, Eigen::MatrixXd::Zero(30, 1));
  std::set<Edge> edge_set(edges.begin(), edges.end());
  auto negs = negative_sample(snap, 100, 9);
  CHECK(negs.size() == 100);
  std::set<Edge> seen;
  for (const Edge& e : negs) {
    CHECK(e.first < e.second);
    CHECK(!edge_set.count(e));
    CHECK(seen.insert(e).second);  // without replacement
  }
}
