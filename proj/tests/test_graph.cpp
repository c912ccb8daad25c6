#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dycil/graph.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

using namespace dycil;
namespace fs = std::filesystem;

namespace {

Eigen::MatrixXd random_features(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = dist(rng);
  return m;
}

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("dycil_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

DynamicGraph small_graph() {
  DynamicGraph g;
  g.feature_dim = 2;
  g.snapshots.push_back(make_snapshot(
      1, {0, 1, 2}, {{0, 1}, {1, 2}}, random_features(3, 2, 1)));
  g.snapshots.push_back(make_snapshot(
      2, {0, 1, 2, 3}, {{0, 2}, {2, 3}, {0, 3}}, random_features(4, 2, 2),
      std::unordered_map<NodeId, int>{{0, 0}, {3, 1}}));
  g.num_classes = 2;
  return g;
}

}  // namespace

TEST_CASE("make_snapshot canonicalizes and rejects bad input") {
  auto s = make_snapshot(1, {2, 0, 1}, {{2, 0}, {1, 2}}, random_features(3, 2, 3));
  CHECK(s.node_ids == std::vector<NodeId>{0, 1, 2});
  CHECK(s.edges == std::vector<Edge>{{0, 2}, {1, 2}});

  CHECK_THROWS_AS(make_snapshot(1, {0, 1}, {{0, 0}}, random_features(2, 2, 4)),
                  DataError);
  CHECK_THROWS_AS(make_snapshot(1, {0, 1}, {{0, 1}, {1, 0}}, random_features(2, 2, 4)),
                  DataError);
  CHECK_THROWS_AS(make_snapshot(1, {0, 1}, {{0, 5}}, random_features(2, 2, 4)),
                  DataError);
  CHECK_THROWS_AS(make_snapshot(1, {0, 1}, {}, random_features(3, 2, 4)), DataError);
}

TEST_CASE("node_degree on standard shapes") {
  auto iso = make_snapshot(1, {0, 1, 2}, {{1, 2}}, random_features(3, 1, 5));
  CHECK(node_degree(iso, 0) == 0);

  auto tri = make_snapshot(1, {0, 1, 2}, {{0, 1}, {1, 2}, {0, 2}},
                           random_features(3, 1, 6));
  CHECK(node_degree(tri, 1) == 2);

  auto star = make_snapshot(1, {0, 1, 2, 3, 4},
                            {{0, 1}, {0, 2}, {0, 3}, {0, 4}},
                            random_features(5, 1, 7));
  CHECK(node_degree(star, 0) == 4);
  CHECK_THROWS_AS(node_degree(star, 99), std::invalid_argument);
}

TEST_CASE("degree sum equals twice the edge count") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    const int n = 12;
    std::vector<Edge> edges;
    for (NodeId u = 0; u < n; ++u)
      for (NodeId v = u + 1; v < n; ++v)
        if (rng() % 3 == 0) edges.emplace_back(u, v);
    std::vector<NodeId> ids(n);
    for (int i = 0; i < n; ++i) ids[i] = i;
    auto s = make_snapshot(1, ids, edges, random_features(n, 1, rep));
    long total = 0;
    for (NodeId u : s.node_ids) total += node_degree(s, u);
    CHECK(total == 2 * static_cast<long>(s.edges.size()));
  }
}

TEST_CASE("l_hop_neighbors on a path and against a BFS oracle") {
  std::vector<Edge> path = {{0, 1}, {1, 2}};
  CHECK(l_hop_neighbors(path, 0, 1) == std::set<NodeId>{1});
  CHECK(l_hop_neighbors(path, 0, 2) == std::set<NodeId>{1, 2});
  CHECK(l_hop_neighbors({}, 0, 1).empty());
  CHECK_THROWS_AS(l_hop_neighbors(path, 0, 0), std::invalid_argument);

  // Oracle: iterate set expansion L times over the adjacency.
  std::mt19937_64 rng(13);
  std::vector<Edge> edges;
  for (NodeId u = 0; u < 10; ++u)
    for (NodeId v = u + 1; v < 10; ++v)
      if (rng() % 4 == 0) edges.emplace_back(u, v);
  auto oracle = [&](NodeId start, int L) {
    std::set<NodeId> reach{start};
    for (int step = 0; step < L; ++step) {
      std::set<NodeId> next = reach;
      for (const Edge& e : edges) {
        if (reach.count(e.first)) next.insert(e.second);
        if (reach.count(e.second)) next.insert(e.first);
      }
      reach = next;
    }
    reach.erase(start);
    return reach;
  };
  for (NodeId start = 0; start < 10; ++start) {
    for (int L = 1; L <= 3; ++L) {
      CHECK(l_hop_neighbors(edges, start, L) == oracle(start, L));
      // Monotone in L.
      auto small = l_hop_neighbors(edges, start, L);
      auto big = l_hop_neighbors(edges, start, L + 1);
      CHECK(std::includes(big.begin(), big.end(), small.begin(), small.end()));
    }
  }
}

TEST_CASE("validate enumerates violations without throwing") {
  auto g = small_graph();
  CHECK(validate(g).empty());

  // Duplicate edge, assembled without make_snapshot on purpose.
  Snapshot bad;
  bad.timestamp = 3;
  bad.node_ids = {0, 1};
  bad.edges = {{0, 1}, {0, 1}};
  bad.features = random_features(2, 2, 8);
  bad.index_of = {{0, 0}, {1, 1}};
  g.snapshots.push_back(bad);
  auto report = validate(g);
  REQUIRE(report.size() == 1);
  CHECK(report[0].snapshot_index == 3);
  CHECK(report[0].message.find("duplicate") != std::string::npos);

  g.snapshots.back().edges = {{0, 1}};
  g.snapshots.back().features = random_features(5, 2, 9);
  report = validate(g);
  REQUIRE(report.size() == 1);
  CHECK(report[0].message.find("feature matrix") != std::string::npos);
}

TEST_CASE("dataset round-trip is bit-exact") {
  auto g = small_graph();
  auto dir = temp_dir("roundtrip");
  save_dynamic_graph(g, dir);
  auto g2 = load_dynamic_graph(dir);

  REQUIRE(g2.T() == 2);
  CHECK(g2.at(1).node_ids.size() == 3);
  CHECK(g2.feature_dim == 2);
  REQUIRE(g2.num_classes.has_value());
  CHECK(*g2.num_classes == 2);
  for (int t = 1; t <= 2; ++t) {
    CHECK(g2.at(t).edges == g.at(t).edges);
    CHECK(g2.at(t).node_ids == g.at(t).node_ids);
    CHECK((g2.at(t).features.array() == g.at(t).features.array()).all());
  }
  REQUIRE(g2.at(2).labels.has_value());
  CHECK(g2.at(2).labels->at(3) == 1);
  fs::remove_all(dir);
}

TEST_CASE("loader reports self-loops and parse errors with context") {
  auto dir = temp_dir("badload");
  {
    std::ofstream meta(dir / "meta.json");
    meta << R"({"T":1,"feature_dim":1,"num_classes":null})";
    std::ofstream nodes(dir / "snapshot_1.nodes");
    nodes << "5\n6\n";
    std::ofstream edges(dir / "snapshot_1.edges");
    edges << "5 5\n";
    std::ofstream feats(dir / "snapshot_1.features.csv");
    feats << "1.0\n2.0\n";
  }
  CHECK_THROWS_WITH_AS(load_dynamic_graph(dir),
                       doctest::Contains("self-loop"), DataError);

  {
    std::ofstream edges(dir / "snapshot_1.edges");
    edges << "5 6\nnot an edge\n";
  }
  try {
    load_dynamic_graph(dir);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }

  {
    std::ofstream edges(dir / "snapshot_1.edges");
    edges << "5 6\n";
  }
  fs::remove(dir / "snapshot_1.features.csv");
  CHECK_THROWS_WITH_AS(load_dynamic_graph(dir),
                       doctest::Contains("features.csv"), DataError);
  fs::remove_all(dir);
}

TEST_CASE("split spec bounds") {
  check_split({1, 2, 3}, 3);
  CHECK_THROWS_AS(check_split({2, 2, 3}, 3), ConfigError);
  CHECK_THROWS_AS(check_split({1, 2, 4}, 3), ConfigError);
  CHECK_THROWS_AS(check_split({0, 1, 2}, 3), ConfigError);
}
