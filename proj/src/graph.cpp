#include "dycil/graph.hpp"

#include <json.hpp>

#include <algorithm>
#include <deque>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace dycil {

namespace fs = std::filesystem;
using nlohmann::json;

int Snapshot::row_of(NodeId u) const {
  auto it = index_of.find(u);
  if (it == index_of.end())
    throw std::invalid_argument("node " + std::to_string(u) +
                                " not in snapshot t=" + std::to_string(timestamp));
  return it->second;
}

namespace {

void check_snapshot(const Snapshot& s, std::vector<Violation>& out) {
  const int t = s.timestamp;
  if (!std::is_sorted(s.node_ids.begin(), s.node_ids.end()) ||
      std::adjacent_find(s.node_ids.begin(), s.node_ids.end()) != s.node_ids.end())
    out.push_back({t, "node ids are not a sorted set"});
  if (s.features.rows() != static_cast<long>(s.node_ids.size()))
    out.push_back({t, "feature matrix has " + std::to_string(s.features.rows()) +
                          " rows for " + std::to_string(s.node_ids.size()) +
                          " nodes"});
  std::set<Edge> seen;
  for (const Edge& e : s.edges) {
    if (e.first == e.second)
      out.push_back({t, "self-loop on node " + std::to_string(e.first)});
    if (e.first > e.second)
      out.push_back({t, "non-canonical edge (" + std::to_string(e.first) + "," +
                            std::to_string(e.second) + ")"});
    if (!seen.insert(make_edge(e.first, e.second)).second)
      out.push_back({t, "duplicate edge (" + std::to_string(e.first) + "," +
                            std::to_string(e.second) + ")"});
    for (NodeId endpoint : {e.first, e.second}) {
      if (!std::binary_search(s.node_ids.begin(), s.node_ids.end(), endpoint))
        out.push_back({t, "edge endpoint " + std::to_string(endpoint) +
                              " not in node set"});
    }
  }
  if (s.labels) {
    for (const auto& [u, label] : *s.labels) {
      if (!std::binary_search(s.node_ids.begin(), s.node_ids.end(), u))
        out.push_back({t, "label on unknown node " + std::to_string(u)});
      if (label < 0) out.push_back({t, "negative label on node " + std::to_string(u)});
    }
  }
}

}  // namespace

Snapshot make_snapshot(int timestamp, std::vector<NodeId> node_ids,
                       std::vector<Edge> edges, Eigen::MatrixXd features,
                       std::optional<std::unordered_map<NodeId, int>> labels) {
  Snapshot s;
  s.timestamp = timestamp;
  s.node_ids = std::move(node_ids);
  std::sort(s.node_ids.begin(), s.node_ids.end());
  for (Edge& e : edges) e = make_edge(e.first, e.second);
  std::sort(edges.begin(), edges.end());
  s.edges = std::move(edges);
  s.features = std::move(features);
  s.labels = std::move(labels);
  for (std::size_t i = 0; i < s.node_ids.size(); ++i)
    s.index_of[s.node_ids[i]] = static_cast<int>(i);

  std::vector<Violation> violations;
  check_snapshot(s, violations);
  if (!violations.empty())
    throw DataError("snapshot " + std::to_string(timestamp) + ": " +
                    violations.front().message);
  return s;
}

const Snapshot& DynamicGraph::at(int t) const {
  if (t < 1 || t > T())
    throw std::invalid_argument("timestamp out of range: " + std::to_string(t));
  return snapshots[t - 1];
}

std::size_t DynamicGraph::global_node_count() const {
  std::set<NodeId> all;
  for (const auto& s : snapshots) all.insert(s.node_ids.begin(), s.node_ids.end());
  return all.size();
}

void check_split(const SplitSpec& split, int T) {
  if (!(1 <= split.train_end && split.train_end < split.val_end &&
        split.val_end <= split.test_end && split.test_end <= T))
    throw ConfigError("invalid split: require 1 <= train_end < val_end <= test_end <= T, got " +
                      std::to_string(split.train_end) + "/" + std::to_string(split.val_end) +
                      "/" + std::to_string(split.test_end) + " with T=" + std::to_string(T));
}

int node_degree(const Snapshot& snapshot, NodeId node) {
  if (!snapshot.has_node(node))
    throw std::invalid_argument("node " + std::to_string(node) +
                                " not in snapshot t=" + std::to_string(snapshot.timestamp));
  int deg = 0;
  for (const Edge& e : snapshot.edges)
    if (e.first == node || e.second == node) ++deg;
  return deg;
}

std::set<NodeId> l_hop_neighbors(const std::vector<Edge>& edge_set, NodeId node,
                                 int L) {
  if (L < 1) throw std::invalid_argument("l_hop_neighbors: L must be >= 1");
  std::unordered_map<NodeId, std::vector<NodeId>> adj;
  for (const Edge& e : edge_set) {
    adj[e.first].push_back(e.second);
    adj[e.second].push_back(e.first);
  }
  std::set<NodeId> visited{node};
  std::deque<std::pair<NodeId, int>> frontier{{node, 0}};
  std::set<NodeId> result;
  while (!frontier.empty()) {
    auto [u, depth] = frontier.front();
    frontier.pop_front();
    if (depth == L) continue;
    auto it = adj.find(u);
    if (it == adj.end()) continue;
    for (NodeId v : it->second) {
      if (visited.insert(v).second) {
        result.insert(v);
        frontier.emplace_back(v, depth + 1);
      }
    }
  }
  return result;
}

std::vector<Violation> validate(const DynamicGraph& graph) {
  std::vector<Violation> out;
  int expected_t = 1;
  for (const auto& s : graph.snapshots) {
    if (s.timestamp != expected_t)
      out.push_back({s.timestamp, "expected timestamp " + std::to_string(expected_t)});
    ++expected_t;
    if (s.features.cols() != graph.feature_dim)
      out.push_back({s.timestamp,
                     "feature dim " + std::to_string(s.features.cols()) +
                         " != graph feature_dim " + std::to_string(graph.feature_dim)});
    if (graph.num_classes && s.labels) {
      for (const auto& [u, label] : *s.labels)
        if (label >= *graph.num_classes)
          out.push_back({s.timestamp, "label " + std::to_string(label) +
                                          " out of range on node " + std::to_string(u)});
    }
    check_snapshot(s, out);
  }
  return out;
}

namespace {

std::ifstream open_input(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("missing or unreadable file: " + p.string());
  return in;
}

[[noreturn]] void parse_fail(const fs::path& p, int line_no, const std::string& line) {
  throw DataError(p.string() + ":" + std::to_string(line_no) +
                  ": parse error in '" + line + "'");
}

std::vector<NodeId> read_node_file(const fs::path& p) {
  auto in = open_input(p);
  std::vector<NodeId> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    NodeId u;
    if (!(ss >> u) || u < 0 || !(ss >> std::ws).eof()) parse_fail(p, line_no, line);
    out.push_back(u);
  }
  return out;
}

std::vector<Edge> read_edge_file(const fs::path& p) {
  auto in = open_input(p);
  std::vector<Edge> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    NodeId u, v;
    if (!(ss >> u >> v) || u < 0 || v < 0 || !(ss >> std::ws).eof())
      parse_fail(p, line_no, line);
    out.emplace_back(u, v);
  }
  return out;
}

Eigen::MatrixXd read_features_csv(const fs::path& p, std::size_t n_rows) {
  auto in = open_input(p);
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) parse_fail(p, line_no, line);
      } catch (const std::logic_error&) {
        parse_fail(p, line_no, line);
      }
    }
    if (row.empty()) parse_fail(p, line_no, line);
    if (!rows.empty() && row.size() != rows.front().size()) parse_fail(p, line_no, line);
    rows.push_back(std::move(row));
  }
  if (rows.size() != n_rows)
    throw DataError(p.string() + ": expected " + std::to_string(n_rows) +
                    " feature rows, found " + std::to_string(rows.size()));
  Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

std::unordered_map<NodeId, int> read_label_file(const fs::path& p) {
  auto in = open_input(p);
  std::unordered_map<NodeId, int> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    NodeId u;
    int label;
    if (!(ss >> u >> label) || u < 0 || !(ss >> std::ws).eof())
      parse_fail(p, line_no, line);
    out[u] = label;
  }
  return out;
}

void write_edges(const fs::path& p, const std::vector<Edge>& edges) {
  std::ofstream out(p);
  if (!out) throw DataError("cannot write file: " + p.string());
  for (const Edge& e : edges) out << e.first << ' ' << e.second << '\n';
}

}  // namespace

DynamicGraph load_dynamic_graph(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  auto meta_in = open_input(meta_path);
  json meta;
  try {
    meta_in >> meta;
  } catch (const json::exception& e) {
    throw DataError(meta_path.string() + ": " + e.what());
  }
  if (!meta.contains("T") || !meta.contains("feature_dim"))
    throw DataError(meta_path.string() + ": requires keys T and feature_dim");

  DynamicGraph g;
  const int T = meta["T"].get<int>();
  g.feature_dim = meta["feature_dim"].get<int>();
  if (meta.contains("num_classes") && !meta["num_classes"].is_null())
    g.num_classes = meta["num_classes"].get<int>();
  if (T < 1) throw DataError(meta_path.string() + ": T must be >= 1");

  for (int t = 1; t <= T; ++t) {
    const std::string stem = "snapshot_" + std::to_string(t);
    auto node_ids = read_node_file(dir / (stem + ".nodes"));
    auto edges = read_edge_file(dir / (stem + ".edges"));
    auto features = read_features_csv(dir / (stem + ".features.csv"), node_ids.size());
    std::optional<std::unordered_map<NodeId, int>> labels;
    const fs::path label_path = dir / (stem + ".labels");
    if (fs::exists(label_path)) labels = read_label_file(label_path);

    // The .nodes file dictates feature-row order; make_snapshot keeps ids
    // sorted, so permute the rows to match before constructing.
    std::vector<std::size_t> order(node_ids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return node_ids[a] < node_ids[b]; });
    std::vector<NodeId> sorted_ids(node_ids.size());
    Eigen::MatrixXd sorted_features(features.rows(), features.cols());
    for (std::size_t i = 0; i < order.size(); ++i) {
      sorted_ids[i] = node_ids[order[i]];
      sorted_features.row(i) = features.row(order[i]);
    }

    g.snapshots.push_back(make_snapshot(t, std::move(sorted_ids), std::move(edges),
                                        std::move(sorted_features), std::move(labels)));
    if (g.snapshots.back().features.cols() != g.feature_dim)
      throw DataError("snapshot " + std::to_string(t) + ": feature dim " +
                      std::to_string(g.snapshots.back().features.cols()) +
                      " != meta feature_dim " + std::to_string(g.feature_dim));
  }
  return g;
}

void save_dynamic_graph(const DynamicGraph& graph, const fs::path& dir) {
  fs::create_directories(dir);
  json meta;
  meta["T"] = graph.T();
  meta["feature_dim"] = graph.feature_dim;
  meta["num_classes"] = graph.num_classes ? json(*graph.num_classes) : json(nullptr);
  {
    std::ofstream out(dir / "meta.json");
    if (!out) throw DataError("cannot write meta.json in " + dir.string());
    out << meta.dump(2) << '\n';
  }
  for (const auto& s : graph.snapshots) {
    const std::string stem = "snapshot_" + std::to_string(s.timestamp);
    {
      std::ofstream out(dir / (stem + ".nodes"));
      for (NodeId u : s.node_ids) out << u << '\n';
    }
    write_edges(dir / (stem + ".edges"), s.edges);
    {
      std::ofstream out(dir / (stem + ".features.csv"));
      out << std::setprecision(17);
      for (long i = 0; i < s.features.rows(); ++i) {
        for (long j = 0; j < s.features.cols(); ++j) {
          if (j) out << ',';
          out << s.features(i, j);
        }
        out << '\n';
      }
    }
    if (s.labels) {
      std::ofstream out(dir / (stem + ".labels"));
      std::vector<std::pair<NodeId, int>> sorted(s.labels->begin(), s.labels->end());
      std::sort(sorted.begin(), sorted.end());
      for (const auto& [u, label] : sorted) out << u << ' ' << label << '\n';
    }
  }
}

std::vector<std::vector<Edge>> load_ground_truth_edges(const fs::path& dir, int T) {
  std::vector<std::vector<Edge>> out;
  for (int t = 1; t <= T; ++t) {
    auto edges = read_edge_file(dir / ("ground_truth_" + std::to_string(t) + ".edges"));
    for (Edge& e : edges) e = make_edge(e.first, e.second);
    std::sort(edges.begin(), edges.end());
    out.push_back(std::move(edges));
  }
  return out;
}

void save_ground_truth_edges(const std::vector<std::vector<Edge>>& per_snapshot,
                             const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < per_snapshot.size(); ++i)
    write_edges(dir / ("ground_truth_" + std::to_string(i + 1) + ".edges"),
                per_snapshot[i]);
}

bool has_ground_truth(const fs::path& dir) {
  return fs::exists(dir / "ground_truth_1.edges");
}

}  // namespace dycil
