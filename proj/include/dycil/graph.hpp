#pragma once

#include "dycil/common.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dycil {

using NodeId = std::int64_t;
using Edge = std::pair<NodeId, NodeId>;  // canonical: first < second

inline Edge make_edge(NodeId u, NodeId v) {
  return u < v ? Edge{u, v} : Edge{v, u};
}

// One discrete-time graph snapshot. Immutable after construction; node_ids is
// kept sorted and row i of `features` belongs to node_ids[i].
struct Snapshot {
  int timestamp = 0;  // 1-based
  std::vector<NodeId> node_ids;
  std::vector<Edge> edges;  // canonical, sorted, unique
  Eigen::MatrixXd features;
  std::optional<std::unordered_map<NodeId, int>> labels;

  std::unordered_map<NodeId, int> index_of;  // node id -> feature row

  bool has_node(NodeId u) const { return index_of.count(u) > 0; }
  int row_of(NodeId u) const;
};

// Builds index_of and normalizes edge storage; throws DataError on invariant
// violations (self-loop, duplicate edge, endpoint not in node set, feature
// row mismatch).
Snapshot make_snapshot(int timestamp, std::vector<NodeId> node_ids,
                       std::vector<Edge> edges, Eigen::MatrixXd features,
                       std::optional<std::unordered_map<NodeId, int>> labels = {});

struct DynamicGraph {
  std::vector<Snapshot> snapshots;  // timestamps 1..T
  int feature_dim = 0;
  std::optional<int> num_classes;

  int T() const { return static_cast<int>(snapshots.size()); }
  const Snapshot& at(int t) const;  // 1-based
  std::size_t global_node_count() const;
};

struct SplitSpec {
  int train_end = 0;
  int val_end = 0;
  int test_end = 0;
};

// Throws ConfigError unless 1 <= train_end < val_end <= test_end <= T.
void check_split(const SplitSpec& split, int T);

struct Violation {
  int snapshot_index;  // 1-based timestamp, 0 for graph-level issues
  std::string message;
};

int node_degree(const Snapshot& snapshot, NodeId node);

// Nodes reachable from `node` within L hops of `edge_set`, excluding `node`.
std::set<NodeId> l_hop_neighbors(const std::vector<Edge>& edge_set, NodeId node,
                                 int L);

std::vector<Violation> validate(const DynamicGraph& graph);

// Dataset directory I/O. Layout:
//   meta.json                  {"T":int,"feature_dim":int,"num_classes":int|null}
//   snapshot_<t>.nodes         one node id per line
//   snapshot_<t>.edges         "u v" per line
//   snapshot_<t>.features.csv  row i = features of i-th id in the .nodes file
//   snapshot_<t>.labels        optional, "u label" per line
DynamicGraph load_dynamic_graph(const std::filesystem::path& dir);
void save_dynamic_graph(const DynamicGraph& graph, const std::filesystem::path& dir);

// Ground-truth causal edge lists (written by the generator, consumed by the
// case study): ground_truth_<t>.edges in the same directory.
std::vector<std::vector<Edge>> load_ground_truth_edges(
    const std::filesystem::path& dir, int T);
void save_ground_truth_edges(const std::vector<std::vector<Edge>>& per_snapshot,
                             const std::filesystem::path& dir);
bool has_ground_truth(const std::filesystem::path& dir);

}  // namespace dycil
