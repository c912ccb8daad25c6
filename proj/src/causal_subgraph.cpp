#include "dycil/causal_subgraph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace dycil {

ad::SpMat adjacency_matrix(const Snapshot& snapshot, const std::vector<Edge>& edges) {
  const int n = static_cast<int>(snapshot.node_ids.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(edges.size() * 2);
  for (const Edge& e : edges) {
    const int u = snapshot.row_of(e.first);
    const int v = snapshot.row_of(e.second);
    trip.emplace_back(u, v, 1.0);
    trip.emplace_back(v, u, 1.0);
  }
  ad::SpMat a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

ad::SpMat normalized_adjacency(const Snapshot& snapshot, const std::vector<Edge>& edges) {
  const int n = static_cast<int>(snapshot.node_ids.size());
  Eigen::VectorXd deg = Eigen::VectorXd::Ones(n);  // self-loop
  for (const Edge& e : edges) {
    deg[snapshot.row_of(e.first)] += 1.0;
    deg[snapshot.row_of(e.second)] += 1.0;
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(edges.size() * 2 + n);
  auto norm = [&](int i, int j) { return 1.0 / std::sqrt(deg[i] * deg[j]); };
  for (int i = 0; i < n; ++i) trip.emplace_back(i, i, norm(i, i));
  for (const Edge& e : edges) {
    const int u = snapshot.row_of(e.first);
    const int v = snapshot.row_of(e.second);
    trip.emplace_back(u, v, norm(u, v));
    trip.emplace_back(v, u, norm(v, u));
  }
  ad::SpMat a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

ad::Var score_edges(ad::Tape& tp, const Snapshot& snapshot, ad::Var st_input,
                    const ScorerVars& p) {
  if (tp.value(st_input).rows() != static_cast<long>(snapshot.node_ids.size()))
    throw ConfigError("score_edges: st_input row count must equal node count");
  if (tp.value(st_input).cols() != tp.value(p.gcn1_w).rows() ||
      tp.value(p.gcn1_w).cols() != tp.value(p.gcn2_w).rows() ||
      2 * tp.value(p.gcn2_w).cols() != tp.value(p.mlp1_w).rows() ||
      tp.value(p.mlp1_w).cols() != tp.value(p.mlp2_w).rows() ||
      tp.value(p.mlp2_w).cols() != 1)
    throw ConfigError("score_edges: parameter dimensions do not chain");
  if (snapshot.edges.empty())
    throw DataError("score_edges: snapshot " + std::to_string(snapshot.timestamp) +
                    " has no edges");

  const ad::SpMat ahat = normalized_adjacency(snapshot, snapshot.edges);
  ad::Var h1 = tp.relu(tp.add_rowvec(tp.matmul(tp.spmm(ahat, st_input), p.gcn1_w), p.gcn1_b));
  ad::Var h2 = tp.relu(tp.add_rowvec(tp.matmul(tp.spmm(ahat, h1), p.gcn2_w), p.gcn2_b));

  std::vector<int> u_rows, v_rows;
  u_rows.reserve(snapshot.edges.size());
  v_rows.reserve(snapshot.edges.size());
  for (const Edge& e : snapshot.edges) {
    u_rows.push_back(snapshot.row_of(e.first));
    v_rows.push_back(snapshot.row_of(e.second));
  }
  ad::Var hu = tp.rows(h2, u_rows);
  ad::Var hv = tp.rows(h2, v_rows);

  auto mlp = [&](ad::Var pair) {
    ad::Var hidden = tp.relu(tp.add_rowvec(tp.matmul(pair, p.mlp1_w), p.mlp1_b));
    return tp.add_rowvec(tp.matmul(hidden, p.mlp2_w), p.mlp2_b);
  };
  ad::Var fwd = mlp(tp.hcat(hu, hv));
  ad::Var rev = mlp(tp.hcat(hv, hu));
  return tp.sigmoid(tp.scale(tp.add(fwd, rev), 0.5));
}

double EdgeScores::score_of(const Snapshot& snapshot, Edge e) const {
  const Edge canon = make_edge(e.first, e.second);
  auto it = std::lower_bound(snapshot.edges.begin(), snapshot.edges.end(), canon);
  if (it == snapshot.edges.end() || *it != canon)
    throw std::invalid_argument("edge not in snapshot");
  return values[it - snapshot.edges.begin()];
}

SubgraphSplit split_subgraph(const Snapshot& snapshot,
                             const Eigen::VectorXd& scores, double r) {
  if (!(r > 0.0 && r <= 1.0))
    throw ConfigError("split_subgraph: causal ratio must lie in (0,1]");
  const long m = static_cast<long>(snapshot.edges.size());
  if (m == 0)
    throw DataError("split_subgraph: snapshot " + std::to_string(snapshot.timestamp) +
                    " has no edges");
  if (scores.size() != m)
    throw std::invalid_argument("split_subgraph: scores must cover every edge");

  long k = std::llround(static_cast<double>(m) * r);
  k = std::clamp(k, 1L, m);

  // Stable sort on descending score keeps canonical edge order as tie-break.
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });

  SubgraphSplit split;
  split.timestamp = snapshot.timestamp;
  split.ratio = r;
  split.scores.timestamp = snapshot.timestamp;
  split.scores.values = scores;
  split.causal_rows.assign(order.begin(), order.begin() + k);
  split.variant_rows.assign(order.begin() + k, order.end());
  std::sort(split.causal_rows.begin(), split.causal_rows.end());
  std::sort(split.variant_rows.begin(), split.variant_rows.end());
  for (int i : split.causal_rows) split.causal_edges.push_back(snapshot.edges[i]);
  for (int i : split.variant_rows) split.variant_edges.push_back(snapshot.edges[i]);
  return split;
}

VariantView variant_subgraph_view(const SubgraphSplit& split, const Snapshot& snapshot) {
  if (split.timestamp != snapshot.timestamp)
    throw std::invalid_argument("variant_subgraph_view: split/snapshot mismatch");
  return {&snapshot.features, adjacency_matrix(snapshot, split.variant_edges)};
}

void export_split(const SubgraphSplit& split, const std::filesystem::path& prefix) {
  auto write = [](const std::filesystem::path& p, const std::vector<Edge>& edges) {
    std::ofstream out(p);
    if (!out) throw DataError("cannot write file: " + p.string());
    for (const Edge& e : edges) out << e.first << ' ' << e.second << '\n';
  };
  write(prefix.string() + ".causal", split.causal_edges);
  write(prefix.string() + ".variant", split.variant_edges);
}

}  // namespace dycil
