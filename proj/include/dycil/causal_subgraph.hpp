#pragma once

#include "dycil/graph.hpp"
#include "dycil/tensor.hpp"

namespace dycil {

// Raw symmetric 0/1 adjacency over the snapshot's feature rows.
ad::SpMat adjacency_matrix(const Snapshot& snapshot, const std::vector<Edge>& edges);

// GCN propagation matrix with self-loops: D^{-1/2} (A + I) D^{-1/2}.
// With no edges this degenerates to the identity, so graph convolutions over
// an empty edge set reduce to per-node transforms.
ad::SpMat normalized_adjacency(const Snapshot& snapshot, const std::vector<Edge>& edges);

struct ScorerVars {
  ad::Var gcn1_w, gcn1_b;
  ad::Var gcn2_w, gcn2_b;
  ad::Var mlp1_w, mlp1_b;
  ad::Var mlp2_w, mlp2_b;
};

// Spatio-temporal edge scores: two rounds of normalized neighborhood
// aggregation with ReLU on the full snapshot, then an MLP on the endpoint
// concatenation, symmetrized over edge orientation and squashed by a
// logistic, so every score lies in (0,1). Row i of the result scores
// snapshot.edges[i].
ad::Var score_edges(ad::Tape& tp, const Snapshot& snapshot, ad::Var st_input,
                    const ScorerVars& params);

struct EdgeScores {
  int timestamp = 0;
  Eigen::VectorXd values;  // aligned with the snapshot's canonical edge order

  double score_of(const Snapshot& snapshot, Edge e) const;
};

struct SubgraphSplit {
  int timestamp = 0;
  double ratio = 0.0;
  std::vector<int> causal_rows;  // indices into snapshot.edges, ascending
  std::vector<int> variant_rows;
  std::vector<Edge> causal_edges;
  std::vector<Edge> variant_edges;
  EdgeScores scores;
};

// Top-r selection (K = round(|E| * r) clamped to [1, |E|]); ties broken by
// canonical edge order. Throws ConfigError for r outside (0,1] and DataError
// for an empty edge set.
SubgraphSplit split_subgraph(const Snapshot& snapshot,
                             const Eigen::VectorXd& scores, double r);

// (X_t^e, A_t^e): variant-edge adjacency over the full node set; features are
// the snapshot's own feature matrix.
struct VariantView {
  const Eigen::MatrixXd* features;
  ad::SpMat adjacency;  // raw 0/1
};
VariantView variant_subgraph_view(const SubgraphSplit& split, const Snapshot& snapshot);

// Exports causal/variant edge lists as <prefix>.causal / <prefix>.variant.
void export_split(const SubgraphSplit& split, const std::filesystem::path& prefix);

}  // namespace dycil
