#pragma once

#include "dycil/graph.hpp"

#include <random>
#include <set>

namespace dycil {

// Exact rank-based AUC (Mann-Whitney), ties counted 1/2. Input pairs are
// (score, binary label). Throws std::invalid_argument unless both classes are
// present.
double auc_score(const std::vector<std::pair<double, int>>& scored);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

// Uniform sample without replacement of `count` unordered non-adjacent node
// pairs from `nodes` (sorted, distinct), excluding self-pairs and `edges`.
// Deterministic for a given rng state. Throws std::invalid_argument when
// count exceeds the non-edge population.
std::vector<Edge> sample_non_edges(const std::vector<NodeId>& nodes,
                                   const std::set<Edge>& edges, std::size_t count,
                                   std::mt19937_64& rng);

// Snapshot-level negative sampling over the full node set.
std::vector<Edge> negative_sample(const Snapshot& snapshot, std::size_t count,
                                  std::uint64_t seed);

}  // namespace dycil
