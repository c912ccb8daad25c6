#include "dycil/metrics.hpp"

#include "dycil/common.hpp"

#include <algorithm>
#include <numeric>

namespace dycil {

double auc_score(const std::vector<std::pair<double, int>>& scored) {
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& [s, y] : scored) (y != 0 ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("auc_score: need at least one positive and one negative");

  std::vector<int> order(scored.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return scored[a].first < scored[b].first;
  });

  // Average ranks across tied scores.
  std::vector<double> rank(scored.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() &&
           scored[order[j + 1]].first == scored[order[i]].first)
      ++j;
    const double avg = 0.5 * static_cast<double>((i + 1) + (j + 1));
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }

  double pos_rank_sum = 0.0;
  for (std::size_t k = 0; k < scored.size(); ++k)
    if (scored[k].second != 0) pos_rank_sum += rank[k];
  const double u = pos_rank_sum - 0.5 * static_cast<double>(n_pos) *
                                      static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size() || predicted.empty())
    throw std::invalid_argument("accuracy: inputs must be equal-length and nonempty");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == truth[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::vector<Edge> sample_non_edges(const std::vector<NodeId>& nodes,
                                   const std::set<Edge>& edges, std::size_t count,
                                   std::mt19937_64& rng) {
  const std::size_t n = nodes.size();
  const std::size_t total_pairs = n < 2 ? 0 : n * (n - 1) / 2;
  if (total_pairs < edges.size() + count)
    throw std::invalid_argument("sample_non_edges: count exceeds non-edge population");
  const std::size_t population = total_pairs - edges.size();

  std::set<Edge> chosen;
  if (population <= 4 * count || population < 1024) {
    // Small population: enumerate, shuffle, take the prefix.
    std::vector<Edge> pool;
    pool.reserve(population);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) {
        Edge e = make_edge(nodes[a], nodes[b]);
        if (!edges.count(e)) pool.push_back(e);
      }
    std::shuffle(pool.begin(), pool.end(), rng);
    chosen.insert(pool.begin(), pool.begin() + count);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    while (chosen.size() < count) {
      const std::size_t a = pick(rng);
      const std::size_t b = pick(rng);
      if (a == b) continue;
      Edge e = make_edge(nodes[a], nodes[b]);
      if (edges.count(e)) continue;
      chosen.insert(e);
    }
  }
  return {chosen.begin(), chosen.end()};
}

std::vector<Edge> negative_sample(const Snapshot& snapshot, std::size_t count,
                                  std::uint64_t seed) {
  std::set<Edge> edges(snapshot.edges.begin(), snapshot.edges.end());
  auto rng = make_rng(seed);
  return sample_non_edges(snapshot.node_ids, edges, count, rng);
}

}  // namespace dycil
