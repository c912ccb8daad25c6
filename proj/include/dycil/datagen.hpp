#pragma once

#include "dycil/causal_subgraph.hpp"
#include "dycil/graph.hpp"

#include <array>

namespace dycil {

enum class MotifKind { house, tree, ladder, wheel, cross_grid, star };
MotifKind motif_from_string(const std::string& name);
const char* to_string(MotifKind kind);

// Canonical small instance on local ids 0..n_nodes-1.
struct MotifTemplate {
  int n_nodes;
  std::vector<std::pair<int, int>> edges;
};
const MotifTemplate& motif_template(MotifKind kind);

// House roles double as the three node classes.
enum HouseRole : int { role_top = 0, role_middle = 1, role_bottom = 2 };

// One planted house: apex, the two middle nodes, the two base nodes.
struct House {
  NodeId top, m1, m2, b1, b2;
  std::array<Edge, 6> edge_list() const;
};

struct MotifGraphConfig {
  int T = 3;
  double count_slope = 2.0;    // a in a*(t+b)+eps
  double count_offset = 1.0;   // b
  int epsilon_max = 0;         // eps drawn uniformly from [0, epsilon_max]
  std::vector<MotifKind> train_kinds = {MotifKind::tree, MotifKind::ladder,
                                        MotifKind::wheel};
  MotifKind val_kind = MotifKind::cross_grid;
  MotifKind test_kind = MotifKind::star;
  SplitSpec split{1, 2, 3};   // decides which variant family each snapshot uses
  int feature_dim = 8;
  double perturbation_ratio = 1.0;  // perturbation edges = ratio * |E_t^c|
  double variant_fill = 1.0;        // variant node budget as fraction of causal nodes
  std::uint64_t seed = 0;

  void check() const;
};

struct TemporalMotifData {
  DynamicGraph graph;
  std::vector<std::vector<Edge>> ground_truth;  // house edges per snapshot
  std::vector<std::vector<House>> houses;       // planted houses per snapshot
};

// Houses persist once planted and grow in number as a*(t+b)+eps; the variant
// subgraph is rebuilt per snapshot from that snapshot's split family, node
// budget capped at the causal node count; labels cover house nodes only;
// features are i.i.d. standard normal.
TemporalMotifData generate_temporal_motif(const MotifGraphConfig& config);

struct HouseMatch {
  NodeId top, m1, m2, b1, b2;
};

// Exact enumeration of edge-induced house subgraphs, deduplicated up to the
// mirror automorphism.
std::vector<HouseMatch> find_house_motifs(const std::vector<Edge>& edges);
std::size_t count_house_motifs(const std::vector<Edge>& edges);

// Fraction of houses whose six edges all lie in the causal edge set.
double motif_recall(const std::vector<Edge>& causal_edges,
                    const std::vector<HouseMatch>& houses);
double motif_recall(const SubgraphSplit& split, const std::vector<HouseMatch>& houses);

struct CollabShiftConfig {
  double p_bar = 0.5;        // shift level for snapshots t <= eval_from
  double p_bar_eval = 0.5;   // shift level for snapshots t > eval_from
  int eval_from = 1 << 30;   // boundary between training and evaluation shifts
  double sigma_amp = 0.0;    // cosine amplitude
  int spurious_dim = 8;
  int train_steps = 200;     // spurious-feature fitting budget per timestamp
  double train_lr = 1e-2;
  std::uint64_t seed = 0;

  double p_of(int t) const;  // clip(p_bar(t) + sigma_amp*cos(t), 0, 1)
};

// Augments base features with spurious features fitted to reconstruct a
// p(t)-mixed sample of next-snapshot links. The output has T-1 snapshots
// (the last base snapshot has no successor) and feature width
// base.feature_dim + spurious_dim.
DynamicGraph generate_synthetic_collab(const DynamicGraph& base,
                                       const CollabShiftConfig& config);

// Stochastic-block-model style dynamic base graph with persistent community
// structure: the invariant signal for desk-scale link prediction.
struct RandomBaseConfig {
  int n_nodes = 500;
  int T = 8;
  int communities = 5;
  double p_in = 0.03;
  double p_out = 0.002;
  int feature_dim = 8;
  std::uint64_t seed = 0;
};
DynamicGraph generate_random_base(const RandomBaseConfig& config);

}  // namespace dycil
