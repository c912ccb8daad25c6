#pragma once

#include "dycil/causal_subgraph.hpp"

namespace dycil {

struct SpatialAttnLayerVars {
  ad::Var wq, wk, wv;
};

struct SpatialAttnVars {
  std::vector<SpatialAttnLayerVars> layers;  // stacked for L-hop receptive field
  // When false the attention runs without the edge-score modulation (alpha
  // treated as 1 everywhere), which is the "plain structural attention" path.
  bool modulate_scores = true;
};

struct TemporalAttnVars {
  ad::Var wq, wk, wv;  // (d' + d_te) -> d'
};

struct SpatialAttnResult {
  ad::Var output;                    // n x d'
  std::vector<ad::Var> layer_betas;  // per layer, one weight per directed pair
  std::vector<int> pair_dst;         // destination feature row per directed pair
};

// Causal-aware spatial self-attention over one snapshot. Each causal edge
// (u,v) contributes both directed pairs; attention logits are q.k / sqrt(d')
// multiplied by the edge score, normalized per destination node. A node with
// no causal neighbor falls back to its own value projection. Stacked layers
// reuse the same per-edge scores.
SpatialAttnResult spatial_attention(ad::Tape& tp, ad::Var features,
                                    const Snapshot& snapshot,
                                    const std::vector<Edge>& causal_edges,
                                    const std::vector<int>& causal_rows,
                                    ad::Var scores,
                                    const SpatialAttnVars& params);

struct TemporalAttnResult {
  ad::Var output;  // 1 x d'
  ad::Var gamma;   // m x 1, sums to 1
};

// Temporal self-attention over one node's history. `history_cat` holds rows
// [z_{t'} || TE(t')] for the node's presence timestamps in ascending order;
// the last row is the target timestamp and provides the query.
TemporalAttnResult temporal_attention(ad::Tape& tp, ad::Var history_cat,
                                      const TemporalAttnVars& params);

struct InvariantEmbedding {
  int timestamp = 0;            // target t
  std::vector<NodeId> nodes;    // ascending; nodes present at t with history
  ad::Var z;                    // |nodes| x d'
  ad::Var gamma;                // flattened temporal weights
  std::vector<int> gamma_seg;   // target row per flattened history entry
};

struct AttentionForward {
  std::vector<SpatialAttnResult> spatial;  // per snapshot 1..t_max
  std::vector<InvariantEmbedding> targets;
};

// Full two-stage pass: spatial attention per snapshot over the causal edge
// sets, then temporal attention per node history for every requested target
// timestamp. A node absent at some t' < t is simply skipped in its history;
// a node absent at t itself gets no embedding for target t.
AttentionForward forward_invariant(ad::Tape& tp, const DynamicGraph& graph,
                                   const std::vector<SubgraphSplit>& splits,
                                   const std::vector<ad::Var>& st_inputs,
                                   const std::vector<ad::Var>& scores,
                                   ad::Var te_freqs,
                                   const SpatialAttnVars& spatial_params,
                                   const TemporalAttnVars& temporal_params,
                                   const std::vector<int>& target_ts);

}  // namespace dycil
