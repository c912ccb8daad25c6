#include "dycil/st_attention.hpp"

#include "dycil/encoders.hpp"

#include <algorithm>
#include <cmath>

namespace dycil {

SpatialAttnResult spatial_attention(ad::Tape& tp, ad::Var features,
                                    const Snapshot& snapshot,
                                    const std::vector<Edge>& causal_edges,
                                    const std::vector<int>& causal_rows,
                                    ad::Var scores,
                                    const SpatialAttnVars& params) {
  if (params.layers.empty())
    throw ConfigError("spatial_attention: at least one layer required");
  const int n = static_cast<int>(snapshot.node_ids.size());
  if (tp.value(features).rows() != n)
    throw ConfigError("spatial_attention: feature rows must equal node count");
  if (causal_rows.size() != causal_edges.size())
    throw std::invalid_argument("spatial_attention: score rows must match causal edges");

  // Directed pairs: each undirected causal edge contributes dst<-src both ways,
  // sharing one score row.
  std::vector<int> dst, src, score_rows;
  dst.reserve(2 * causal_edges.size());
  src.reserve(2 * causal_edges.size());
  score_rows.reserve(2 * causal_edges.size());
  for (std::size_t i = 0; i < causal_edges.size(); ++i) {
    const int u = snapshot.row_of(causal_edges[i].first);
    const int v = snapshot.row_of(causal_edges[i].second);
    dst.push_back(u);
    src.push_back(v);
    score_rows.push_back(causal_rows[i]);
    dst.push_back(v);
    src.push_back(u);
    score_rows.push_back(causal_rows[i]);
  }
  Eigen::VectorXd isolated = Eigen::VectorXd::Ones(n);
  for (int u : dst) isolated[u] = 0.0;

  SpatialAttnResult result;
  result.pair_dst = dst;

  ad::Var alpha;
  if (params.modulate_scores && !score_rows.empty())
    alpha = tp.rows(scores, score_rows);

  ad::Var layer_in = features;
  for (const auto& layer : params.layers) {
    const double dprime = static_cast<double>(tp.value(layer.wq).cols());
    ad::Var q = tp.matmul(layer_in, layer.wq);
    ad::Var k = tp.matmul(layer_in, layer.wk);
    ad::Var v = tp.matmul(layer_in, layer.wv);

    ad::Var out;
    if (!dst.empty()) {
      ad::Var logits =
          tp.scale(tp.row_dot(tp.rows(q, dst), tp.rows(k, src)), 1.0 / std::sqrt(dprime));
      if (alpha.valid()) logits = tp.mul(logits, alpha);
      ad::Var beta = tp.segment_softmax(logits, dst, n);
      result.layer_betas.push_back(beta);
      out = tp.scatter_rows_scaled(beta, tp.rows(v, src), dst, n);
      out = tp.add(out, tp.scale_rows(v, isolated));  // self-value fallback
    } else {
      out = v;
    }
    layer_in = out;
  }
  result.output = layer_in;
  return result;
}

TemporalAttnResult temporal_attention(ad::Tape& tp, ad::Var history_cat,
                                      const TemporalAttnVars& params) {
  const long m = tp.value(history_cat).rows();
  if (m == 0) throw std::invalid_argument("temporal_attention: empty history");
  if (tp.value(history_cat).cols() != tp.value(params.wq).rows())
    throw ConfigError("temporal_attention: history width must match projection rows");

  const double dprime = static_cast<double>(tp.value(params.wq).cols());
  ad::Var q = tp.rows(tp.matmul(history_cat, params.wq),
                      {static_cast<int>(m - 1)});  // query from the target row
  ad::Var k = tp.matmul(history_cat, params.wk);
  ad::Var v = tp.matmul(history_cat, params.wv);

  std::vector<int> expand(m, 0);
  std::vector<int> seg(m, 0);
  ad::Var logits =
      tp.scale(tp.row_dot(tp.rows(q, expand), k), 1.0 / std::sqrt(dprime));
  ad::Var gamma = tp.segment_softmax(logits, seg, 1);
  ad::Var out = tp.scatter_rows_scaled(gamma, v, seg, 1);
  return {out, gamma};
}

AttentionForward forward_invariant(ad::Tape& tp, const DynamicGraph& graph,
                                   const std::vector<SubgraphSplit>& splits,
                                   const std::vector<ad::Var>& st_inputs,
                                   const std::vector<ad::Var>& scores,
                                   ad::Var te_freqs,
                                   const SpatialAttnVars& spatial_params,
                                   const TemporalAttnVars& temporal_params,
                                   const std::vector<int>& target_ts) {
  if (target_ts.empty()) return {};
  const int t_max = *std::max_element(target_ts.begin(), target_ts.end());
  if (t_max > graph.T() || static_cast<int>(splits.size()) < t_max ||
      static_cast<int>(st_inputs.size()) < t_max ||
      static_cast<int>(scores.size()) < t_max)
    throw std::invalid_argument("forward_invariant: splits/inputs must cover all targets");

  AttentionForward fwd;
  std::vector<int> offset(t_max + 1, 0);
  std::vector<ad::Var> spatial_z;
  std::vector<ad::Var> te_rows;
  for (int t = 1; t <= t_max; ++t) {
    const Snapshot& snap = graph.at(t);
    auto res = spatial_attention(tp, st_inputs[t - 1], snap,
                                 splits[t - 1].causal_edges,
                                 splits[t - 1].causal_rows, scores[t - 1],
                                 spatial_params);
    spatial_z.push_back(res.output);
    fwd.spatial.push_back(std::move(res));
    offset[t] = offset[t - 1] + static_cast<int>(snap.node_ids.size());
    te_rows.push_back(temporal_encoding(tp, te_freqs, static_cast<double>(t)));
  }
  ad::Var z_all = spatial_z.size() == 1 ? spatial_z[0] : tp.vcat(spatial_z);
  ad::Var te_all = te_rows.size() == 1 ? te_rows[0] : tp.vcat(te_rows);

  const double dprime = static_cast<double>(tp.value(temporal_params.wq).cols());
  for (int t : target_ts) {
    InvariantEmbedding emb;
    emb.timestamp = t;
    // Flat history rows across eligible nodes; each node's own (u, t) row
    // doubles as the query source.
    std::vector<int> hist_z, hist_te, seg, query_z, query_te;
    for (NodeId u : graph.at(t).node_ids) {
      std::vector<int> rows_z, rows_te;
      for (int tq = 1; tq <= t; ++tq) {
        const Snapshot& snap = graph.at(tq);
        auto it = snap.index_of.find(u);
        if (it == snap.index_of.end()) continue;
        rows_z.push_back(offset[tq - 1] + it->second);
        rows_te.push_back(tq - 1);
      }
      const int target_row = static_cast<int>(emb.nodes.size());
      emb.nodes.push_back(u);
      query_z.push_back(offset[t - 1] + graph.at(t).row_of(u));
      query_te.push_back(t - 1);
      for (std::size_t i = 0; i < rows_z.size(); ++i) {
        hist_z.push_back(rows_z[i]);
        hist_te.push_back(rows_te[i]);
        seg.push_back(target_row);
      }
    }
    if (emb.nodes.empty()) {
      fwd.targets.push_back(std::move(emb));
      continue;
    }
    const int n_targets = static_cast<int>(emb.nodes.size());
    ad::Var h_flat = tp.hcat(tp.rows(z_all, hist_z), tp.rows(te_all, hist_te));
    ad::Var q_cat = tp.hcat(tp.rows(z_all, query_z), tp.rows(te_all, query_te));
    ad::Var q = tp.matmul(q_cat, temporal_params.wq);
    ad::Var k = tp.matmul(h_flat, temporal_params.wk);
    ad::Var v = tp.matmul(h_flat, temporal_params.wv);
    ad::Var logits =
        tp.scale(tp.row_dot(tp.rows(q, seg), k), 1.0 / std::sqrt(dprime));
    ad::Var gamma = tp.segment_softmax(logits, seg, n_targets);
    emb.z = tp.scatter_rows_scaled(gamma, v, seg, n_targets);
    emb.gamma = gamma;
    emb.gamma_seg = std::move(seg);
    fwd.targets.push_back(std::move(emb));
  }
  return fwd;
}

}  // namespace dycil
