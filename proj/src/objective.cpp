#include "dycil/objective.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

namespace dycil {

const char* to_string(TaskKind task) {
  return task == TaskKind::link_prediction ? "link_prediction" : "node_classification";
}

std::string AblationFlags::tag() const {
  std::vector<std::string> parts;
  if (no_sg) parts.push_back("SG");
  if (no_am) parts.push_back("AM");
  if (no_eg) parts.push_back("EG");
  if (parts.empty()) return "full";
  std::string out = "w/o " + parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) out += "+" + parts[i];
  return out;
}

void TrainConfig::check() const {
  if (!(causal_ratio > 0.0 && causal_ratio <= 1.0))
    throw ConfigError("causal_ratio must lie in (0,1]");
  if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (interventions_per_t < 1) throw ConfigError("interventions_per_t must be >= 1");
  if (hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
  if (lr <= 0.0) throw ConfigError("lr must be > 0");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (patience < 1 || patience > max_epochs)
    throw ConfigError("patience must lie in [1, max_epochs]");
  if (attn_layers < 1) throw ConfigError("attn_layers must be >= 1");
  if (max_degree < 1) throw ConfigError("max_degree must be >= 1");
}

ModelDims dims_for(const DynamicGraph& graph, const TrainConfig& config) {
  ModelDims dims;
  dims.task = config.task;
  dims.d_in = graph.feature_dim;
  dims.hidden = config.hidden_dim;
  dims.attn_layers = config.attn_layers;
  dims.max_degree = config.max_degree;
  if (dims.d_in < 2 || dims.d_in % 2 != 0)
    throw ConfigError("feature_dim must be even (temporal encoding width)");
  if (config.task == TaskKind::node_classification) {
    if (!graph.num_classes || *graph.num_classes < 2)
      throw ConfigError("node classification requires num_classes >= 2");
    dims.num_classes = *graph.num_classes;
  }
  return dims;
}

namespace {

std::mt19937_64 param_rng(std::uint64_t seed, const std::string& name) {
  return make_rng(derive_seed(seed, tag_hash("param"), tag_hash(name)));
}

void create_glorot(ad::ParamStore& store, const std::string& name, int rows,
                   int cols, std::uint64_t seed) {
  auto rng = param_rng(seed, name);
  store.create(name, ad::glorot(rows, cols, rng));
}

void create_zeros(ad::ParamStore& store, const std::string& name, int rows, int cols) {
  store.create(name, ad::Mat::Zero(rows, cols));
}

}  // namespace

void init_params(ad::ParamStore& store, const ModelDims& dims, std::uint64_t seed) {
  const int h = dims.hidden;
  const int d = dims.d_in;
  create_glorot(store, "enc.proj", d, h, seed);
  create_glorot(store, "enc.deg_table", dims.max_degree + 2, d, seed);
  store.create("enc.te_freq", default_te_frequencies(d));

  create_glorot(store, "sg.gcn1.w", h, h, seed);
  create_zeros(store, "sg.gcn1.b", 1, h);
  create_glorot(store, "sg.gcn2.w", h, h, seed);
  create_zeros(store, "sg.gcn2.b", 1, h);
  create_glorot(store, "sg.mlp1.w", 2 * h, h, seed);
  create_zeros(store, "sg.mlp1.b", 1, h);
  create_glorot(store, "sg.mlp2.w", h, 1, seed);
  create_zeros(store, "sg.mlp2.b", 1, 1);

  for (int l = 0; l < dims.attn_layers; ++l) {
    const std::string base = "attn.sp" + std::to_string(l) + ".";
    create_glorot(store, base + "wq", h, h, seed);
    create_glorot(store, base + "wk", h, h, seed);
    create_glorot(store, base + "wv", h, h, seed);
  }
  create_glorot(store, "attn.t.wq", h + d, h, seed);
  create_glorot(store, "attn.t.wk", h + d, h, seed);
  create_glorot(store, "attn.t.wv", h + d, h, seed);

  create_glorot(store, "env.post.gcn1.w", d, h, seed);
  create_zeros(store, "env.post.gcn1.b", 1, h);
  create_glorot(store, "env.post.gcn2.w", h, 2 * h, seed);
  create_zeros(store, "env.post.gcn2.b", 1, 2 * h);
  create_glorot(store, "env.prior.gcn.w", d, h, seed);
  create_zeros(store, "env.prior.gcn.b", 1, h);
  create_glorot(store, "env.prior.mlp1.w", h + d, h, seed);
  create_zeros(store, "env.prior.mlp1.b", 1, h);
  create_glorot(store, "env.prior.mlp2.w", h, 2 * h, seed);
  create_zeros(store, "env.prior.mlp2.b", 1, 2 * h);

  if (dims.task == TaskKind::node_classification) {
    create_glorot(store, "clf.node.w", h, dims.num_classes, seed);
    create_zeros(store, "clf.node.b", 1, dims.num_classes);
    create_glorot(store, "clf.env.w", h, dims.num_classes, seed);
    create_zeros(store, "clf.env.b", 1, dims.num_classes);
  } else {
    create_glorot(store, "clf.env.w", h, h, seed);
    create_zeros(store, "clf.env.b", 1, h);
  }
}

ModelVars bind_params(ad::Tape& tp, const ModelDims& dims, bool modulate_scores) {
  ModelVars mv;
  mv.enc_proj = tp.param("enc.proj");
  mv.deg_table = tp.param("enc.deg_table");
  mv.te_freq = tp.param("enc.te_freq");
  mv.scorer = {tp.param("sg.gcn1.w"), tp.param("sg.gcn1.b"),
               tp.param("sg.gcn2.w"), tp.param("sg.gcn2.b"),
               tp.param("sg.mlp1.w"), tp.param("sg.mlp1.b"),
               tp.param("sg.mlp2.w"), tp.param("sg.mlp2.b")};
  for (int l = 0; l < dims.attn_layers; ++l) {
    const std::string base = "attn.sp" + std::to_string(l) + ".";
    mv.spatial.layers.push_back(
        {tp.param(base + "wq"), tp.param(base + "wk"), tp.param(base + "wv")});
  }
  mv.spatial.modulate_scores = modulate_scores;
  mv.temporal = {tp.param("attn.t.wq"), tp.param("attn.t.wk"), tp.param("attn.t.wv")};
  mv.env_post = {tp.param("env.post.gcn1.w"), tp.param("env.post.gcn1.b"),
                 tp.param("env.post.gcn2.w"), tp.param("env.post.gcn2.b")};
  mv.env_prior = {tp.param("env.prior.gcn.w"), tp.param("env.prior.gcn.b"),
                  tp.param("env.prior.mlp1.w"), tp.param("env.prior.mlp1.b"),
                  tp.param("env.prior.mlp2.w"), tp.param("env.prior.mlp2.b")};
  if (dims.task == TaskKind::node_classification) {
    mv.clf_w = tp.param("clf.node.w");
    mv.clf_b = tp.param("clf.node.b");
  }
  mv.env_clf_w = tp.param("clf.env.w");
  mv.env_clf_b = tp.param("clf.env.b");
  return mv;
}

ad::Var causal_prediction_node(ad::Tape& tp, ad::Var z, ad::Var w, ad::Var b) {
  return tp.add_rowvec(tp.matmul(z, w), b);
}

ad::Var causal_prediction_link(ad::Tape& tp, ad::Var z, const std::vector<int>& u_rows,
                               const std::vector<int>& v_rows) {
  if (u_rows.size() != v_rows.size())
    throw std::invalid_argument("causal_prediction_link: endpoint row mismatch");
  return tp.row_dot(tp.rows(z, u_rows), tp.rows(z, v_rows));
}

ad::Var intervened_prediction(ad::Tape& tp, ad::Var y_c, ad::Var y_env) {
  return tp.mul(y_c, tp.sigmoid(y_env));
}

ad::Var intervention_loss(ad::Tape& tp, const std::vector<ad::Var>& per_instance) {
  if (per_instance.empty())
    throw std::invalid_argument("intervention_loss: at least one instance required");
  ad::Var stacked = per_instance.size() == 1 ? per_instance[0] : tp.vcat(per_instance);
  ad::Var m = tp.mean(stacked);
  ad::Var centered = tp.sub_bcast(stacked, m);
  return tp.mean(tp.mul(centered, centered));
}

LossBreakdown total_loss(double inv, double intervention, double env, double lambda) {
  auto require_finite = [](double v, const char* name) {
    if (!std::isfinite(v))
      throw NumericalError(std::string("non-finite loss component: ") + name);
  };
  require_finite(inv, "L_inv");
  require_finite(intervention, "L_do");
  require_finite(env, "L_E");
  LossBreakdown out;
  out.inv = inv;
  out.intervention = intervention;
  out.env = env;
  out.lambda = lambda;
  out.total = inv + lambda * (intervention + env);
  require_finite(out.total, "total");
  return out;
}

namespace {

// Ablation helper: the whole graph fed to both branches.
SubgraphSplit full_graph_split(const Snapshot& snapshot) {
  SubgraphSplit split;
  split.timestamp = snapshot.timestamp;
  split.ratio = 1.0;
  const int m = static_cast<int>(snapshot.edges.size());
  split.causal_rows.resize(m);
  split.variant_rows.resize(m);
  for (int i = 0; i < m; ++i) split.causal_rows[i] = split.variant_rows[i] = i;
  split.causal_edges = snapshot.edges;
  split.variant_edges = snapshot.edges;
  split.scores.timestamp = snapshot.timestamp;
  split.scores.values = Eigen::VectorXd::Ones(m);
  return split;
}

struct EpochForward {
  ModelVars mv;
  std::vector<SubgraphSplit> splits;
  std::vector<ad::Var> scores;
  AttentionForward attn;  // targets 1..t_max in order
};

EpochForward build_forward(ad::Tape& tp, const DynamicGraph& graph,
                           const ModelDims& dims, const TrainConfig& config,
                           int t_max) {
  EpochForward fwd;
  fwd.mv = bind_params(tp, dims, !config.ablation.no_am);
  std::vector<ad::Var> st_inputs;
  std::vector<int> targets;
  for (int t = 1; t <= t_max; ++t) {
    const Snapshot& snap = graph.at(t);
    ad::Var h = node_st_input(tp, snap, fwd.mv.enc_proj, fwd.mv.deg_table,
                              fwd.mv.te_freq, dims.max_degree);
    st_inputs.push_back(h);
    if (config.ablation.no_sg) {
      fwd.splits.push_back(full_graph_split(snap));
      fwd.scores.push_back(
          tp.constant(Eigen::VectorXd::Ones(snap.edges.size())));
    } else {
      ad::Var alpha = score_edges(tp, snap, h, fwd.mv.scorer);
      fwd.scores.push_back(alpha);
      fwd.splits.push_back(
          split_subgraph(snap, tp.value(alpha).col(0), config.causal_ratio));
    }
    targets.push_back(t);
  }
  fwd.attn = forward_invariant(tp, graph, fwd.splits, st_inputs, fwd.scores,
                               fwd.mv.te_freq, fwd.mv.spatial, fwd.mv.temporal,
                               targets);
  return fwd;
}

// Prediction targets at t+1 served by embeddings and environment rows at t.
struct TargetBatch {
  int source_t = 0;
  // node task
  std::vector<int> z_rows;
  std::vector<int> env_rows;
  std::vector<int> labels;
  // link task
  std::vector<int> u_rows, v_rows;
  std::vector<int> env_u_rows, env_v_rows;
  Eigen::VectorXd link_labels;

  bool empty(TaskKind task) const {
    return task == TaskKind::node_classification ? z_rows.empty() : u_rows.empty();
  }
};

TargetBatch build_batch(const DynamicGraph& graph, int source_t,
                        const InvariantEmbedding& emb, TaskKind task,
                        std::mt19937_64& neg_rng) {
  TargetBatch batch;
  batch.source_t = source_t;
  const Snapshot& now = graph.at(source_t);
  const Snapshot& next = graph.at(source_t + 1);

  std::unordered_map<NodeId, int> emb_row;
  for (std::size_t i = 0; i < emb.nodes.size(); ++i)
    emb_row[emb.nodes[i]] = static_cast<int>(i);

  if (task == TaskKind::node_classification) {
    if (!next.labels) return batch;
    std::vector<NodeId> labeled;
    for (const auto& [u, label] : *next.labels) labeled.push_back(u);
    std::sort(labeled.begin(), labeled.end());
    for (NodeId u : labeled) {
      auto it = emb_row.find(u);
      if (it == emb_row.end()) continue;
      batch.z_rows.push_back(it->second);
      batch.env_rows.push_back(now.row_of(u));
      batch.labels.push_back(next.labels->at(u));
    }
    return batch;
  }

  // Link prediction: positives are next-snapshot edges with embedded
  // endpoints, negatives are sampled non-edges over the same node pool.
  std::vector<NodeId> eligible;
  for (NodeId u : next.node_ids)
    if (emb_row.count(u)) eligible.push_back(u);
  if (eligible.size() < 2) return batch;

  std::vector<Edge> positives;
  for (const Edge& e : next.edges)
    if (emb_row.count(e.first) && emb_row.count(e.second)) positives.push_back(e);
  if (positives.empty()) return batch;

  std::set<Edge> next_edges(next.edges.begin(), next.edges.end());
  std::vector<Edge> negatives;
  try {
    negatives = sample_non_edges(eligible, next_edges, positives.size(), neg_rng);
  } catch (const std::invalid_argument&) {
    return batch;  // dense snapshot: not enough non-edges, skip this source
  }

  batch.link_labels.resize(positives.size() + negatives.size());
  long row = 0;
  for (const auto& list : {positives, negatives}) {
    const double label = row < static_cast<long>(positives.size()) ? 1.0 : 0.0;
    for (const Edge& e : list) {
      batch.u_rows.push_back(emb_row.at(e.first));
      batch.v_rows.push_back(emb_row.at(e.second));
      batch.env_u_rows.push_back(now.row_of(e.first));
      batch.env_v_rows.push_back(now.row_of(e.second));
      batch.link_labels[row++] = label;
    }
  }
  return batch;
}

ad::Var batch_task_loss(ad::Tape& tp, const TargetBatch& batch, TaskKind task,
                        ad::Var y_logits) {
  if (task == TaskKind::node_classification)
    return tp.mean(tp.softmax_xent(y_logits, batch.labels));
  return tp.mean(tp.bce_with_logits(y_logits, batch.link_labels));
}

ad::Var batch_causal_logits(ad::Tape& tp, const TargetBatch& batch, TaskKind task,
                            const ModelVars& mv, ad::Var z) {
  if (task == TaskKind::node_classification)
    return causal_prediction_node(tp, tp.rows(z, batch.z_rows), mv.clf_w, mv.clf_b);
  return causal_prediction_link(tp, z, batch.u_rows, batch.v_rows);
}

ad::Var batch_env_logits(ad::Tape& tp, const TargetBatch& batch, TaskKind task,
                         const ModelVars& mv, ad::Var env_sample) {
  ad::Var projected =
      tp.add_rowvec(tp.matmul(env_sample, mv.env_clf_w), mv.env_clf_b);
  if (task == TaskKind::node_classification)
    return tp.rows(projected, batch.env_rows);
  return tp.row_dot(tp.rows(projected, batch.env_u_rows),
                    tp.rows(projected, batch.env_v_rows));
}

// Pooled evaluation metric over targets in (from, to]: AUC on the causal link
// logits, or accuracy of the causal class logits. Uses only tape values; the
// environment branch never enters.
double pooled_metric(ad::Tape& tp, const DynamicGraph& graph,
                     const EpochForward& fwd, const TrainConfig& config, int from,
                     int to) {
  std::vector<std::pair<double, int>> scored;
  std::vector<int> pred, truth;
  const ad::Mat* clf_w = nullptr;
  const ad::Mat* clf_b = nullptr;
  if (config.task == TaskKind::node_classification) {
    clf_w = &tp.value(fwd.mv.clf_w);
    clf_b = &tp.value(fwd.mv.clf_b);
  }
  for (int t = from; t < to; ++t) {
    const auto& emb = fwd.attn.targets[t - 1];
    if (emb.nodes.empty()) continue;
    auto rng = make_rng(derive_seed(config.seed, tag_hash("neg_eval"), t));
    TargetBatch batch = build_batch(graph, t, emb, config.task, rng);
    if (batch.empty(config.task)) continue;
    const ad::Mat& z = tp.value(emb.z);
    if (config.task == TaskKind::node_classification) {
      for (std::size_t i = 0; i < batch.z_rows.size(); ++i) {
        Eigen::RowVectorXd logits = z.row(batch.z_rows[i]) * (*clf_w) + clf_b->row(0);
        long arg = 0;
        logits.maxCoeff(&arg);
        pred.push_back(static_cast<int>(arg));
        truth.push_back(batch.labels[i]);
      }
    } else {
      for (std::size_t i = 0; i < batch.u_rows.size(); ++i) {
        const double score = z.row(batch.u_rows[i]).dot(z.row(batch.v_rows[i]));
        scored.emplace_back(score, batch.link_labels[i] > 0.5 ? 1 : 0);
      }
    }
  }
  if (config.task == TaskKind::node_classification) {
    if (pred.empty())
      throw DataError("no labeled evaluation targets in requested range");
    return accuracy(pred, truth);
  }
  if (scored.empty())
    throw DataError("no link evaluation targets in requested range");
  return auc_score(scored);
}

std::map<std::string, ad::Mat> snapshot_params(const ad::ParamStore& store) {
  std::map<std::string, ad::Mat> out;
  for (const auto& name : store.names()) out[name] = store.value(name);
  return out;
}

}  // namespace

void restore_params(ad::ParamStore& store, const std::map<std::string, ad::Mat>& params) {
  for (const auto& [name, value] : params) {
    ad::Mat& dst = store.value(name);
    if (dst.rows() != value.rows() || dst.cols() != value.cols())
      throw ConfigError("checkpoint parameter shape mismatch for " + name);
    dst = value;
  }
}

double evaluate(const DynamicGraph& graph, const SplitSpec& split,
                const TrainConfig& config, ad::ParamStore& store, int from, int to) {
  check_split(split, graph.T());
  config.check();
  const ModelDims dims = dims_for(graph, config);
  ad::Tape tp(&store);
  EpochForward fwd = build_forward(tp, graph, dims, config, to - 1);
  return pooled_metric(tp, graph, fwd, config, from, to);
}

namespace {

struct EpochLoss {
  EpochForward fwd;
  ad::Var total, inv, do_mean, kl_mean;
};

// One full pass of the training objective. Every random draw (training
// negatives, environment noise) is derived from (seed, epoch, t), so
// rebuilding with the same arguments reproduces the loss exactly.
EpochLoss build_epoch_loss(ad::Tape& tp, const DynamicGraph& graph,
                           const SplitSpec& split, const TrainConfig& config,
                           const ModelDims& dims, int epoch) {
  EpochLoss el;
  el.fwd = build_forward(tp, graph, dims, config, split.test_end - 1);

  ad::Var inv_sum, do_sum, kl_sum;
  int n_do = 0, n_kl = 0;
  for (int t = 1; t < split.train_end; ++t) {
    const auto& emb = el.fwd.attn.targets[t - 1];
    if (emb.nodes.empty()) continue;
    auto neg_rng =
        make_rng(derive_seed(config.seed, tag_hash("neg_train"), epoch, t));
    TargetBatch batch = build_batch(graph, t, emb, config.task, neg_rng);

    ad::Var y_c;
    if (!batch.empty(config.task)) {
      y_c = batch_causal_logits(tp, batch, config.task, el.fwd.mv, emb.z);
      ad::Var l_inv = batch_task_loss(tp, batch, config.task, y_c);
      inv_sum = inv_sum.valid() ? tp.add(inv_sum, l_inv) : l_inv;
    }

    if (!config.ablation.no_eg) {
      const Snapshot& snap = graph.at(t);
      VariantView view = variant_subgraph_view(el.fwd.splits[t - 1], snap);
      EnvDistribution post = posterior(tp, snap, view, el.fwd.mv.env_post);
      EnvDistribution pri =
          prior(tp, snap, view, el.fwd.mv.te_freq, el.fwd.mv.env_prior);
      ad::Var kl = kl_divergence(tp, post, pri);
      kl_sum = kl_sum.valid() ? tp.add(kl_sum, kl) : kl;
      ++n_kl;

      if (!batch.empty(config.task)) {
        auto env_rng = make_rng(derive_seed(config.seed, tag_hash("env"), epoch, t));
        auto instances =
            sample_instances(tp, post, config.interventions_per_t, env_rng);
        std::vector<ad::Var> inst_losses;
        inst_losses.reserve(instances.size());
        for (const auto& inst : instances) {
          ad::Var y_e = batch_env_logits(tp, batch, config.task, el.fwd.mv, inst.sample);
          ad::Var y_do = intervened_prediction(tp, y_c, y_e);
          inst_losses.push_back(batch_task_loss(tp, batch, config.task, y_do));
        }
        ad::Var l_do = intervention_loss(tp, inst_losses);
        do_sum = do_sum.valid() ? tp.add(do_sum, l_do) : l_do;
        ++n_do;
      }
    }
  }
  if (!inv_sum.valid())
    throw DataError("no training targets: check labels/edges in the training range");

  el.inv = inv_sum;
  el.do_mean =
      n_do > 0 ? tp.scale(do_sum, 1.0 / static_cast<double>(n_do)) : tp.scalar(0.0);
  el.kl_mean =
      n_kl > 0 ? tp.scale(kl_sum, 1.0 / static_cast<double>(n_kl)) : tp.scalar(0.0);
  ad::Var penalty = tp.scale(tp.add(el.do_mean, el.kl_mean), config.lambda);
  el.total = tp.add(el.inv, penalty);
  return el;
}

}  // namespace

double epoch_loss_probe(const DynamicGraph& graph, const SplitSpec& split,
                        const TrainConfig& config, ad::ParamStore& store, int epoch,
                        bool do_backward) {
  check_split(split, graph.T());
  config.check();
  const ModelDims dims = dims_for(graph, config);
  ad::Tape tp(&store);
  EpochLoss el = build_epoch_loss(tp, graph, split, config, dims, epoch);
  if (do_backward) tp.backward(el.total);
  return tp.scalar_value(el.total);
}

TrainResult train(const DynamicGraph& graph, const SplitSpec& split,
                  const TrainConfig& config, ad::ParamStore& store,
                  const TrainHooks& hooks) {
  check_split(split, graph.T());
  config.check();
  const ModelDims dims = dims_for(graph, config);
  ad::Adam optimizer(store, config.lr);

  TrainResult result;
  result.best_val = -std::numeric_limits<double>::infinity();
  std::map<std::string, ad::Mat> best_params = snapshot_params(store);

  const auto t_start = std::chrono::steady_clock::now();
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    store.zero_grad();
    ad::Tape tp(&store);
    EpochLoss el = build_epoch_loss(tp, graph, split, config, dims, epoch);
    const EpochForward& fwd = el.fwd;

    LossBreakdown breakdown;
    try {
      breakdown = total_loss(tp.scalar_value(el.inv), tp.scalar_value(el.do_mean),
                             tp.scalar_value(el.kl_mean), config.lambda);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " at epoch " +
                           std::to_string(epoch) + "; last good parameters are the "
                           "epoch " + std::to_string(result.best_epoch) +
                           " checkpoint");
    }

    MetricsRecord rec;
    rec.epoch = epoch;
    rec.loss_inv = breakdown.inv;
    rec.loss_do = breakdown.intervention;
    rec.loss_env = breakdown.env;
    rec.loss_total = breakdown.total;
    rec.val_metric =
        pooled_metric(tp, graph, fwd, config, split.train_end, split.val_end);
    rec.test_metric =
        pooled_metric(tp, graph, fwd, config, split.val_end, split.test_end);
    if (hooks.recall) rec.motif_recall = hooks.recall(fwd.splits);
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    result.records.push_back(rec);

    if (rec.val_metric > result.best_val) {
      result.best_val = rec.val_metric;
      result.best_epoch = epoch;
      result.test_at_best = rec.test_metric;
      best_params = snapshot_params(store);  // parameters that produced the metrics
      if (hooks.save_best) hooks.save_best(store, epoch);
    }

    tp.backward(el.total);
    optimizer.step();

    if (epoch - result.best_epoch >= config.patience) break;
  }

  restore_params(store, best_params);
  return result;
}

namespace {

constexpr char kCheckpointMagic[] = "DYCILCKPT1";

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ad::ParamStore& store,
                     const std::string& config_echo, int epoch) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + tmp.string());
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(epoch));
    write_pod<std::uint64_t>(out, config_echo.size());
    out.write(config_echo.data(), static_cast<std::streamsize>(config_echo.size()));
    const auto names = store.names();
    write_pod<std::uint64_t>(out, names.size());
    for (const auto& name : names) {
      const ad::Mat& m = store.value(name);
      write_pod<std::uint64_t>(out, name.size());
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
      write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
      for (long i = 0; i < m.rows(); ++i)
        for (long j = 0; j < m.cols(); ++j) write_pod<double>(out, m(i, j));
    }
  }
  std::filesystem::rename(tmp, path);  // atomic publish
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing checkpoint: " + path.string());
  char magic[sizeof(kCheckpointMagic) - 1];
  in.read(magic, sizeof(magic));
  if (!in || std::string(magic, sizeof(magic)) != kCheckpointMagic)
    throw DataError("not a checkpoint file: " + path.string());
  Checkpoint ckpt;
  ckpt.epoch = static_cast<int>(read_pod<std::uint32_t>(in));
  const auto echo_len = read_pod<std::uint64_t>(in);
  ckpt.config_echo.resize(echo_len);
  in.read(ckpt.config_echo.data(), static_cast<std::streamsize>(echo_len));
  const auto n = read_pod<std::uint64_t>(in);
  for (std::uint64_t k = 0; k < n; ++k) {
    const auto name_len = read_pod<std::uint64_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    const auto rows = read_pod<std::uint64_t>(in);
    const auto cols = read_pod<std::uint64_t>(in);
    ad::Mat m(rows, cols);
    for (std::uint64_t i = 0; i < rows; ++i)
      for (std::uint64_t j = 0; j < cols; ++j) m(i, j) = read_pod<double>(in);
    ckpt.params[name] = std::move(m);
  }
  return ckpt;
}

}  // namespace dycil
