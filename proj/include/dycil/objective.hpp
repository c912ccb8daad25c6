#pragma once

#include "dycil/encoders.hpp"
#include "dycil/env_model.hpp"
#include "dycil/metrics.hpp"
#include "dycil/st_attention.hpp"

#include <functional>
#include <map>
#include <optional>

namespace dycil {

enum class TaskKind { link_prediction, node_classification };

struct AblationFlags {
  bool no_sg = false;  // bypass the subgraph generator: full graph both branches
  bool no_am = false;  // plain attention: scores not multiplied into logits
  bool no_eg = false;  // no environment model: L_do = L_E = 0
  std::string tag() const;  // "full" or "w/o SG" style label
};

struct TrainConfig {
  TaskKind task = TaskKind::link_prediction;
  double causal_ratio = 0.2;     // r
  double lambda = 1.0;           // trade-off weight
  int interventions_per_t = 10;  // n = 10 * T spread over training timestamps
  int hidden_dim = 32;
  double lr = 1e-2;
  int max_epochs = 1000;
  int patience = 50;
  std::uint64_t seed = 0;
  int attn_layers = 1;
  int max_degree = 128;
  AblationFlags ablation;

  void check() const;  // throws ConfigError on invariant violations
};

struct ModelDims {
  TaskKind task = TaskKind::link_prediction;
  int d_in = 0;
  int hidden = 32;
  int num_classes = 0;  // node task only
  int attn_layers = 1;
  int max_degree = 128;
};

ModelDims dims_for(const DynamicGraph& graph, const TrainConfig& config);

// Creates every parameter tensor under its canonical key; initialization is
// derived per-name from the seed, so insertion order does not matter.
void init_params(ad::ParamStore& store, const ModelDims& dims, std::uint64_t seed);

// All parameter handles bound onto one tape.
struct ModelVars {
  ad::Var enc_proj, deg_table, te_freq;
  ScorerVars scorer;
  SpatialAttnVars spatial;
  TemporalAttnVars temporal;
  EnvPosteriorVars env_post;
  EnvPriorVars env_prior;
  ad::Var clf_w, clf_b;          // node-task classifier
  ad::Var env_clf_w, env_clf_b;  // environment classifier
};

ModelVars bind_params(ad::Tape& tp, const ModelDims& dims, bool modulate_scores);

// --- prediction and loss pieces (Eq.-level operations) ---

// Node task: one-layer perceptron logits. Link task: inner product of the two
// endpoint embedding rows.
ad::Var causal_prediction_node(ad::Tape& tp, ad::Var z, ad::Var w, ad::Var b);
ad::Var causal_prediction_link(ad::Tape& tp, ad::Var z, const std::vector<int>& u_rows,
                               const std::vector<int>& v_rows);

// y_do = y_c (elementwise*) sigmoid(y_env).
ad::Var intervened_prediction(ad::Tape& tp, ad::Var y_c, ad::Var y_env);

// Population variance of per-instance scalar losses.
ad::Var intervention_loss(ad::Tape& tp, const std::vector<ad::Var>& per_instance);

struct LossBreakdown {
  double inv = 0.0;
  double intervention = 0.0;  // L_do
  double env = 0.0;           // L_E
  double lambda = 0.0;
  double total = 0.0;
};

// total = inv + lambda * (do + env); throws NumericalError naming the first
// non-finite component.
LossBreakdown total_loss(double inv, double intervention, double env, double lambda);

struct MetricsRecord {
  int epoch = 0;
  double loss_inv = 0.0, loss_do = 0.0, loss_env = 0.0, loss_total = 0.0;
  double val_metric = 0.0, test_metric = 0.0;
  std::optional<double> motif_recall;
  double wall_seconds = 0.0;
};

struct TrainResult {
  std::vector<MetricsRecord> records;
  int best_epoch = 0;
  double best_val = 0.0;
  double test_at_best = 0.0;
};

struct TrainHooks {
  // Called once per epoch with the current splits (1..t_max); its return
  // value lands in MetricsRecord::motif_recall.
  std::function<double(const std::vector<SubgraphSplit>&)> recall = nullptr;
  // Checkpoint sink invoked at every new validation best.
  std::function<void(const ad::ParamStore&, int epoch)> save_best = nullptr;
};

// Algorithm-level training loop: per epoch scores edges, splits each
// snapshot, runs the two-stage attention, infers the environment posterior
// and prior, samples interventions, assembles L = L_inv + lambda (L_do +
// L_E), and takes one adaptive-moment step. Interventions and resampled
// training negatives exist only on training timestamps; validation and test
// metrics come from the causal predictions alone. Early-stops on the
// validation metric; the store ends at the best-validation parameters.
TrainResult train(const DynamicGraph& graph, const SplitSpec& split,
                  const TrainConfig& config, ad::ParamStore& store,
                  const TrainHooks& hooks = {});

// Evaluation of the current parameters: pooled AUC (link) or accuracy (node)
// over targets in (from, to]; sources are the preceding timestamps.
double evaluate(const DynamicGraph& graph, const SplitSpec& split,
                const TrainConfig& config, ad::ParamStore& store, int from, int to);

// One epoch's training objective with that epoch's exact noise draws;
// optionally accumulates gradients into the store. Rebuilding with the same
// epoch reproduces the value bit-for-bit, which makes finite-difference
// checks of the full objective possible.
double epoch_loss_probe(const DynamicGraph& graph, const SplitSpec& split,
                        const TrainConfig& config, ad::ParamStore& store, int epoch,
                        bool do_backward);

// --- checkpoints ---

struct Checkpoint {
  int epoch = 0;
  std::string config_echo;
  std::map<std::string, ad::Mat> params;
};

void save_checkpoint(const std::filesystem::path& path, const ad::ParamStore& store,
                     const std::string& config_echo, int epoch);
Checkpoint load_checkpoint(const std::filesystem::path& path);
void restore_params(ad::ParamStore& store, const std::map<std::string, ad::Mat>& params);

const char* to_string(TaskKind task);

}  // namespace dycil
