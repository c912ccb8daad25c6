#pragma once

#include "dycil/causal_subgraph.hpp"

#include <random>

namespace dycil {

// Per-node diagonal Gaussian over the latent environment.
struct EnvDistribution {
  int timestamp = 0;
  ad::Var mean;     // n x d_e
  ad::Var std;      // n x d_e, strictly positive
  ad::Var log_std;  // n x d_e
};

EnvDistribution make_env_distribution(ad::Tape& tp, int timestamp, ad::Var mean,
                                      ad::Var std);

struct EnvInstance {
  ad::Var sample;  // n x d_e, reparameterized draw
  int source_timestamp = 0;
  int draw_index = 0;
};

struct EnvPosteriorVars {
  ad::Var gcn1_w, gcn1_b;
  ad::Var gcn2_w, gcn2_b;  // second layer emits (mu || log sigma)
};

struct EnvPriorVars {
  ad::Var gcn_w, gcn_b;
  ad::Var mlp1_w, mlp1_b;
  ad::Var mlp2_w, mlp2_b;  // emits (mu || log sigma)
};

// Log-std outputs are clamped to this band before exponentiation.
inline constexpr double kLogStdClamp = 10.0;

// Posterior q(E_t | X_t^e, A_t^e): two graph-convolution rounds over the
// variant adjacency (identity propagation when the variant edge set is
// empty), last layer linear, split into mean and log-std halves.
EnvDistribution posterior(ad::Tape& tp, const Snapshot& snapshot,
                          const VariantView& view, const EnvPosteriorVars& params);

// Prior p(E_t | X_t^e, A_t^e, t): one graph-convolution round, then an MLP on
// the concatenation with TE(t).
EnvDistribution prior(ad::Tape& tp, const Snapshot& snapshot,
                      const VariantView& view, ad::Var te_freqs,
                      const EnvPriorVars& params);

// Closed-form diagonal-Gaussian KL, summed over nodes and dimensions:
//   log(sp/s) + (s^2 + (m - mp)^2) / (2 sp^2) - 1/2.
ad::Var kl_divergence(ad::Tape& tp, const EnvDistribution& post,
                      const EnvDistribution& prior);

// Reparameterized draws e_i = mu + sigma .* eps_i; eps comes from `rng`, so a
// fixed seed reproduces every instance.
std::vector<EnvInstance> sample_instances(ad::Tape& tp, const EnvDistribution& dist,
                                          int count, std::mt19937_64& rng);

}  // namespace dycil
