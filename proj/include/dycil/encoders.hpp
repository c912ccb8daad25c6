#pragma once

#include "dycil/graph.hpp"
#include "dycil/tensor.hpp"

namespace dycil {

// Learnable sinusoidal time encoding: for frequencies w_1..w_{d/2} the output
// is sqrt(1/d) * [cos(w_1 t), sin(w_1 t), cos(w_2 t), sin(w_2 t), ...], so its
// squared norm is exactly 1/2 for every t. `freqs` is a 1 x d/2 row.
ad::Var temporal_encoding(ad::Tape& tp, ad::Var freqs, double t);
Eigen::RowVectorXd temporal_encoding(const Eigen::RowVectorXd& freqs, double t);

// Geometric ladder w_i = 10^{-2i/d}, i = 1..d/2.
Eigen::RowVectorXd default_te_frequencies(int dim);

// Per-feature-row degrees in the snapshot's full edge set.
Eigen::VectorXi degree_vector(const Snapshot& snapshot);

// Row i of the returned table index: min(degree, max_degree + 1), i.e. degrees
// above max_degree share one overflow embedding row.
std::vector<int> degree_bucket_rows(const Snapshot& snapshot, int max_degree);

// Spatio-temporal node input (one snapshot):
//   H_t[u] = ((X_t[u] + deg_table[bucket(D_t^u)]) + TE(t)) @ projection
// where deg_table is (max_degree+2) x d_in, TE has width d_in, and projection
// is d_in x d_hidden. Throws ConfigError on dimension mismatch.
ad::Var node_st_input(ad::Tape& tp, const Snapshot& snapshot, ad::Var projection,
                      ad::Var deg_table, ad::Var te_freqs, int max_degree);

}  // namespace dycil
