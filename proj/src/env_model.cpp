#include "dycil/env_model.hpp"

#include "dycil/encoders.hpp"

namespace dycil {

namespace {

// D^{-1/2}(A+I)D^{-1/2} built from a raw 0/1 adjacency.
ad::SpMat normalize_raw(const ad::SpMat& a) {
  const int n = static_cast<int>(a.rows());
  Eigen::VectorXd deg = Eigen::VectorXd::Ones(n);
  for (int k = 0; k < a.outerSize(); ++k)
    for (ad::SpMat::InnerIterator it(a, k); it; ++it) deg[it.row()] += it.value();
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < n; ++i) trip.emplace_back(i, i, 1.0 / deg[i]);
  for (int k = 0; k < a.outerSize(); ++k)
    for (ad::SpMat::InnerIterator it(a, k); it; ++it)
      trip.emplace_back(it.row(), it.col(),
                        it.value() / std::sqrt(deg[it.row()] * deg[it.col()]));
  ad::SpMat out(n, n);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

// Splits an n x 2d encoder output into a clamped-log-std Gaussian.
EnvDistribution split_gaussian(ad::Tape& tp, int timestamp, ad::Var packed) {
  const long d2 = tp.value(packed).cols();
  if (d2 % 2 != 0) throw ConfigError("environment encoder output width must be even");
  const long de = d2 / 2;
  const long n = tp.value(packed).rows();
  Eigen::MatrixXd left = Eigen::MatrixXd::Zero(d2, de);
  Eigen::MatrixXd right = Eigen::MatrixXd::Zero(d2, de);
  for (long j = 0; j < de; ++j) {
    left(j, j) = 1.0;
    right(de + j, j) = 1.0;
  }
  EnvDistribution dist;
  dist.timestamp = timestamp;
  dist.mean = tp.matmul(packed, tp.constant(std::move(left)));
  dist.log_std = tp.clamp(tp.matmul(packed, tp.constant(std::move(right))),
                          -kLogStdClamp, kLogStdClamp);
  dist.std = tp.exp(dist.log_std);
  (void)n;
  return dist;
}

}  // namespace

EnvDistribution make_env_distribution(ad::Tape& tp, int timestamp, ad::Var mean,
                                      ad::Var std) {
  if (tp.value(mean).rows() != tp.value(std).rows() ||
      tp.value(mean).cols() != tp.value(std).cols())
    throw std::invalid_argument("make_env_distribution: shape mismatch");
  if ((tp.value(std).array() <= 0.0).any())
    throw std::invalid_argument("make_env_distribution: std must be positive");
  return {timestamp, mean, std, tp.log(std)};
}

EnvDistribution posterior(ad::Tape& tp, const Snapshot& snapshot,
                          const VariantView& view, const EnvPosteriorVars& p) {
  ad::SpMat ahat = normalize_raw(view.adjacency);
  ad::Var x = tp.constant(*view.features);
  ad::Var h1 = tp.relu(tp.add_rowvec(tp.matmul(tp.spmm(ahat, x), p.gcn1_w), p.gcn1_b));
  ad::Var packed =
      tp.add_rowvec(tp.matmul(tp.spmm(std::move(ahat), h1), p.gcn2_w), p.gcn2_b);
  return split_gaussian(tp, snapshot.timestamp, packed);
}

EnvDistribution prior(ad::Tape& tp, const Snapshot& snapshot,
                      const VariantView& view, ad::Var te_freqs,
                      const EnvPriorVars& p) {
  ad::SpMat ahat = normalize_raw(view.adjacency);
  ad::Var x = tp.constant(*view.features);
  ad::Var g = tp.relu(
      tp.add_rowvec(tp.matmul(tp.spmm(std::move(ahat), x), p.gcn_w), p.gcn_b));
  ad::Var te = temporal_encoding(tp, te_freqs, snapshot.timestamp);
  const int n = static_cast<int>(tp.value(g).rows());
  ad::Var te_rows = tp.rows(te, std::vector<int>(n, 0));
  ad::Var cat = tp.hcat(g, te_rows);
  ad::Var hidden = tp.relu(tp.add_rowvec(tp.matmul(cat, p.mlp1_w), p.mlp1_b));
  ad::Var packed = tp.add_rowvec(tp.matmul(hidden, p.mlp2_w), p.mlp2_b);
  return split_gaussian(tp, snapshot.timestamp, packed);
}

ad::Var kl_divergence(ad::Tape& tp, const EnvDistribution& post,
                      const EnvDistribution& pri) {
  const auto& m = tp.value(post.mean);
  const auto& mp = tp.value(pri.mean);
  if (m.rows() != mp.rows() || m.cols() != mp.cols())
    throw std::invalid_argument("kl_divergence: shape mismatch");
  ad::Var diff = tp.sub(post.mean, pri.mean);
  ad::Var num = tp.add(tp.mul(post.std, post.std), tp.mul(diff, diff));
  ad::Var inv_var_p = tp.exp(tp.scale(pri.log_std, -2.0));
  ad::Var quad = tp.scale(tp.mul(num, inv_var_p), 0.5);
  ad::Var logs = tp.sub(pri.log_std, post.log_std);
  return tp.sum(tp.add_scalar(tp.add(logs, quad), -0.5));
}

std::vector<EnvInstance> sample_instances(ad::Tape& tp, const EnvDistribution& dist,
                                          int count, std::mt19937_64& rng) {
  if (count < 1) throw std::invalid_argument("sample_instances: count must be >= 1");
  const long n = tp.value(dist.mean).rows();
  const long d = tp.value(dist.mean).cols();
  std::normal_distribution<double> normal;
  std::vector<EnvInstance> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Eigen::MatrixXd eps(n, d);
    for (long r = 0; r < n; ++r)
      for (long c = 0; c < d; ++c) eps(r, c) = normal(rng);
    ad::Var sample =
        tp.add(dist.mean, tp.mul(dist.std, tp.constant(std::move(eps))));
    out.push_back({sample, dist.timestamp, i});
  }
  return out;
}

}  // namespace dycil
