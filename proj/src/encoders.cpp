#include "dycil/encoders.hpp"

#include <cmath>

namespace dycil {

ad::Var temporal_encoding(ad::Tape& tp, ad::Var freqs, double t) {
  const long half = tp.value(freqs).cols();
  if (tp.value(freqs).rows() != 1 || half < 1)
    throw ConfigError("temporal_encoding: freqs must be a 1 x d/2 row");
  const long d = 2 * half;
  ad::Var arg = tp.scale(freqs, t);
  ad::Var c = tp.cos(arg);
  ad::Var s = tp.sin(arg);
  // Interleave [c | s] into [c1, s1, c2, s2, ...] with a fixed 0/1 matrix.
  Eigen::MatrixXd perm = Eigen::MatrixXd::Zero(d, d);
  for (long i = 0; i < half; ++i) {
    perm(i, 2 * i) = 1.0;
    perm(half + i, 2 * i + 1) = 1.0;
  }
  ad::Var interleaved = tp.matmul(tp.hcat(c, s), tp.constant(std::move(perm)));
  return tp.scale(interleaved, std::sqrt(1.0 / static_cast<double>(d)));
}

Eigen::RowVectorXd temporal_encoding(const Eigen::RowVectorXd& freqs, double t) {
  ad::Tape tp;
  ad::Var out = temporal_encoding(tp, tp.constant(freqs), t);
  return tp.value(out).row(0);
}

Eigen::RowVectorXd default_te_frequencies(int dim) {
  if (dim < 2 || dim % 2 != 0)
    throw ConfigError("temporal encoding dim must be even and >= 2");
  Eigen::RowVectorXd w(dim / 2);
  for (int i = 1; i <= dim / 2; ++i)
    w[i - 1] = std::pow(10.0, -2.0 * i / static_cast<double>(dim));
  return w;
}

Eigen::VectorXi degree_vector(const Snapshot& snapshot) {
  Eigen::VectorXi deg = Eigen::VectorXi::Zero(snapshot.node_ids.size());
  for (const Edge& e : snapshot.edges) {
    deg[snapshot.row_of(e.first)] += 1;
    deg[snapshot.row_of(e.second)] += 1;
  }
  return deg;
}

std::vector<int> degree_bucket_rows(const Snapshot& snapshot, int max_degree) {
  Eigen::VectorXi deg = degree_vector(snapshot);
  std::vector<int> rows(deg.size());
  for (long i = 0; i < deg.size(); ++i)
    rows[i] = std::min(deg[i], max_degree + 1);
  return rows;
}

ad::Var node_st_input(ad::Tape& tp, const Snapshot& snapshot, ad::Var projection,
                      ad::Var deg_table, ad::Var te_freqs, int max_degree) {
  const long d_in = snapshot.features.cols();
  if (tp.value(deg_table).cols() != d_in)
    throw ConfigError("node_st_input: degree table width must equal feature dim");
  if (tp.value(deg_table).rows() != max_degree + 2)
    throw ConfigError("node_st_input: degree table must have max_degree+2 rows");
  if (2 * tp.value(te_freqs).cols() != d_in)
    throw ConfigError("node_st_input: temporal encoding width must equal feature dim");
  if (tp.value(projection).rows() != d_in)
    throw ConfigError("node_st_input: projection rows must equal feature dim");

  ad::Var x = tp.constant(snapshot.features);
  ad::Var deg_rows = tp.rows(deg_table, degree_bucket_rows(snapshot, max_degree));
  ad::Var te = temporal_encoding(tp, te_freqs, snapshot.timestamp);
  ad::Var summed = tp.add_rowvec(tp.add(x, deg_rows), te);
  return tp.matmul(summed, projection);
}

}  // namespace dycil
