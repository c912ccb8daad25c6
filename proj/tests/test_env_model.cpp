#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dycil/env_model.hpp"
#include "test_util.hpp"

#include <random>

using namespace dycil;
using ad::Mat;
using ad::Tape;
using ad::Var;

namespace {

Mat random_mat(int r, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = d(rng);
  return m;
}

Snapshot variant_snapshot() {
  Mat x(3, 2);
  x << 0.5, -1.0, 1.2, 0.3, -0.7, 0.9;
  return make_snapshot(1, {0, 1, 2}, {{0, 1}, {1, 2}, {0, 2}}, x);
}

SubgraphSplit split_of(const Snapshot& snap, double r) {
  Eigen::VectorXd scores(snap.edges.size());
  for (long i = 0; i < scores.size(); ++i) scores[i] = 0.9 - 0.1 * i;
  return split_subgraph(snap, scores, r);
}

}  // namespace

TEST_CASE("zero weights give a standard-normal posterior and prior") {
  auto snap = variant_snapshot();
  auto split = split_of(snap, 0.34);
  auto view = variant_subgraph_view(split, snap);

  Tape tp;
  EnvPosteriorVars post_p{tp.constant(Mat::Zero(2, 3)), tp.constant(Mat::Zero(1, 3)),
                          tp.constant(Mat::Zero(3, 4)), tp.constant(Mat::Zero(1, 4))};
  auto post = posterior(tp, snap, view, post_p);
  CHECK(tp.value(post.mean).isZero(0.0));
  CHECK((tp.value(post.std).array() == 1.0).all());

  EnvPriorVars prior_p{tp.constant(Mat::Zero(2, 3)), tp.constant(Mat::Zero(1, 3)),
                       tp.constant(Mat::Zero(5, 3)), tp.constant(Mat::Zero(1, 3)),
                       tp.constant(Mat::Zero(3, 4)), tp.constant(Mat::Zero(1, 4))};
  Eigen::RowVectorXd freq(1);
  freq << 0.3;
  auto pri = prior(tp, snap, view, tp.constant(freq), prior_p);
  CHECK(tp.value(pri.mean).isZero(0.0));
  CHECK((tp.value(pri.std).array() == 1.0).all());
}

TEST_CASE("posterior matches an explicit two-round message-passing oracle") {
  auto snap = variant_snapshot();
  auto split = split_of(snap, 0.34);  // variant edges: (0,2) and (1,2)
  auto view = variant_subgraph_view(split, snap);

  std::mt19937_64 rng(3);
  Mat w1 = ad::glorot(2, 3, rng), w2 = ad::glorot(3, 4, rng);
  Eigen::RowVectorXd b1 = ad::glorot(1, 3, rng), b2 = ad::glorot(1, 4, rng);

  Tape tp;
  EnvPosteriorVars p{tp.constant(w1), tp.constant(b1), tp.constant(w2),
                     tp.constant(b2)};
  auto post = posterior(tp, snap, view, p);

  // Oracle: explicit loops over the variant adjacency with self-loops.
  const int n = 3;
  Mat a = Mat(view.adjacency);
  Eigen::VectorXd deg = a.rowwise().sum().array() + 1.0;
  auto layer = [&](const Mat& x, const Mat& w, const Eigen::RowVectorXd& b,
                   bool relu_out) {
    Mat agg = Mat::Zero(n, x.cols());
    for (int i = 0; i < n; ++i) {
      agg.row(i) += x.row(i) / deg[i];
      for (int j = 0; j < n; ++j)
        if (a(i, j) > 0) agg.row(i) += x.row(j) / std::sqrt(deg[i] * deg[j]);
    }
    Mat out = agg * w;
    out.rowwise() += b;
    if (relu_out) out = out.cwiseMax(0.0);
    return out;
  };
  Mat packed = layer(layer(snap.features, w1, b1, true), w2, b2, false);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 2; ++j) {
      CHECK(tp.value(post.mean)(i, j) == doctest::Approx(packed(i, j)).epsilon(1e-12));
      const double ls = std::clamp(packed(i, 2 + j), -10.0, 10.0);
      CHECK(tp.value(post.std)(i, j) == doctest::Approx(std::exp(ls)).epsilon(1e-12));
    }
  }
}

TEST_CASE("posterior is permutation-equivariant") {
  Mat x(3, 2);
  x << 0.5, -1.0, 1.2, 0.3, -0.7, 0.9;
  auto snap = make_snapshot(1, {0, 1, 2}, {{0, 1}, {1, 2}}, x);
  Mat xr(3, 2);
  xr << -0.7, 0.9, 1.2, 0.3, 0.5, -1.0;  // relabel 0<->2
  auto snap_r = make_snapshot(1, {0, 1, 2}, {{2, 1}, {1, 0}}, xr);

  std::mt19937_64 rng(7);
  Mat w1 = ad::glorot(2, 3, rng), w2 = ad::glorot(3, 4, rng);
  Eigen::RowVectorXd b1 = ad::glorot(1, 3, rng), b2 = ad::glorot(1, 4, rng);
  Tape tp;
  EnvPosteriorVars p{tp.constant(w1), tp.constant(b1), tp.constant(w2),
                     tp.constant(b2)};
  auto full = split_of(snap, 1.0);
  auto full_r = split_of(snap_r, 1.0);
  // Use the complete graph as the variant view for both labelings.
  VariantView v1{&snap.features, adjacency_matrix(snap, snap.edges)};
  VariantView v2{&snap_r.features, adjacency_matrix(snap_r, snap_r.edges)};
  auto post1 = posterior(tp, snap, v1, p);
  auto post2 = posterior(tp, snap_r, v2, p);
  CHECK((tp.value(post1.mean).row(0) - tp.value(post2.mean).row(2)).cwiseAbs().maxCoeff() <
        1e-14);
  CHECK((tp.value(post1.mean).row(2) - tp.value(post2.mean).row(0)).cwiseAbs().maxCoeff() <
        1e-14);
}

TEST_CASE("prior depends on the timestamp through the temporal encoding") {
  auto snap1 = variant_snapshot();
  Mat x = snap1.features;
  auto snap2 = make_snapshot(5, {0, 1, 2}, snap1.edges, x);
  auto view1 = VariantView{&snap1.features, adjacency_matrix(snap1, snap1.edges)};
  auto view2 = VariantView{&snap2.features, adjacency_matrix(snap2, snap2.edges)};

  std::mt19937_64 rng(11);
  Tape tp;
  EnvPriorVars p{tp.constant(ad::glorot(2, 3, rng)), tp.constant(ad::glorot(1, 3, rng)),
                 tp.constant(ad::glorot(5, 3, rng)), tp.constant(ad::glorot(1, 3, rng)),
                 tp.constant(ad::glorot(3, 4, rng)), tp.constant(ad::glorot(1, 4, rng))};
  Eigen::RowVectorXd freq(1);
  freq << 0.9;
  auto pri1 = prior(tp, snap1, view1, tp.constant(freq), p);
  auto pri2 = prior(tp, snap2, view2, tp.constant(freq), p);
  CHECK((tp.value(pri1.mean) - tp.value(pri2.mean)).cwiseAbs().maxCoeff() > 1e-8);
}

TEST_CASE("kl closed-form reference values") {
  Tape tp;
  auto dist = [&](double mu, double sigma) {
    return make_env_distribution(tp, 1, tp.constant(Mat::Constant(1, 1, mu)),
                                 tp.constant(Mat::Constant(1, 1, sigma)));
  };
  CHECK(tp.scalar_value(kl_divergence(tp, dist(0.7, 1.3), dist(0.7, 1.3))) ==
        doctest::Approx(0.0).epsilon(1e-15));
  CHECK(std::abs(tp.scalar_value(kl_divergence(tp, dist(1.0, 1.0), dist(0.0, 1.0))) -
                 0.5) < 1e-9);
  CHECK(std::abs(tp.scalar_value(kl_divergence(tp, dist(0.0, 2.0), dist(0.0, 1.0))) -
                 (1.5 - std::log(2.0))) < 1e-9);
}

TEST_CASE("kl is nonnegative and zero only at equality") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> mu(-2.0, 2.0);
  std::uniform_real_distribution<double> sigma(0.2, 3.0);
  for (int rep = 0; rep < 50; ++rep) {
    Tape tp;
    Mat m1 = Mat::Constant(2, 3, mu(rng)), m2 = Mat::Constant(2, 3, mu(rng));
    Mat s1 = Mat::Constant(2, 3, sigma(rng)), s2 = Mat::Constant(2, 3, sigma(rng));
    auto post = make_env_distribution(tp, 1, tp.constant(m1), tp.constant(s1));
    auto pri = make_env_distribution(tp, 1, tp.constant(m2), tp.constant(s2));
    const double kl = tp.scalar_value(kl_divergence(tp, post, pri));
    CHECK(kl >= 0.0);
    const bool equal = (m1 - m2).isZero(0.0) && (s1 - s2).isZero(0.0);
    if (!equal) CHECK(kl > 0.0);
    if (equal) CHECK(kl == doctest::Approx(0.0));
  }
}

TEST_CASE("sampling: degenerate sigma, determinism, and moments") {
  Tape tp;
  Mat mu = random_mat(4, 3, 17);
  auto tight = make_env_distribution(tp, 2, tp.constant(mu),
                                     tp.constant(Mat::Constant(4, 3, 1e-12)));
  std::mt19937_64 rng(123);
  auto draws = sample_instances(tp, tight, 3, rng);
  CHECK(draws.size() == 3);
  CHECK(draws[1].draw_index == 1);
  CHECK(draws[1].source_timestamp == 2);
  for (const auto& d : draws)
    CHECK((tp.value(d.sample) - mu).cwiseAbs().maxCoeff() < 1e-9);

  std::mt19937_64 rng_a(7), rng_b(7);
  auto a = sample_instances(tp, tight, 2, rng_a);
  auto b = sample_instances(tp, tight, 2, rng_b);
  CHECK((tp.value(a[1].sample) - tp.value(b[1].sample)).isZero(0.0));

  auto unit = make_env_distribution(tp, 1, tp.constant(Mat::Zero(1, 1)),
                                    tp.constant(Mat::Ones(1, 1)));
  std::mt19937_64 rng_c(99);
  auto many = sample_instances(tp, unit, 10000, rng_c);
  double sum = 0.0, sq = 0.0;
  for (const auto& d : many) {
    const double v = tp.value(d.sample)(0, 0);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / 10000.0;
  const double var = sq / 10000.0 - mean * mean;
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(var - 1.0) < 0.1);

  CHECK_THROWS_AS(sample_instances(tp, unit, 0, rng_c), std::invalid_argument);
}

TEST_CASE("reparameterization passes gradients exactly and kl matches FD") {
  auto snap = variant_snapshot();
  auto split = split_of(snap, 0.34);
  auto view = variant_subgraph_view(split, snap);

  ad::ParamStore store;
  std::mt19937_64 rng(19);
  store.create("mu", random_mat(2, 2, 20));
  {
    store.zero_grad();
    Tape tp(&store);
    auto dist = make_env_distribution(tp, 1, tp.param("mu"),
                                      tp.constant(Mat::Constant(2, 2, 0.5)));
    std::mt19937_64 draw_rng(5);
    auto inst = sample_instances(tp, dist, 1, draw_rng);
    tp.backward(tp.sum(inst[0].sample));
    // d(sum of samples)/d(mu_ij) = 1 exactly.
    CHECK((store.grad("mu").array() == 1.0).all());
  }

  store.create("p.g1w", ad::glorot(2, 3, rng));
  store.create("p.g1b", ad::glorot(1, 3, rng));
  store.create("p.g2w", ad::glorot(3, 4, rng));
  store.create("p.g2b", ad::glorot(1, 4, rng));
  store.create("q.gw", ad::glorot(2, 3, rng));
  store.create("q.gb", ad::glorot(1, 3, rng));
  store.create("q.m1w", ad::glorot(5, 3, rng));
  store.create("q.m1b", ad::glorot(1, 3, rng));
  store.create("q.m2w", ad::glorot(3, 4, rng));
  store.create("q.m2b", ad::glorot(1, 4, rng));
  store.create("freq", (Eigen::RowVectorXd(1) << 0.4).finished());

  auto build = [&](Tape& tp) {
    EnvPosteriorVars pp{tp.param("p.g1w"), tp.param("p.g1b"), tp.param("p.g2w"),
                        tp.param("p.g2b")};
    EnvPriorVars qp{tp.param("q.gw"), tp.param("q.gb"), tp.param("q.m1w"),
                    tp.param("q.m1b"), tp.param("q.m2w"), tp.param("q.m2b")};
    auto post = posterior(tp, snap, view, pp);
    auto pri = prior(tp, snap, view, tp.param("freq"), qp);
    return kl_divergence(tp, post, pri);
  };
  {
    store.zero_grad();
    Tape tp(&store);
    tp.backward(build(tp));
  }
  auto loss = [&]() {
    Tape tp(&store);
    return tp.scalar_value(build(tp));
  };
  CHECK(testutil::finite_diff_max_err(
            store,
            {"p.g1w", "p.g1b", "p.g2w", "p.g2b", "q.gw", "q.gb", "q.m1w", "q.m1b",
             "q.m2w", "q.m2b", "freq"},
            loss) < 1e-4);
}
