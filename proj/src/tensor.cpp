#include "dycil/tensor.hpp"

#include <cassert>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

namespace dycil::ad {

Mat& ParamStore::create(const std::string& name, Mat init) {
  auto [it, inserted] = values_.emplace(name, std::move(init));
  if (!inserted) throw std::invalid_argument("parameter already exists: " + name);
  grads_[name] = Mat::Zero(it->second.rows(), it->second.cols());
  return it->second;
}

bool ParamStore::has(const std::string& name) const { return values_.count(name) > 0; }

Mat& ParamStore::value(const std::string& name) {
  auto it = values_.find(name);
  if (it == values_.end()) throw std::invalid_argument("unknown parameter: " + name);
  return it->second;
}

const Mat& ParamStore::value(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw std::invalid_argument("unknown parameter: " + name);
  return it->second;
}

Mat& ParamStore::grad(const std::string& name) {
  auto it = grads_.find(name);
  if (it == grads_.end()) throw std::invalid_argument("unknown parameter: " + name);
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& [name, g] : grads_) g.setZero();
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  for (const auto& [name, v] : values_) out.push_back(name);
  return out;
}

Var Tape::push(Mat value, std::function<void(Tape&)> bw, std::string param_name) {
  Node n;
  n.grad = Mat::Zero(value.rows(), value.cols());
  n.value = std::move(value);
  n.backward = std::move(bw);
  n.param_name = std::move(param_name);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Mat v) { return push(std::move(v)); }

Var Tape::scalar(double v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return push(std::move(m));
}

Var Tape::param(const std::string& name) {
  if (!store_) throw std::logic_error("tape has no parameter store");
  return push(store_->value(name), nullptr, name);
}

double Tape::scalar_value(Var v) const {
  const Mat& m = value(v);
  assert(m.rows() == 1 && m.cols() == 1);
  return m(0, 0);
}

void Tape::backward(Var root) {
  const Mat& r = value(root);
  if (r.rows() != 1 || r.cols() != 1)
    throw std::invalid_argument("backward root must be a 1x1 scalar");
  grad(root)(0, 0) = 1.0;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    if (nodes_[i].backward) nodes_[i].backward(*this);
  }
  if (store_) {
    for (auto& n : nodes_) {
      if (!n.param_name.empty()) store_->grad(n.param_name) += n.grad;
    }
  }
}

namespace {
void check_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}
}  // namespace

Var Tape::add(Var a, Var b) {
  check_same_shape(value(a), value(b), "add");
  return push(value(a) + value(b), [a, b, out = size()](Tape& t) {
    Var o{static_cast<int>(out)};
    t.grad(a) += t.grad(o);
    t.grad(b) += t.grad(o);
  });
}

Var Tape::sub(Var a, Var b) {
  check_same_shape(value(a), value(b), "sub");
  return push(value(a) - value(b), [a, b, out = size()](Tape& t) {
    Var o{static_cast<int>(out)};
    t.grad(a) += t.grad(o);
    t.grad(b) -= t.grad(o);
  });
}

Var Tape::mul(Var a, Var b) {
  check_same_shape(value(a), value(b), "mul");
  return push(value(a).cwiseProduct(value(b)), [a, b, out = size()](Tape& t) {
    Var o{static_cast<int>(out)};
    t.grad(a) += t.grad(o).cwiseProduct(t.value(b));
    t.grad(b) += t.grad(o).cwiseProduct(t.value(a));
  });
}

Var Tape::scale(Var a, double c) {
  return push(value(a) * c, [a, c, out = size()](Tape& t) {
    t.grad(a) += t.grad(Var{static_cast<int>(out)}) * c;
  });
}

Var Tape::add_scalar(Var a, double c) {
  return push(Mat((value(a).array() + c).matrix()), [a, out = size()](Tape& t) {
    t.grad(a) += t.grad(Var{static_cast<int>(out)});
  });
}

Var Tape::matmul(Var a, Var b) {
  if (value(a).cols() != value(b).rows())
    throw std::invalid_argument("matmul: inner dimension mismatch");
  return push(value(a) * value(b), [a, b, out = size()](Tape& t) {
    Var o{static_cast<int>(out)};
    t.grad(a) += t.grad(o) * t.value(b).transpose();
    t.grad(b) += t.value(a).transpose() * t.grad(o);
  });
}

Var Tape::spmm(SpMat s, Var a) {
  if (s.cols() != value(a).rows())
    throw std::invalid_argument("spmm: inner dimension mismatch");
  Mat out = s * value(a);
  auto sp = std::make_shared<SpMat>(std::move(s));
  return push(std::move(out), [a, sp, out = size()](Tape& t) {
    t.grad(a) += sp->transpose() * t.grad(Var{static_cast<int>(out)});
  });
}

Var Tape::add_rowvec(Var a, Var row) {
  const Mat& r = value(row);
  if (r.rows() != 1 || r.cols() != value(a).cols())
    throw std::invalid_argument("add_rowvec: row must be 1 x cols(a)");
  Mat out = value(a);
  out.rowwise() += r.row(0);
  return push(std::move(out), [a, row, out = size()](Tape& t) {
    Var o{static_cast<int>(out)};
    t.grad(a) += t.grad(o);
    t.grad(row) += t.grad(o).colwise().sum();
  });
}

Var Tape::relu(Var a) {
  return push(value(a).cwiseMax(0.0), [a, out = size()](Tape& t) {
    Var o{static_cast<int>(out)};
    t.grad(a) += t.grad(o).cwiseProduct(
        (t.value(a).array() > 0.0).cast<double>().matrix());
  });
}

Var Tape::sigmoid(Var a) {
  Mat s = (1.0 / (1.0 + (-value(a).array()).exp())).matrix();
  return push(std::move(s), [a, out = size()](Tape& t) {
    Var o{static_cast<int>(out)};
    const auto& sv = t.value(o).array();
    t.grad(a) += (t.grad(o).array() * sv * (1.0 - sv)).matrix();
  });
}

Var Tape::exp(Var a) {
  return push(Mat(value(a).array().exp().matrix()), [a, out = size()](Tape& t) {
    Var o{static_cast<int>(out)};
    t.grad(a) += t.grad(o).cwiseProduct(t.value(o));
  });
}

Var Tape::log(Var a) {
  return push(Mat(value(a).array().log().matrix()), [a, out = size()](Tape& t) {
    Var o{static_cast<int>(out)};
    t.grad(a) += (t.grad(o).array() / t.value(a).array()).matrix();
  });
}

Var Tape::cos(Var a) {
  return push(Mat(value(a).array().cos().matrix()), [a, out = size()](Tape& t) {
    Var o{static_cast<int>(out)};
    t.grad(a) -= (t.grad(o).array() * t.value(a).array().sin()).matrix();
  });
}

Var Tape::sin(Var a) {
  return push(Mat(value(a).array().sin().matrix()), [a, out = size()](Tape& t) {
    Var o{static_cast<int>(out)};
    t.grad(a) += (t.grad(o).array() * t.value(a).array().cos()).matrix();
  });
}

Var Tape::clamp(Var a, double lo, double hi) {
  return push(value(a).cwiseMax(lo).cwiseMin(hi), [a, lo, hi, out = size()](Tape& t) {
    Var o{static_cast<int>(out)};
    const auto& v = t.value(a).array();
    Mat mask = ((v > lo) && (v < hi)).cast<double>().matrix();
    t.grad(a) += t.grad(o).cwiseProduct(mask);
  });
}

Var Tape::hcat(Var a, Var b) {
  if (value(a).rows() != value(b).rows())
    throw std::invalid_argument("hcat: row count mismatch");
  Mat out(value(a).rows(), value(a).cols() + value(b).cols());
  out << value(a), value(b);
  return push(std::move(out), [a, b, out = size()](Tape& t) {
    Var o{static_cast<int>(out)};
    const long ca = t.value(a).cols();
    const long cb = t.value(b).cols();
    t.grad(a) += t.grad(o).leftCols(ca);
    t.grad(b) += t.grad(o).rightCols(cb);
  });
}

Var Tape::vcat(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("vcat: empty input");
  long rows = 0;
  const long cols = value(parts[0]).cols();
  for (Var p : parts) {
    if (value(p).cols() != cols) throw std::invalid_argument("vcat: col mismatch");
    rows += value(p).rows();
  }
  Mat out(rows, cols);
  long at = 0;
  for (Var p : parts) {
    out.middleRows(at, value(p).rows()) = value(p);
    at += value(p).rows();
  }
  return push(std::move(out), [parts, out = size()](Tape& t) {
    Var o{static_cast<int>(out)};
    long at = 0;
    for (Var p : parts) {
      const long r = t.value(p).rows();
      t.grad(p) += t.grad(o).middleRows(at, r);
      at += r;
    }
  });
}

Var Tape::rows(Var a, std::vector<int> idx) {
  Mat out(static_cast<long>(idx.size()), value(a).cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(i) = value(a).row(idx[i]);
  return push(std::move(out),
              [a, idx = std::move(idx), out = size()](Tape& t) {
                Var o{static_cast<int>(out)};
                for (std::size_t i = 0; i < idx.size(); ++i)
                  t.grad(a).row(idx[i]) += t.grad(o).row(i);
              });
}

Var Tape::row_dot(Var a, Var b) {
  check_same_shape(value(a), value(b), "row_dot");
  Mat out = value(a).cwiseProduct(value(b)).rowwise().sum();
  return push(std::move(out), [a, b, out = size()](Tape& t) {
    Var o{static_cast<int>(out)};
    t.grad(a) += (t.value(b).array().colwise() * t.grad(o).col(0).array()).matrix();
    t.grad(b) += (t.value(a).array().colwise() * t.grad(o).col(0).array()).matrix();
  });
}

Var Tape::segment_softmax(Var logits, std::vector<int> seg, int n_segments) {
  const Mat& x = value(logits);
  if (x.cols() != 1) throw std::invalid_argument("segment_softmax: expects n x 1");
  if (static_cast<std::size_t>(x.rows()) != seg.size())
    throw std::invalid_argument("segment_softmax: segment id count mismatch");
  Eigen::VectorXd smax = Eigen::VectorXd::Constant(
      n_segments, -std::numeric_limits<double>::infinity());
  for (long i = 0; i < x.rows(); ++i)
    smax[seg[i]] = std::max(smax[seg[i]], x(i, 0));
  Eigen::VectorXd ssum = Eigen::VectorXd::Zero(n_segments);
  Mat out(x.rows(), 1);
  for (long i = 0; i < x.rows(); ++i) {
    out(i, 0) = std::exp(x(i, 0) - smax[seg[i]]);
    ssum[seg[i]] += out(i, 0);
  }
  for (long i = 0; i < x.rows(); ++i) out(i, 0) /= ssum[seg[i]];
  return push(std::move(out),
              [logits, seg = std::move(seg), n_segments, out = size()](Tape& t) {
                Var o{static_cast<int>(out)};
                const Mat& beta = t.value(o);
                const Mat& g = t.grad(o);
                Eigen::VectorXd dot = Eigen::VectorXd::Zero(n_segments);
                for (long i = 0; i < beta.rows(); ++i)
                  dot[seg[i]] += g(i, 0) * beta(i, 0);
                for (long i = 0; i < beta.rows(); ++i)
                  t.grad(logits)(i, 0) += beta(i, 0) * (g(i, 0) - dot[seg[i]]);
              });
}

Var Tape::scatter_rows_scaled(Var w, Var r, std::vector<int> dst, int n_out) {
  const Mat& wv = value(w);
  const Mat& rv = value(r);
  if (wv.cols() != 1 || wv.rows() != rv.rows())
    throw std::invalid_argument("scatter_rows_scaled: w must be n x 1 matching r");
  if (static_cast<std::size_t>(rv.rows()) != dst.size())
    throw std::invalid_argument("scatter_rows_scaled: dst index count mismatch");
  Mat out = Mat::Zero(n_out, rv.cols());
  for (long i = 0; i < rv.rows(); ++i) out.row(dst[i]) += wv(i, 0) * rv.row(i);
  return push(std::move(out),
              [w, r, dst = std::move(dst), out = size()](Tape& t) {
                Var o{static_cast<int>(out)};
                const Mat& g = t.grad(o);
                for (std::size_t i = 0; i < dst.size(); ++i) {
                  t.grad(w)(i, 0) += g.row(dst[i]).dot(t.value(r).row(i));
                  t.grad(r).row(i) += t.value(w)(i, 0) * g.row(dst[i]);
                }
              });
}

Var Tape::scale_rows(Var a, Eigen::VectorXd coef) {
  if (coef.size() != value(a).rows())
    throw std::invalid_argument("scale_rows: coefficient length mismatch");
  Mat out = (value(a).array().colwise() * coef.array()).matrix();
  return push(std::move(out), [a, coef = std::move(coef), out = size()](Tape& t) {
    Var o{static_cast<int>(out)};
    t.grad(a) += (t.grad(o).array().colwise() * coef.array()).matrix();
  });
}

Var Tape::sum(Var a) {
  Mat out(1, 1);
  out(0, 0) = value(a).sum();
  return push(std::move(out), [a, out = size()](Tape& t) {
    Var o{static_cast<int>(out)};
    t.grad(a).array() += t.grad(o)(0, 0);
  });
}

Var Tape::mean(Var a) {
  const double n = static_cast<double>(value(a).size());
  return scale(sum(a), 1.0 / n);
}

Var Tape::sub_bcast(Var a, Var s) {
  if (value(s).rows() != 1 || value(s).cols() != 1)
    throw std::invalid_argument("sub_bcast: s must be 1x1");
  return push(Mat((value(a).array() - value(s)(0, 0)).matrix()), [a, s, out = size()](Tape& t) {
    Var o{static_cast<int>(out)};
    t.grad(a) += t.grad(o);
    t.grad(s)(0, 0) -= t.grad(o).sum();
  });
}

Var Tape::bce_with_logits(Var logits, Eigen::VectorXd targets) {
  const Mat& x = value(logits);
  if (x.cols() != 1 || x.rows() != targets.size())
    throw std::invalid_argument("bce_with_logits: expects n x 1 logits matching targets");
  Mat out(x.rows(), 1);
  for (long i = 0; i < x.rows(); ++i) {
    const double v = x(i, 0);
    out(i, 0) = std::max(v, 0.0) - v * targets[i] + std::log1p(std::exp(-std::abs(v)));
  }
  return push(std::move(out),
              [logits, targets = std::move(targets), out = size()](Tape& t) {
                Var o{static_cast<int>(out)};
                const Mat& x = t.value(logits);
                for (long i = 0; i < x.rows(); ++i) {
                  const double s = 1.0 / (1.0 + std::exp(-x(i, 0)));
                  t.grad(logits)(i, 0) += (s - targets[i]) * t.grad(o)(i, 0);
                }
              });
}

Var Tape::softmax_xent(Var logits, std::vector<int> labels) {
  const Mat& x = value(logits);
  if (static_cast<std::size_t>(x.rows()) != labels.size())
    throw std::invalid_argument("softmax_xent: label count mismatch");
  Mat out(x.rows(), 1);
  for (long i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    const double lse = m + std::log((x.row(i).array() - m).exp().sum());
    out(i, 0) = lse - x(i, labels[i]);
  }
  return push(std::move(out),
              [logits, labels = std::move(labels), out = size()](Tape& t) {
                Var o{static_cast<int>(out)};
                const Mat& x = t.value(logits);
                for (long i = 0; i < x.rows(); ++i) {
                  const double m = x.row(i).maxCoeff();
                  Eigen::RowVectorXd p = (x.row(i).array() - m).exp();
                  p /= p.sum();
                  p[labels[i]] -= 1.0;
                  t.grad(logits).row(i) += t.grad(o)(i, 0) * p;
                }
              });
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(b1_, t_);
  const double bc2 = 1.0 - std::pow(b2_, t_);
  for (const auto& name : store_->names()) {
    Mat& val = store_->value(name);
    const Mat& g = store_->grad(name);
    auto mi = m_.find(name);
    if (mi == m_.end()) {
      m_[name] = Mat::Zero(val.rows(), val.cols());
      v_[name] = Mat::Zero(val.rows(), val.cols());
      mi = m_.find(name);
    }
    Mat& m = mi->second;
    Mat& v = v_[name];
    m = b1_ * m + (1.0 - b1_) * g;
    v = b2_ * v + (1.0 - b2_) * g.cwiseProduct(g);
    val.array() -=
        lr_ * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps_);
  }
}

Mat glorot(int rows, int cols, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Mat out(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out(i, j) = dist(rng);
  return out;
}

}  // namespace dycil::ad
