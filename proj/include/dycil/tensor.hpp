#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace dycil::ad {

using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;

// Named parameter tensors plus their accumulated gradients. Iteration order is
// the sorted key order everywhere, which keeps optimizer updates and
// checkpoint layout deterministic.
class ParamStore {
 public:
  Mat& create(const std::string& name, Mat init);
  bool has(const std::string& name) const;
  Mat& value(const std::string& name);
  const Mat& value(const std::string& name) const;
  Mat& grad(const std::string& name);
  void zero_grad();
  std::vector<std::string> names() const;
  std::size_t size() const { return values_.size(); }

 private:
  std::map<std::string, Mat> values_;
  std::map<std::string, Mat> grads_;
};

// Handle into a Tape node.
struct Var {
  int idx = -1;
  bool valid() const { return idx >= 0; }
};

// Reverse-mode tape over dense float64 matrices. A fresh tape is built per
// forward pass; backward() replays recorded closures in reverse creation
// order and flushes leaf gradients into the bound ParamStore.
class Tape {
 public:
  explicit Tape(ParamStore* store = nullptr) : store_(store) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Mat v);
  Var scalar(double v);
  Var param(const std::string& name);

  const Mat& value(Var v) const { return nodes_[v.idx].value; }
  Mat& grad(Var v) { return nodes_[v.idx].grad; }
  double scalar_value(Var v) const;

  void backward(Var root);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var add_scalar(Var a, double c);
  Var matmul(Var a, Var b);
  Var spmm(SpMat s, Var a);
  Var add_rowvec(Var a, Var row);
  Var relu(Var a);
  Var sigmoid(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var cos(Var a);
  Var sin(Var a);
  Var clamp(Var a, double lo, double hi);
  Var hcat(Var a, Var b);
  Var vcat(const std::vector<Var>& parts);
  Var rows(Var a, std::vector<int> idx);
  Var row_dot(Var a, Var b);
  Var segment_softmax(Var logits, std::vector<int> seg, int n_segments);
  Var scatter_rows_scaled(Var w, Var r, std::vector<int> dst, int n_out);
  Var scale_rows(Var a, Eigen::VectorXd coef);
  Var sum(Var a);
  Var mean(Var a);
  Var sub_bcast(Var a, Var s);
  Var bce_with_logits(Var logits, Eigen::VectorXd targets);
  Var softmax_xent(Var logits, std::vector<int> labels);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Tape&)> backward;
    std::string param_name;  // nonempty for parameter leaves
  };

  Var push(Mat value, std::function<void(Tape&)> bw = nullptr,
           std::string param_name = {});

  std::vector<Node> nodes_;
  ParamStore* store_;
};

class Adam {
 public:
  explicit Adam(ParamStore& store, double lr, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8)
      : store_(&store), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}
  void step();

 private:
  ParamStore* store_;
  std::map<std::string, Mat> m_, v_;
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
};

Mat glorot(int rows, int cols, std::mt19937_64& rng);

}  // namespace dycil::ad
