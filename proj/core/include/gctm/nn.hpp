#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gctm/rng.hpp"

namespace gctm::nn {

using Matrix = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using SpMatRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;  // accumulated by Tape::backward, zeroed by the optimizer
  Matrix adam_m, adam_v;

  Parameter() = default;
  Parameter(std::string name_, Matrix value_)
      : name(std::move(name_)), value(std::move(value_)) {}

  void ensure_grad() {
    if (grad.rows() != value.rows() || grad.cols() != value.cols()) {
      grad = Matrix::Zero(value.rows(), value.cols());
    }
  }
  void zero_grad() { grad.setZero(); }
};

Matrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng);
// Uniform in [-bound, bound]; for weight blocks whose fan differs from their
// own shape (e.g. one half of a split input layer).
Matrix uniform_init(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng);

// Plain (non-tape) helpers shared with evaluation paths.
Matrix softmax_rows_value(const Matrix& x);
Matrix log_softmax_rows_value(const Matrix& x);

// Define-by-run reverse-mode tape over dense matrices. Nodes are created in
// topological order, so reverse creation order is a valid backward order.
// Sparse matrices participate only as constants (graph adjacencies, DWBG
// batch rows).
class Tape {
 public:
  using NodeId = std::int32_t;

  NodeId constant(Matrix value);
  NodeId parameter(Parameter& p);

  NodeId matmul(NodeId a, NodeId b);
  // s * b with s constant; the caller keeps `s` alive via shared_ptr.
  NodeId spmm(std::shared_ptr<const SpMat> s, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId add_rowvec(NodeId a, NodeId row);  // broadcast a 1 x n row over rows
  NodeId cmul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double c);
  NodeId add_scalar(NodeId a, double c);
  NodeId softplus(NodeId a);
  NodeId relu(NodeId a);
  NodeId exp(NodeId a);
  NodeId log(NodeId a);
  NodeId clamp(NodeId a, double lo, double hi);
  NodeId softmax_rows(NodeId a);
  NodeId log_softmax_rows(NodeId a);
  NodeId sum(NodeId a);                // 1 x 1
  NodeId row_dot(NodeId a, NodeId b);  // n x 1 vector of per-row dot products
  NodeId hconcat(NodeId a, NodeId b);
  NodeId cols(NodeId a, Eigen::Index start, Eigen::Index count);

  const Matrix& value(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  double scalar(NodeId id) const { return value(id)(0, 0); }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(root)/d(root) = 1 and accumulates into every reachable
  // Parameter's grad. `root` must be 1 x 1.
  void backward(NodeId root);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    Parameter* param = nullptr;
    std::shared_ptr<const SpMat> sparse;
    std::function<void(Tape&, Node&)> pull;
  };

  Node& at(NodeId id) { return nodes_[static_cast<std::size_t>(id)]; }
  bool needs(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
  // Accumulation target, allocated to zeros on first touch.
  Matrix& grad_of(NodeId id);
  NodeId push(Node node);

  std::vector<Node> nodes_;
};

struct AdamConfig {
  double lr = 0.002;
  double beta1 = 0.99;  // "momentum 0.99"
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;  // <= 0 disables clipping
};

class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamConfig cfg);

  // Clips the global gradient norm, applies the update, zeroes grads.
  void step();
  double last_grad_norm() const { return last_grad_norm_; }

 private:
  std::vector<Parameter*> params_;
  AdamConfig cfg_;
  std::int64_t t_ = 0;
  double last_grad_norm_ = 0.0;
};

}  // namespace gctm::nn
