#include "gctm/nn.hpp"

#include <cmath>

#include "gctm/error.hpp"

namespace gctm::nn {

Matrix uniform_init(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = rng.uniform(-bound, bound);
    }
  }
  return m;
}

Matrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  return uniform_init(rows, cols, std::sqrt(6.0 / static_cast<double>(rows + cols)), rng);
}

Matrix softmax_rows_value(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mx = x.row(r).maxCoeff();
    Eigen::RowVectorXd e = (x.row(r).array() - mx).exp();
    out.row(r) = e / e.sum();
  }
  return out;
}

Matrix log_softmax_rows_value(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mx = x.row(r).maxCoeff();
    const double lse = mx + std::log((x.row(r).array() - mx).exp().sum());
    out.row(r) = x.row(r).array() - lse;
  }
  return out;
}

Matrix& Tape::grad_of(NodeId id) {
  Node& n = at(id);
  if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols()) {
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

Tape::NodeId Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size() - 1);
}

Tape::NodeId Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Tape::NodeId Tape::parameter(Parameter& p) {
  Node n;
  n.value = p.value;
  n.needs_grad = true;
  n.param = &p;
  n.pull = [](Tape&, Node& self) {
    self.param->ensure_grad();
    self.param->grad += self.grad;
  };
  return push(std::move(n));
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
  Node n;
  n.value = value(a) * value(b);
  n.needs_grad = needs(a) || needs(b);
  n.pull = [a, b](Tape& t, Node& self) {
    if (t.needs(a)) t.grad_of(a).noalias() += self.grad * t.value(b).transpose();
    if (t.needs(b)) t.grad_of(b).noalias() += t.value(a).transpose() * self.grad;
  };
  return push(std::move(n));
}

Tape::NodeId Tape::spmm(std::shared_ptr<const SpMat> s, NodeId b) {
  Node n;
  n.value = *s * value(b);
  n.needs_grad = needs(b);
  n.sparse = s;
  n.pull = [b](Tape& t, Node& self) {
    if (t.needs(b)) t.grad_of(b).noalias() += self.sparse->transpose() * self.grad;
  };
  return push(std::move(n));
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  Node n;
  n.value = value(a) + value(b);
  n.needs_grad = needs(a) || needs(b);
  n.pull = [a, b](Tape& t, Node& self) {
    if (t.needs(a)) t.grad_of(a) += self.grad;
    if (t.needs(b)) t.grad_of(b) += self.grad;
  };
  return push(std::move(n));
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
  Node n;
  n.value = value(a) - value(b);
  n.needs_grad = needs(a) || needs(b);
  n.pull = [a, b](Tape& t, Node& self) {
    if (t.needs(a)) t.grad_of(a) += self.grad;
    if (t.needs(b)) t.grad_of(b) -= self.grad;
  };
  return push(std::move(n));
}

Tape::NodeId Tape::add_rowvec(NodeId a, NodeId row) {
  Node n;
  n.value = value(a).rowwise() + value(row).row(0);
  n.needs_grad = needs(a) || needs(row);
  n.pull = [a, row](Tape& t, Node& self) {
    if (t.needs(a)) t.grad_of(a) += self.grad;
    if (t.needs(row)) t.grad_of(row).row(0) += self.grad.colwise().sum();
  };
  return push(std::move(n));
}

Tape::NodeId Tape::cmul(NodeId a, NodeId b) {
  Node n;
  n.value = value(a).cwiseProduct(value(b));
  n.needs_grad = needs(a) || needs(b);
  n.pull = [a, b](Tape& t, Node& self) {
    if (t.needs(a)) t.grad_of(a) += self.grad.cwiseProduct(t.value(b));
    if (t.needs(b)) t.grad_of(b) += self.grad.cwiseProduct(t.value(a));
  };
  return push(std::move(n));
}

Tape::NodeId Tape::scale(NodeId a, double c) {
  Node n;
  n.value = value(a) * c;
  n.needs_grad = needs(a);
  n.pull = [a, c](Tape& t, Node& self) {
    if (t.needs(a)) t.grad_of(a) += self.grad * c;
  };
  return push(std::move(n));
}

Tape::NodeId Tape::add_scalar(NodeId a, double c) {
  Node n;
  n.value = value(a).array() + c;
  n.needs_grad = needs(a);
  n.pull = [a](Tape& t, Node& self) {
    if (t.needs(a)) t.grad_of(a) += self.grad;
  };
  return push(std::move(n));
}

Tape::NodeId Tape::softplus(NodeId a) {
  Node n;
  // log(1 + e^x) = max(x, 0) + log1p(e^{-|x|})
  n.value = value(a).unaryExpr([](double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  });
  n.needs_grad = needs(a);
  n.pull = [a](Tape& t, Node& self) {
    if (!t.needs(a)) return;
    const Matrix sig = t.value(a).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    t.grad_of(a) += self.grad.cwiseProduct(sig);
  };
  return push(std::move(n));
}

Tape::NodeId Tape::relu(NodeId a) {
  Node n;
  n.value = value(a).cwiseMax(0.0);
  n.needs_grad = needs(a);
  n.pull = [a](Tape& t, Node& self) {
    if (!t.needs(a)) return;
    const Matrix mask = (t.value(a).array() > 0.0).cast<double>();
    t.grad_of(a) += self.grad.cwiseProduct(mask);
  };
  return push(std::move(n));
}

Tape::NodeId Tape::exp(NodeId a) {
  Node n;
  n.value = value(a).array().exp();
  n.needs_grad = needs(a);
  n.pull = [a](Tape& t, Node& self) {
    if (t.needs(a)) t.grad_of(a) += self.grad.cwiseProduct(self.value);
  };
  return push(std::move(n));
}

Tape::NodeId Tape::log(NodeId a) {
  Node n;
  n.value = value(a).unaryExpr([](double x) { return std::log(std::max(x, 1e-300)); });
  n.needs_grad = needs(a);
  n.pull = [a](Tape& t, Node& self) {
    if (t.needs(a)) t.grad_of(a) += self.grad.cwiseQuotient(t.value(a).cwiseMax(1e-300));
  };
  return push(std::move(n));
}

Tape::NodeId Tape::clamp(NodeId a, double lo, double hi) {
  Node n;
  n.value = value(a).cwiseMax(lo).cwiseMin(hi);
  n.needs_grad = needs(a);
  n.pull = [a, lo, hi](Tape& t, Node& self) {
    if (!t.needs(a)) return;
    const Matrix mask =
        ((t.value(a).array() > lo) && (t.value(a).array() < hi)).cast<double>();
    t.grad_of(a) += self.grad.cwiseProduct(mask);
  };
  return push(std::move(n));
}

Tape::NodeId Tape::softmax_rows(NodeId a) {
  Node n;
  n.value = softmax_rows_value(value(a));
  n.needs_grad = needs(a);
  n.pull = [a](Tape& t, Node& self) {
    if (!t.needs(a)) return;
    Matrix& ga = t.grad_of(a);
    for (Eigen::Index r = 0; r < self.value.rows(); ++r) {
      const double dot = self.grad.row(r).dot(self.value.row(r));
      ga.row(r) += (self.grad.row(r).array() - dot).matrix().cwiseProduct(self.value.row(r));
    }
  };
  return push(std::move(n));
}

Tape::NodeId Tape::log_softmax_rows(NodeId a) {
  Node n;
  n.value = log_softmax_rows_value(value(a));
  n.needs_grad = needs(a);
  n.pull = [a](Tape& t, Node& self) {
    if (!t.needs(a)) return;
    Matrix& ga = t.grad_of(a);
    for (Eigen::Index r = 0; r < self.value.rows(); ++r) {
      const double gsum = self.grad.row(r).sum();
      ga.row(r) += self.grad.row(r) - gsum * self.value.row(r).array().exp().matrix();
    }
  };
  return push(std::move(n));
}

Tape::NodeId Tape::sum(NodeId a) {
  Node n;
  n.value = Matrix::Constant(1, 1, value(a).sum());
  n.needs_grad = needs(a);
  n.pull = [a](Tape& t, Node& self) {
    if (t.needs(a)) t.grad_of(a).array() += self.grad(0, 0);
  };
  return push(std::move(n));
}

Tape::NodeId Tape::row_dot(NodeId a, NodeId b) {
  Node n;
  n.value = value(a).cwiseProduct(value(b)).rowwise().sum();
  n.needs_grad = needs(a) || needs(b);
  n.pull = [a, b](Tape& t, Node& self) {
    if (t.needs(a)) t.grad_of(a) += self.grad.col(0).asDiagonal() * t.value(b);
    if (t.needs(b)) t.grad_of(b) += self.grad.col(0).asDiagonal() * t.value(a);
  };
  return push(std::move(n));
}

Tape::NodeId Tape::hconcat(NodeId a, NodeId b) {
  Node n;
  n.value.resize(value(a).rows(), value(a).cols() + value(b).cols());
  n.value << value(a), value(b);
  n.needs_grad = needs(a) || needs(b);
  n.pull = [a, b](Tape& t, Node& self) {
    const Eigen::Index ca = t.value(a).cols();
    if (t.needs(a)) t.grad_of(a) += self.grad.leftCols(ca);
    if (t.needs(b)) t.grad_of(b) += self.grad.rightCols(self.grad.cols() - ca);
  };
  return push(std::move(n));
}

Tape::NodeId Tape::cols(NodeId a, Eigen::Index start, Eigen::Index count) {
  Node n;
  n.value = value(a).middleCols(start, count);
  n.needs_grad = needs(a);
  n.pull = [a, start, count](Tape& t, Node& self) {
    if (t.needs(a)) t.grad_of(a).middleCols(start, count) += self.grad;
  };
  return push(std::move(n));
}

void Tape::backward(NodeId root) {
  Node& r = at(root);
  if (r.value.rows() != 1 || r.value.cols() != 1) {
    throw NumericError("backward root must be a scalar node");
  }
  grad_of(root)(0, 0) += 1.0;
  for (NodeId id = root; id >= 0; --id) {
    Node& n = at(id);
    if (!n.needs_grad || n.grad.size() == 0 || !n.pull) continue;
    n.pull(*this, n);
  }
}

Adam::Adam(std::vector<Parameter*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  for (Parameter* p : params_) {
    p->ensure_grad();
    if (p->adam_m.size() == 0) {
      p->adam_m = Matrix::Zero(p->value.rows(), p->value.cols());
      p->adam_v = Matrix::Zero(p->value.rows(), p->value.cols());
    }
  }
}

void Adam::step() {
  ++t_;
  double sq_norm = 0.0;
  for (Parameter* p : params_) sq_norm += p->grad.squaredNorm();
  last_grad_norm_ = std::sqrt(sq_norm);
  const double scale = (cfg_.clip_norm > 0.0 && last_grad_norm_ > cfg_.clip_norm)
                           ? cfg_.clip_norm / last_grad_norm_
                           : 1.0;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (Parameter* p : params_) {
    const Matrix g = p->grad * scale;
    p->adam_m = cfg_.beta1 * p->adam_m + (1.0 - cfg_.beta1) * g;
    p->adam_v = cfg_.beta2 * p->adam_v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    const Matrix m_hat = p->adam_m / bc1;
    const Matrix v_hat = p->adam_v / bc2;
    p->value -= cfg_.lr * (m_hat.array() / (v_hat.array().sqrt() + cfg_.eps)).matrix();
    p->zero_grad();
  }
}

}  // namespace gctm::nn
