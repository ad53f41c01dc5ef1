// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#include "xrf/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace xrf::ad {

namespace {

thread_local bool g_grad_enabled = true;

template <typename Expr>
void accumulate(Node& n, const Eigen::MatrixBase<Expr>& g) {
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

Node& in(Node& n, std::size_t i) { return *n.inputs[i]; }

Tensor make_result(Matrix value, std::initializer_list<Tensor> inputs,
                   std::function<void(Node&)> backward) {
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& t : inputs) needs = needs || t.requires_grad();
  }
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (needs) {
    node->requires_grad = true;
    for (const auto& t : inputs) node->inputs.push_back(t.node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" +
                                std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

double stable_softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor::Tensor(Matrix value, bool requires_grad)
    : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return Tensor(std::move(m), requires_grad);
}

Tensor Tensor::zeros(Index rows, Index cols, bool requires_grad) {
  return Tensor(Matrix::Zero(rows, cols), requires_grad);
}

Matrix Tensor::grad() const {
  if (node_->grad.size() == 0) {
    return Matrix::Zero(node_->value.rows(), node_->value.cols());
  }
  return node_->grad;
}

double Tensor::item() const {
  if (size() != 1) throw std::logic_error("item(): tensor is not 1x1");
  return node_->value(0, 0);
}

void Tensor::backward() const {
  if (size() != 1) throw std::logic_error("backward(): root is not 1x1");
  backward(Matrix::Ones(1, 1));
}

void Tensor::backward(const Matrix& seed) const {
  if (!node_->requires_grad) return;
  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      Node* child = n->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  accumulate(*node_, seed);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->grad.size() != 0) n->backward(*n);
  }
  // Interior gradients are only needed during this sweep.
  for (Node* n : order) {
    if (n->backward) n->grad.resize(0, 0);
  }
}

void Tensor::zero_grad() { node_->grad.resize(0, 0); }

Tensor Tensor::detach() const { return Tensor(node_->value, false); }

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void zero_grads(std::span<Tensor> tensors) {
  for (auto& t : tensors) t.zero_grad();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dims");
  Matrix out = a.value() * b.value();
  return make_result(std::move(out), {a, b}, [](Node& n) {
    Node& x = in(n, 0);
    Node& w = in(n, 1);
    if (x.requires_grad) accumulate(x, n.grad * w.value.transpose());
    if (w.requires_grad) accumulate(w, x.value.transpose() * n.grad);
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_nt: inner dims");
  Matrix out = a.value() * b.value().transpose();
  return make_result(std::move(out), {a, b}, [](Node& n) {
    Node& x = in(n, 0);
    Node& w = in(n, 1);
    if (x.requires_grad) accumulate(x, n.grad * w.value);
    if (w.requires_grad) accumulate(w, n.grad.transpose() * x.value);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  return make_result(a.value() + b.value(), {a, b}, [](Node& n) {
    accumulate(in(n, 0), n.grad);
    accumulate(in(n, 1), n.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  return make_result(a.value() - b.value(), {a, b}, [](Node& n) {
    accumulate(in(n, 0), n.grad);
    accumulate(in(n, 1), -n.grad);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Matrix out = a.value().cwiseProduct(b.value());
  return make_result(std::move(out), {a, b}, [](Node& n) {
    Node& x = in(n, 0);
    Node& y = in(n, 1);
    if (x.requires_grad) accumulate(x, n.grad.cwiseProduct(y.value));
    if (y.requires_grad) accumulate(y, n.grad.cwiseProduct(x.value));
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw std::invalid_argument("add_row: row must be 1 x cols");
  }
  Matrix out = a.value().rowwise() + row.value().row(0);
  return make_result(std::move(out), {a, row}, [](Node& n) {
    accumulate(in(n, 0), n.grad);
    Node& r = in(n, 1);
    if (r.requires_grad) accumulate(r, n.grad.colwise().sum());
  });
}

Tensor mul_col(const Tensor& a, const Tensor& col) {
  if (col.cols() != 1 || col.rows() != a.rows()) {
    throw std::invalid_argument("mul_col: col must be rows x 1");
  }
  Matrix out = a.value().array().colwise() * col.value().col(0).array();
  return make_result(std::move(out), {a, col}, [](Node& n) {
    Node& x = in(n, 0);
    Node& c = in(n, 1);
    if (x.requires_grad) {
      accumulate(x, (n.grad.array().colwise() * c.value.col(0).array()).matrix());
    }
    if (c.requires_grad) {
      accumulate(c, n.grad.cwiseProduct(x.value).rowwise().sum());
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  return make_result(a.value() * s, {a},
                     [s](Node& n) { accumulate(in(n, 0), n.grad * s); });
}

Tensor add_scalar(const Tensor& a, double s) {
  Matrix out = a.value().array() + s;
  return make_result(std::move(out), {a},
                     [](Node& n) { accumulate(in(n, 0), n.grad); });
}

Tensor scale_by(const Tensor& a, const Tensor& s) {
  if (s.size() != 1) throw std::invalid_argument("scale_by: s must be 1x1");
  const double sv = s.value()(0, 0);
  return make_result(a.value() * sv, {a, s}, [](Node& n) {
    Node& x = in(n, 0);
    Node& sc = in(n, 1);
    const double v = sc.value(0, 0);
    if (x.requires_grad) accumulate(x, n.grad * v);
    if (sc.requires_grad) {
      Matrix g(1, 1);
      g(0, 0) = n.grad.cwiseProduct(x.value).sum();
      accumulate(sc, g);
    }
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const Index rows = parts[0].rows();
  Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<Index> offsets;
  Index off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    out.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& p : parts) needs = needs || p.requires_grad();
  }
  auto node = std::make_shared<Node>();
  node->value = std::move(out);
  if (needs) {
    node->requires_grad = true;
    for (const auto& p : parts) node->inputs.push_back(p.node());
    node->backward = [offsets](Node& n) {
      for (std::size_t i = 0; i < n.inputs.size(); ++i) {
        Node& x = *n.inputs[i];
        if (x.requires_grad) {
          accumulate(x, n.grad.middleCols(offsets[i], x.value.cols()));
        }
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const Index cols = parts[0].cols();
  Index rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<Index> offsets;
  Index off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    out.middleRows(off, p.rows()) = p.value();
    off += p.rows();
  }
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& p : parts) needs = needs || p.requires_grad();
  }
  auto node = std::make_shared<Node>();
  node->value = std::move(out);
  if (needs) {
    node->requires_grad = true;
    for (const auto& p : parts) node->inputs.push_back(p.node());
    node->backward = [offsets](Node& n) {
      for (std::size_t i = 0; i < n.inputs.size(); ++i) {
        Node& x = *n.inputs[i];
        if (x.requires_grad) {
          accumulate(x, n.grad.middleRows(offsets[i], x.value.rows()));
        }
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor slice_cols(const Tensor& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw std::invalid_argument("slice_cols: out of range");
  }
  Matrix out = a.value().middleCols(start, count);
  return make_result(std::move(out), {a}, [start, count](Node& n) {
    Node& x = in(n, 0);
    Matrix g = Matrix::Zero(x.value.rows(), x.value.cols());
    g.middleCols(start, count) = n.grad;
    accumulate(x, g);
  });
}

Tensor slice_rows(const Tensor& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw std::invalid_argument("slice_rows: out of range");
  }
  Matrix out = a.value().middleRows(start, count);
  return make_result(std::move(out), {a}, [start, count](Node& n) {
    Node& x = in(n, 0);
    Matrix g = Matrix::Zero(x.value.rows(), x.value.cols());
    g.middleRows(start, count) = n.grad;
    accumulate(x, g);
  });
}

Tensor repeat_rows(const Tensor& a, Index n_rows) {
  if (a.rows() != 1) throw std::invalid_argument("repeat_rows: input must be 1 x m");
  Matrix out = a.value().replicate(n_rows, 1);
  return make_result(std::move(out), {a}, [](Node& n) {
    accumulate(in(n, 0), n.grad.colwise().sum());
  });
}

Tensor repeat_each_row(const Tensor& a, Index times) {
  const Index r = a.rows();
  const Index c = a.cols();
  Matrix out(r * times, c);
  for (Index i = 0; i < r; ++i) {
    out.middleRows(i * times, times) = a.value().row(i).replicate(times, 1);
  }
  return make_result(std::move(out), {a}, [r, c, times](Node& n) {
    Matrix g(r, c);
    for (Index i = 0; i < r; ++i) {
      g.row(i) = n.grad.middleRows(i * times, times).colwise().sum();
    }
    accumulate(in(n, 0), g);
  });
}

Tensor reshape(const Tensor& a, Index rows, Index cols) {
  if (rows * cols != a.size()) throw std::invalid_argument("reshape: size mismatch");
  Matrix out = Eigen::Map<const Matrix>(a.value().data(), rows, cols);
  const Index r0 = a.rows();
  const Index c0 = a.cols();
  return make_result(std::move(out), {a}, [r0, c0](Node& n) {
    accumulate(in(n, 0), Eigen::Map<const Matrix>(n.grad.data(), r0, c0));
  });
}

Tensor exp(const Tensor& a) {
  Matrix out = a.value().array().exp();
  return make_result(std::move(out), {a}, [](Node& n) {
    accumulate(in(n, 0), n.grad.cwiseProduct(n.value));
  });
}

Tensor log(const Tensor& a) {
  Matrix out = a.value().array().log();
  return make_result(std::move(out), {a}, [](Node& n) {
    accumulate(in(n, 0), n.grad.cwiseQuotient(in(n, 0).value));
  });
}

Tensor square(const Tensor& a) {
  Matrix out = a.value().array().square();
  return make_result(std::move(out), {a}, [](Node& n) {
    accumulate(in(n, 0), 2.0 * n.grad.cwiseProduct(in(n, 0).value));
  });
}

Tensor relu(const Tensor& a) {
  Matrix out = a.value().cwiseMax(0.0);
  return make_result(std::move(out), {a}, [](Node& n) {
    Node& x = in(n, 0);
    accumulate(x, (x.value.array() > 0.0).select(n.grad, 0.0).matrix());
  });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  Matrix out = (a.value().array() > 0.0).select(a.value(), a.value() * slope);
  return make_result(std::move(out), {a}, [slope](Node& n) {
    Node& x = in(n, 0);
    accumulate(x, (x.value.array() > 0.0).select(n.grad, n.grad * slope).matrix());
  });
}

Tensor softplus(const Tensor& a) {
  Matrix out = a.value().unaryExpr([](double x) { return stable_softplus(x); });
  return make_result(std::move(out), {a}, [](Node& n) {
    Node& x = in(n, 0);
    accumulate(x, n.grad.cwiseProduct(
                      x.value.unaryExpr([](double v) { return stable_sigmoid(v); })));
  });
}

Tensor sigmoid(const Tensor& a) {
  Matrix out = a.value().unaryExpr([](double x) { return stable_sigmoid(x); });
  return make_result(std::move(out), {a}, [](Node& n) {
    const auto s = n.value.array();
    accumulate(in(n, 0), (n.grad.array() * s * (1.0 - s)).matrix());
  });
}

Tensor sum(const Tensor& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return make_result(std::move(out), {a}, [](Node& n) {
    Node& x = in(n, 0);
    accumulate(x, Matrix::Constant(x.value.rows(), x.value.cols(), n.grad(0, 0)));
  });
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw std::invalid_argument("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor row_sum(const Tensor& a) {
  Matrix out = a.value().rowwise().sum();
  return make_result(std::move(out), {a}, [](Node& n) {
    Node& x = in(n, 0);
    accumulate(x, n.grad.col(0).replicate(1, x.value.cols()));
  });
}

Tensor row_norm(const Tensor& a) {
  Matrix out = a.value().rowwise().norm();
  return make_result(std::move(out), {a}, [](Node& n) {
    Node& x = in(n, 0);
    Matrix g(x.value.rows(), x.value.cols());
    for (Index i = 0; i < g.rows(); ++i) {
      const double norm = n.value(i, 0);
      if (norm > 0.0) {
        g.row(i) = x.value.row(i) * (n.grad(i, 0) / norm);
      } else {
        g.row(i).setZero();
      }
    }
    accumulate(x, g);
  });
}

Tensor exclusive_cumsum_cols(const Tensor& a) {
  const Matrix& v = a.value();
  Matrix out(v.rows(), v.cols());
  for (Index i = 0; i < v.rows(); ++i) {
    double acc = 0.0;
    for (Index j = 0; j < v.cols(); ++j) {
      out(i, j) = acc;
      acc += v(i, j);
    }
  }
  return make_result(std::move(out), {a}, [](Node& n) {
    // d out(i, j) / d a(i, k) = 1 for k < j, so grad_a(i, k) = sum_{j>k} g(i, j).
    Matrix g(n.grad.rows(), n.grad.cols());
    for (Index i = 0; i < g.rows(); ++i) {
      double acc = 0.0;
      for (Index j = g.cols() - 1; j >= 0; --j) {
        g(i, j) = acc;
        acc += n.grad(i, j);
      }
    }
    accumulate(in(n, 0), g);
  });
}

}  // namespace xrf::ad
