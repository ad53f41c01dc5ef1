// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Reverse-mode automatic differentiation over dense row-major matrices.
//
// Every Tensor is a 2-D matrix of doubles. Batched data puts one sample per
// row; images are stored channel-major (C, H, W) flattened along the row.
// Operations record a backward closure when any input requires a gradient
// and gradient recording is enabled (see NoGradGuard). Leaf tensors created
// with requires_grad accumulate gradients across backward() calls until
// zero_grad().

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace xrf::ad {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

struct Node {
  Matrix value;
  Matrix grad;  // empty until a gradient reaches this node
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Matrix value, bool requires_grad = false);
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor zeros(Index rows, Index cols, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  /// Direct write access; meant for optimizer updates on leaf tensors.
  Matrix& value_mut() { return node_->value; }
  /// Accumulated gradient, or an all-zero matrix of value's shape.
  Matrix grad() const;
  bool has_grad() const { return node_->grad.size() != 0; }
  bool requires_grad() const { return node_->requires_grad; }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  Index size() const { return node_->value.size(); }
  double item() const;

  /// Backpropagate from a 1x1 tensor with seed 1.
  void backward() const;
  void backward(const Matrix& seed) const;
  void zero_grad();
  Tensor detach() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

bool grad_enabled();

/// Disables graph recording for its lifetime (thread-local).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

void zero_grads(std::span<Tensor> tensors);

// Linear algebra and structure.
Tensor matmul(const Tensor& a, const Tensor& b);
/// a * b^T, without materialising the transpose.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
/// a (n x m) + row (1 x m) broadcast over rows.
Tensor add_row(const Tensor& a, const Tensor& row);
/// a (n x m) * col (n x 1) broadcast over columns.
Tensor mul_col(const Tensor& a, const Tensor& col);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
/// Scalar tensor (1x1) times a, broadcast.
Tensor scale_by(const Tensor& a, const Tensor& s);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& a, Index start, Index count);
Tensor slice_rows(const Tensor& a, Index start, Index count);
/// 1 x m -> n x m.
Tensor repeat_rows(const Tensor& a, Index n);
/// Each row repeated `times` consecutively: (n x m) -> (n*times x m).
Tensor repeat_each_row(const Tensor& a, Index times);
/// Row-major reinterpretation; rows*cols must match.
Tensor reshape(const Tensor& a, Index rows, Index cols);

// Elementwise nonlinearities.
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor square(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);
Tensor softplus(const Tensor& a);
Tensor sigmoid(const Tensor& a);

// Reductions.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// n x m -> n x 1.
Tensor row_sum(const Tensor& a);
/// Per-row Euclidean norm, n x m -> n x 1. Subgradient 0 at the origin.
Tensor row_norm(const Tensor& a);
/// Exclusive prefix sum along each row: out(i, j) = sum_{k<j} a(i, k).
Tensor exclusive_cumsum_cols(const Tensor& a);

}  // namespace xrf::ad
