// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#include "xrf/conv.hpp"

#include <stdexcept>

namespace xrf::ad {

namespace {

// Unfolds one sample into (C*k*k, Ho*Wo) columns.
void im2col(const double* src, const Conv2dShape& s, Matrix& cols) {
  const Index ho = s.out_height();
  const Index wo = s.out_width();
  cols.resize(s.patch_size(), ho * wo);
  for (Index c = 0; c < s.in_channels; ++c) {
    for (Index ky = 0; ky < s.kernel; ++ky) {
      for (Index kx = 0; kx < s.kernel; ++kx) {
        const Index row = (c * s.kernel + ky) * s.kernel + kx;
        for (Index oy = 0; oy < ho; ++oy) {
          const Index iy = oy * s.stride - s.padding + ky;
          for (Index ox = 0; ox < wo; ++ox) {
            const Index ix = ox * s.stride - s.padding + kx;
            const bool inside =
                iy >= 0 && iy < s.in_height && ix >= 0 && ix < s.in_width;
            cols(row, oy * wo + ox) =
                inside ? src[(c * s.in_height + iy) * s.in_width + ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const Matrix& cols, const Conv2dShape& s, double* dst) {
  const Index ho = s.out_height();
  const Index wo = s.out_width();
  for (Index c = 0; c < s.in_channels; ++c) {
    for (Index ky = 0; ky < s.kernel; ++ky) {
      for (Index kx = 0; kx < s.kernel; ++kx) {
        const Index row = (c * s.kernel + ky) * s.kernel + kx;
        for (Index oy = 0; oy < ho; ++oy) {
          const Index iy = oy * s.stride - s.padding + ky;
          if (iy < 0 || iy >= s.in_height) continue;
          for (Index ox = 0; ox < wo; ++ox) {
            const Index ix = ox * s.stride - s.padding + kx;
            if (ix < 0 || ix >= s.in_width) continue;
            dst[(c * s.in_height + iy) * s.in_width + ix] += cols(row, oy * wo + ox);
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              const Conv2dShape& shape) {
  if (x.cols() != shape.in_size()) throw std::invalid_argument("conv2d: input size");
  if (weight.rows() != shape.out_channels || weight.cols() != shape.patch_size()) {
    throw std::invalid_argument("conv2d: weight shape");
  }
  if (bias.rows() != 1 || bias.cols() != shape.out_channels) {
    throw std::invalid_argument("conv2d: bias shape");
  }
  if (shape.out_height() < 1 || shape.out_width() < 1) {
    throw std::invalid_argument("conv2d: empty output");
  }
  const Index batch = x.rows();
  const Index hw = shape.out_height() * shape.out_width();
  Matrix out(batch, shape.out_size());
  std::vector<Matrix> cols(batch);
  for (Index b = 0; b < batch; ++b) {
    im2col(x.value().row(b).data(), shape, cols[b]);
    Matrix y = weight.value() * cols[b];
    y.colwise() += bias.value().row(0).transpose();
    out.row(b) = Eigen::Map<const Eigen::RowVectorXd>(y.data(), y.size());
  }

  bool needs = grad_enabled() &&
               (x.requires_grad() || weight.requires_grad() || bias.requires_grad());
  auto node = std::make_shared<Node>();
  node->value = std::move(out);
  if (!needs) return Tensor(std::move(node));
  node->requires_grad = true;
  node->inputs = {x.node(), weight.node(), bias.node()};
  node->backward = [shape, hw, cols = std::move(cols)](Node& n) {
    Node& xn = *n.inputs[0];
    Node& wn = *n.inputs[1];
    Node& bn = *n.inputs[2];
    const Index batch = n.value.rows();
    Matrix gw = Matrix::Zero(wn.value.rows(), wn.value.cols());
    Matrix gb = Matrix::Zero(1, shape.out_channels);
    Matrix gx;
    if (xn.requires_grad) gx = Matrix::Zero(xn.value.rows(), xn.value.cols());
    for (Index b = 0; b < batch; ++b) {
      Eigen::Map<const Matrix> g(n.grad.row(b).data(), shape.out_channels, hw);
      if (wn.requires_grad) gw.noalias() += g * cols[b].transpose();
      if (bn.requires_grad) gb.row(0) += g.rowwise().sum().transpose();
      if (xn.requires_grad) {
        Matrix gcols = wn.value.transpose() * g;
        col2im(gcols, shape, gx.row(b).data());
      }
    }
    if (xn.requires_grad) {
      if (xn.grad.size() == 0) xn.grad = std::move(gx); else xn.grad += gx;
    }
    if (wn.requires_grad) {
      if (wn.grad.size() == 0) wn.grad = std::move(gw); else wn.grad += gw;
    }
    if (bn.requires_grad) {
      if (bn.grad.size() == 0) bn.grad = std::move(gb); else bn.grad += gb;
    }
  };
  return Tensor(std::move(node));
}

Tensor upsample2x(const Tensor& x, Index channels, Index height, Index width) {
  if (x.cols() != channels * height * width) {
    throw std::invalid_argument("upsample2x: input size");
  }
  const Index batch = x.rows();
  const Index h2 = 2 * height;
  const Index w2 = 2 * width;
  Matrix out(batch, channels * h2 * w2);
  for (Index b = 0; b < batch; ++b) {
    for (Index c = 0; c < channels; ++c) {
      for (Index y = 0; y < h2; ++y) {
        for (Index xx = 0; xx < w2; ++xx) {
          out(b, (c * h2 + y) * w2 + xx) = x.value()(b, (c * height + y / 2) * width + xx / 2);
        }
      }
    }
  }
  bool needs = grad_enabled() && x.requires_grad();
  auto node = std::make_shared<Node>();
  node->value = std::move(out);
  if (!needs) return Tensor(std::move(node));
  node->requires_grad = true;
  node->inputs = {x.node()};
  node->backward = [channels, height, width](Node& n) {
    Node& xn = *n.inputs[0];
    const Index h2 = 2 * height;
    const Index w2 = 2 * width;
    Matrix g = Matrix::Zero(xn.value.rows(), xn.value.cols());
    for (Index b = 0; b < g.rows(); ++b) {
      for (Index c = 0; c < channels; ++c) {
        for (Index y = 0; y < h2; ++y) {
          for (Index xx = 0; xx < w2; ++xx) {
            g(b, (c * height + y / 2) * width + xx / 2) += n.grad(b, (c * h2 + y) * w2 + xx);
          }
        }
      }
    }
    if (xn.grad.size() == 0) xn.grad = std::move(g); else xn.grad += g;
  };
  return Tensor(std::move(node));
}

Tensor global_avg_pool(const Tensor& x, Index channels, Index height, Index width) {
  if (x.cols() != channels * height * width) {
    throw std::invalid_argument("global_avg_pool: input size");
  }
  const Index hw = height * width;
  // Pooling is a fixed linear map; express it as a matmul so the gradient
  // comes for free.
  Matrix pool = Matrix::Zero(channels * hw, channels);
  for (Index c = 0; c < channels; ++c) {
    pool.block(c * hw, c, hw, 1).setConstant(1.0 / static_cast<double>(hw));
  }
  return matmul(x, Tensor(std::move(pool)));
}

}  // namespace xrf::ad
