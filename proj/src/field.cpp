// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#include "xrf/field.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace xrf::field {

namespace {

// Layout of params_: depth x (W, b) for the trunk, then density (W, b),
// then colour hidden (W, b), then colour out (W, b).
constexpr int kHeadTensors = 6;

Tensor uniform_tensor(Rng& rng, int rows, int cols, double bound) {
  Matrix m(rows, cols);
  for (ad::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  return Tensor(std::move(m), true);
}

Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b) {
  return ad::add_row(ad::matmul(x, w), b);
}

}  // namespace

std::vector<double> encode(std::span<const double> x, int num_frequencies) {
  if (num_frequencies < 0) throw std::invalid_argument("encode: L must be >= 0");
  std::vector<double> out;
  out.reserve(2 * num_frequencies * x.size());
  for (double v : x) {
    double freq = std::numbers::pi;
    for (int i = 0; i < num_frequencies; ++i) {
      out.push_back(std::sin(freq * v));
      out.push_back(std::cos(freq * v));
      freq *= 2.0;
    }
  }
  return out;
}

Tensor positional_encoding(const Tensor& x, int num_frequencies) {
  if (num_frequencies < 0) throw std::invalid_argument("positional_encoding: L must be >= 0");
  const ad::Index n = x.rows();
  const ad::Index dims = x.cols();
  const int L = num_frequencies;
  Matrix out(n, 2 * L * dims);
  for (ad::Index r = 0; r < n; ++r) {
    for (ad::Index k = 0; k < dims; ++k) {
      double freq = std::numbers::pi;
      const double v = x.value()(r, k);
      for (int i = 0; i < L; ++i) {
        out(r, (k * L + i) * 2) = std::sin(freq * v);
        out(r, (k * L + i) * 2 + 1) = std::cos(freq * v);
        freq *= 2.0;
      }
    }
  }
  if (!(ad::grad_enabled() && x.requires_grad()) || L == 0) {
    return Tensor(std::move(out));
  }
  auto node = std::make_shared<ad::Node>();
  node->value = std::move(out);
  node->requires_grad = true;
  node->inputs = {x.node()};
  node->backward = [L, dims](ad::Node& nd) {
    ad::Node& xn = *nd.inputs[0];
    Matrix g = Matrix::Zero(xn.value.rows(), dims);
    for (ad::Index r = 0; r < g.rows(); ++r) {
      for (ad::Index k = 0; k < dims; ++k) {
        double freq = std::numbers::pi;
        double acc = 0.0;
        for (int i = 0; i < L; ++i) {
          const ad::Index c = (k * L + i) * 2;
          // d sin(fx) = f cos(fx); d cos(fx) = -f sin(fx)
          acc += freq * (nd.grad(r, c) * nd.value(r, c + 1) - nd.grad(r, c + 1) * nd.value(r, c));
          freq *= 2.0;
        }
        g(r, k) = acc;
      }
    }
    if (xn.grad.size() == 0) xn.grad = std::move(g); else xn.grad += g;
  };
  return Tensor(std::move(node));
}

int FieldArch::pos_features() const {
  return 3 * 2 * encoding.pos_frequencies + (encoding.include_input ? 3 : 0);
}

int FieldArch::dir_features() const {
  return 3 * 2 * encoding.dir_frequencies + (encoding.include_input ? 3 : 0);
}

void FieldArch::validate() const {
  if (depth < 1 || width < 1 || color_width < 1) {
    throw std::invalid_argument("field: depth, width and color_width must be >= 1");
  }
  if (shape_dim < 0 || appearance_dim < 0) {
    throw std::invalid_argument("field: latent dims must be >= 0");
  }
  if (encoding.pos_frequencies < 0 || encoding.dir_frequencies < 0) {
    throw std::invalid_argument("field: frequency counts must be >= 0");
  }
  if (pos_features() + shape_dim < 1) throw std::invalid_argument("field: empty trunk input");
}

std::size_t parameter_count(const FieldArch& a) {
  const std::size_t w = a.width;
  const std::size_t in0 = a.pos_features() + a.shape_dim;
  const std::size_t trunk = (in0 * w + w) + (a.depth - 1) * (w * w + w);
  const std::size_t density = w + 1;
  const std::size_t color_in = w + a.dir_features() + a.appearance_dim;
  const std::size_t color = (color_in * a.color_width + a.color_width) + (a.color_width + 1);
  return trunk + density + color;
}

RadianceField::RadianceField(FieldArch arch, std::vector<Tensor> params)
    : arch_(std::move(arch)), params_(std::move(params)) {
  arch_.validate();
  if (params_.size() != static_cast<std::size_t>(2 * arch_.depth + kHeadTensors)) {
    throw std::invalid_argument("RadianceField: parameter tensor count does not match arch");
  }
  std::size_t count = 0;
  for (const auto& p : params_) count += static_cast<std::size_t>(p.size());
  if (count != parameter_count(arch_)) {
    throw std::invalid_argument("RadianceField: parameter count does not match arch");
  }
}

std::vector<std::string> RadianceField::parameter_names() const {
  std::vector<std::string> names;
  for (int l = 0; l < arch_.depth; ++l) {
    names.push_back("field.trunk" + std::to_string(l) + ".weight");
    names.push_back("field.trunk" + std::to_string(l) + ".bias");
  }
  for (const char* n : {"field.density.weight", "field.density.bias", "field.color0.weight",
                        "field.color0.bias", "field.color1.weight", "field.color1.bias"}) {
    names.emplace_back(n);
  }
  return names;
}

FieldOutput RadianceField::query(const Tensor& positions, const Tensor& directions,
                                 const LatentPair& z) const {
  const auto n = positions.rows();
  if (positions.cols() != 3 || directions.cols() != 3) {
    throw std::invalid_argument("query: positions and directions must have 3 columns");
  }
  if (directions.rows() != n && directions.rows() != 1) {
    throw std::invalid_argument("query: direction batch does not match position batch");
  }
  if (z.shape.rows() != 1 || z.shape.cols() != arch_.shape_dim ||
      z.appearance.rows() != 1 || z.appearance.cols() != arch_.appearance_dim) {
    throw std::invalid_argument("query: latent dims do not match the field");
  }
  const auto& enc = arch_.encoding;

  std::vector<Tensor> trunk_in;
  if (enc.include_input) trunk_in.push_back(positions);
  if (enc.pos_frequencies > 0) trunk_in.push_back(positional_encoding(positions, enc.pos_frequencies));
  if (arch_.shape_dim > 0) trunk_in.push_back(ad::repeat_rows(z.shape, n));
  Tensor h = ad::concat_cols(trunk_in);
  for (int l = 0; l < arch_.depth; ++l) {
    h = ad::relu(dense(h, params_[2 * l], params_[2 * l + 1]));
  }
  const std::size_t head = 2 * arch_.depth;
  Tensor density = ad::softplus(dense(h, params_[head], params_[head + 1]));

  std::vector<Tensor> dir_parts;
  if (enc.include_input) dir_parts.push_back(directions);
  if (enc.dir_frequencies > 0) dir_parts.push_back(positional_encoding(directions, enc.dir_frequencies));
  std::vector<Tensor> color_in{h};
  if (!dir_parts.empty()) {
    Tensor gd = ad::concat_cols(dir_parts);
    if (gd.rows() == 1 && n != 1) gd = ad::repeat_rows(gd, n);
    color_in.push_back(gd);
  }
  if (arch_.appearance_dim > 0) color_in.push_back(ad::repeat_rows(z.appearance, n));
  Tensor hc = ad::relu(dense(ad::concat_cols(color_in), params_[head + 2], params_[head + 3]));
  Tensor value = ad::sigmoid(dense(hc, params_[head + 4], params_[head + 5]));
  return {std::move(value), std::move(density)};
}

RadianceField RadianceField::clone() const {
  std::vector<Tensor> copy;
  copy.reserve(params_.size());
  for (const auto& p : params_) copy.emplace_back(p.value(), p.requires_grad());
  return RadianceField(arch_, std::move(copy));
}

RadianceField init_field(const FieldArch& arch, std::uint64_t seed) {
  arch.validate();
  Rng rng(seed);
  std::vector<Tensor> params;
  auto layer = [&](int in, int out) {
    params.push_back(uniform_tensor(rng, in, out, std::sqrt(6.0 / in)));
    params.push_back(Tensor(Matrix::Zero(1, out), true));
  };
  int in = arch.pos_features() + arch.shape_dim;
  for (int l = 0; l < arch.depth; ++l) {
    layer(in, arch.width);
    in = arch.width;
  }
  layer(arch.width, 1);
  layer(arch.width + arch.dir_features() + arch.appearance_dim, arch.color_width);
  layer(arch.color_width, 1);
  return RadianceField(arch, std::move(params));
}

LatentPair sample_latents(const FieldArch& arch, Rng& rng) {
  Matrix s(1, arch.shape_dim);
  Matrix a(1, arch.appearance_dim);
  for (ad::Index i = 0; i < s.size(); ++i) s.data()[i] = rng.normal();
  for (ad::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  return make_latents(s, a);
}

LatentPair make_latents(const Matrix& shape, const Matrix& appearance, bool requires_grad) {
  return {Tensor(shape, requires_grad), Tensor(appearance, requires_grad)};
}

}  // namespace xrf::field
