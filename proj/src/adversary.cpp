// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#include "xrf/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace xrf::adversary {

PatchSpec sample_patch_spec(Rng& rng, int size, double s_min, double s_max) {
  if (size < 4) throw std::invalid_argument("patch size K must be >= 4");
  if (!(s_min > 0.0 && s_min <= s_max && s_max <= 1.0)) {
    throw std::invalid_argument("patch scale range must satisfy 0 < s_min <= s_max <= 1");
  }
  PatchSpec spec;
  spec.size = size;
  spec.scale = s_min == s_max ? s_min : rng.uniform(s_min, s_max);
  const double room = 1.0 - spec.scale;
  spec.center_x = room > 0.0 ? rng.uniform(-room, room) : 0.0;
  spec.center_y = room > 0.0 ? rng.uniform(-room, room) : 0.0;
  return spec;
}

PatchSpec sample_patch_spec(std::uint64_t seed, int size, double s_min, double s_max) {
  Rng rng(seed);
  return sample_patch_spec(rng, size, s_min, s_max);
}

Matrix patch_coords(const PatchSpec& spec) {
  const int k = spec.size;
  if (k < 2) throw std::invalid_argument("patch_coords: K must be >= 2");
  const double s = spec.scale;
  if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("patch_coords: scale must be in (0, 1]");
  constexpr double kSlack = 1e-12;
  if (std::abs(spec.center_x) + s > 1.0 + kSlack || std::abs(spec.center_y) + s > 1.0 + kSlack) {
    throw std::invalid_argument("patch_coords: patch footprint leaves [-1, 1]^2");
  }
  Matrix coords(static_cast<ad::Index>(k) * k, 2);
  const double step = 2.0 * s / (k - 1);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      coords(a * k + b, 0) = std::clamp(spec.center_x - s + step * b, -1.0, 1.0);
      coords(a * k + b, 1) = std::clamp(spec.center_y - s + step * a, -1.0, 1.0);
    }
  }
  return coords;
}

Matrix extract_patch(const drr::RadiographImage& img, const Matrix& coords) {
  if (coords.cols() != 2) throw std::invalid_argument("extract_patch: coords must be N x 2");
  if (img.height < 1 || img.width < 1) throw std::invalid_argument("extract_patch: empty image");
  Matrix out(1, coords.rows());
  const double w = img.width;
  const double h = img.height;
  for (ad::Index i = 0; i < coords.rows(); ++i) {
    const double px = std::clamp((coords(i, 0) + 1.0) * 0.5 * w - 0.5, 0.0, w - 1.0);
    const double py = std::clamp((coords(i, 1) + 1.0) * 0.5 * h - 0.5, 0.0, h - 1.0);
    const int x0 = static_cast<int>(std::floor(px));
    const int y0 = static_cast<int>(std::floor(py));
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = px - x0;
    const double fy = py - y0;
    const double top = (1.0 - fx) * img.at(y0, x0) + fx * img.at(y0, x1);
    const double bottom = (1.0 - fx) * img.at(y1, x0) + fx * img.at(y1, x1);
    out(0, i) = std::clamp((1.0 - fy) * top + fy * bottom, 0.0, 1.0);
  }
  return out;
}

Discriminator::Discriminator(DiscArch arch, std::vector<Tensor> params)
    : arch_(arch), params_(std::move(params)) {
  if (arch_.patch_size < 4) throw std::invalid_argument("discriminator: K must be >= 4");
  if (params_.size() != 8) throw std::invalid_argument("discriminator: expected 8 parameter tensors");
  const auto shapes = conv_shapes();
  for (int i = 0; i < 3; ++i) {
    if (params_[2 * i].rows() != shapes[i].out_channels ||
        params_[2 * i].cols() != shapes[i].patch_size()) {
      throw std::invalid_argument("discriminator: conv weight shape mismatch");
    }
  }
  if (params_[6].rows() != shapes[2].out_size() || params_[6].cols() != 1) {
    throw std::invalid_argument("discriminator: head weight shape mismatch");
  }
}

std::vector<ad::Conv2dShape> Discriminator::conv_shapes() const {
  std::vector<ad::Conv2dShape> shapes;
  ad::Index in_c = 2;
  ad::Index hw = arch_.patch_size;
  for (int c : {arch_.channels1, arch_.channels2, arch_.channels3}) {
    ad::Conv2dShape s{in_c, hw, hw, c, 3, 2, 1};
    shapes.push_back(s);
    in_c = c;
    hw = s.out_height();
  }
  return shapes;
}

FeatureShape Discriminator::feature_shape() const {
  const auto s = conv_shapes()[1];
  return {static_cast<int>(s.out_width()), static_cast<int>(s.out_height()),
          static_cast<int>(s.out_channels)};
}

std::vector<std::string> Discriminator::parameter_names() const {
  return {"disc.conv1.weight", "disc.conv1.bias", "disc.conv2.weight", "disc.conv2.bias",
          "disc.conv3.weight", "disc.conv3.bias", "disc.head.weight", "disc.head.bias"};
}

DiscOutput Discriminator::operator()(const Tensor& patches,
                                     const std::vector<double>& scales) const {
  const int k = arch_.patch_size;
  if (patches.cols() != static_cast<ad::Index>(k) * k) {
    throw std::invalid_argument("discriminate: patch must be K x K = " +
                                std::to_string(k * k) + " values");
  }
  if (static_cast<ad::Index>(scales.size()) != patches.rows()) {
    throw std::invalid_argument("discriminate: need one scale per patch");
  }
  Matrix scale_channel(patches.rows(), patches.cols());
  for (ad::Index b = 0; b < patches.rows(); ++b) scale_channel.row(b).setConstant(scales[b]);
  const Tensor parts[] = {patches, Tensor(std::move(scale_channel))};
  Tensor h = ad::concat_cols(parts);
  const auto shapes = conv_shapes();
  Tensor features;
  for (int i = 0; i < 3; ++i) {
    h = ad::leaky_relu(ad::conv2d(h, params_[2 * i], params_[2 * i + 1], shapes[i]),
                       arch_.negative_slope);
    if (i == 1) features = h;
  }
  Tensor logits = ad::add_row(ad::matmul(h, params_[6]), params_[7]);
  return {std::move(logits), std::move(features), feature_shape()};
}

Discriminator init_discriminator(const DiscArch& arch, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Tensor> params;
  auto uniform = [&](ad::Index rows, ad::Index cols, double bound) {
    Matrix m(rows, cols);
    for (ad::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
    return Tensor(std::move(m), true);
  };
  ad::Index in_c = 2;
  ad::Index hw = arch.patch_size;
  for (int c : {arch.channels1, arch.channels2, arch.channels3}) {
    const ad::Index fan_in = in_c * 9;
    params.push_back(uniform(c, fan_in, std::sqrt(6.0 / fan_in)));
    params.push_back(Tensor(Matrix::Zero(1, c), true));
    in_c = c;
    hw = (hw - 1) / 2 + 1;
  }
  const ad::Index flat = in_c * hw * hw;
  params.push_back(uniform(flat, 1, std::sqrt(3.0 / flat)));
  params.push_back(Tensor(Matrix::Zero(1, 1), true));
  return Discriminator(arch, std::move(params));
}

}  // namespace xrf::adversary
