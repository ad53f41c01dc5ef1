// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Multi-scale patch sampling and the scale-conditioned patch discriminator.

#include <cstdint>
#include <string>
#include <vector>

#include "xrf/autodiff.hpp"
#include "xrf/conv.hpp"
#include "xrf/drr.hpp"
#include "xrf/rng.hpp"

namespace xrf::adversary {

using ad::Matrix;
using ad::Tensor;

/// A K x K lattice covering [cx - s, cx + s] x [cy - s, cy + s] inclusive,
/// in normalised image coordinates (x right, y down).
struct PatchSpec {
  int size = 16;  // K
  double scale = 1.0;
  double center_x = 0.0;
  double center_y = 0.0;
};

/// s ~ U[s_min, s_max], then the centre uniform over [-(1-s), 1-s]^2.
PatchSpec sample_patch_spec(Rng& rng, int size, double s_min, double s_max);
PatchSpec sample_patch_spec(std::uint64_t seed, int size, double s_min, double s_max);

/// (K*K) x 2 matrix of (x, y); row a*K + b holds lattice row a, column b:
///   x = cx - s + 2 s b / (K - 1),  y = cy - s + 2 s a / (K - 1).
Matrix patch_coords(const PatchSpec& spec);

/// Bilinear lookup at continuous coordinates. Pixel centre (r, c) sits at
/// pixel_center_coord(c, W), pixel_center_coord(r, H); lookups beyond the
/// outermost centres clamp to the edge. Returns 1 x N.
Matrix extract_patch(const drr::RadiographImage& img, const Matrix& coords);

struct FeatureShape {
  int width = 0;
  int height = 0;
  int depth = 0;
  int size() const { return width * height * depth; }
};

struct DiscArch {
  int patch_size = 16;
  int channels1 = 16;
  int channels2 = 32;  // this block's output is the exposed feature map
  int channels3 = 64;
  double negative_slope = 0.2;
};

struct DiscOutput {
  Tensor logits;    // B x 1
  Tensor features;  // B x (depth * height * width), channel-major
  FeatureShape feature_shape;
};

/// Three stride-2 3x3 conv blocks with leaky ReLU and a linear head. Input is
/// two channels: the patch and a constant channel holding its scale.
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(DiscArch arch, std::vector<Tensor> params);

  const DiscArch& arch() const { return arch_; }
  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  std::vector<std::string> parameter_names() const;
  FeatureShape feature_shape() const;

  /// patches: B x K^2 in [0, 1]; scales: one per row.
  DiscOutput operator()(const Tensor& patches, const std::vector<double>& scales) const;

 private:
  std::vector<ad::Conv2dShape> conv_shapes() const;

  DiscArch arch_;
  std::vector<Tensor> params_;
};

Discriminator init_discriminator(const DiscArch& arch, std::uint64_t seed);

inline DiscOutput discriminate(const Discriminator& d, const Tensor& patches,
                               const std::vector<double>& scales) {
  return d(patches, scales);
}

}  // namespace xrf::adversary
