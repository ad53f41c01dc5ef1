// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "xrf/autodiff.hpp"
#include "xrf/field.hpp"
#include "xrf/geometry.hpp"

namespace xrf::render {

using ad::Matrix;
using ad::Tensor;

struct RenderConfig {
  int n_samples = 64;
  bool stratified = true;
  double background = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One parallel ray per row of coords (x right, y down, in [-1, 1]^2),
/// all along the pose's view direction. Identical to the rays drr::project
/// casts through the same normalised coordinates.
std::vector<Ray> rays_for_patch(const Pose& pose, const Matrix& coords);

/// Maps (positions N x 3, directions N x 3 or 1 x 3) to per-point outputs.
using FieldFn = std::function<field::FieldOutput(const Tensor&, const Tensor&)>;

struct RenderResult {
  Tensor pixels;         // N x 1
  Tensor transmittance;  // N x 1, T after the last sample
  Tensor weights;        // N x S compositing weights
};

/// Emission-absorption quadrature. Ray i is cut into S equal bins on
/// [near, far]; sample s sits at the bin's left edge (or uniformly inside it
/// when stratified) and delta_s = t_{s+1} - t_s with delta_last = far - t_last.
///
///   w_s = T_s (1 - exp(-sigma_s delta_s)),  T_s = exp(-sum_{j<s} sigma_j delta_j)
///   pixel = sum_s w_s c_s + T_final * background
///
/// so sum_s w_s + T_final telescopes to 1.
RenderResult render_rays(const FieldFn& field, const std::vector<Ray>& rays,
                         const RenderConfig& cfg);

RenderResult render_rays(const field::RadianceField& f, const field::LatentPair& z,
                         const std::vector<Ray>& rays, const RenderConfig& cfg);

/// Full-image render at pixel centres without recording gradients.
/// Rows are rendered in chunks of at most chunk_rays rays; stratified jitter
/// (if enabled) is seeded per chunk from cfg.seed.
std::vector<double> render_view(const field::RadianceField& f, const field::LatentPair& z,
                                const Pose& pose, int height, int width,
                                const RenderConfig& cfg, int chunk_rays = 1024);

/// Pixel-centre coordinates of an H x W image as an (H*W) x 2 matrix.
Matrix pixel_center_grid(int height, int width);

}  // namespace xrf::render
