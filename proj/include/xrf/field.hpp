// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Latent-conditioned radiance field: (position, direction, z_s, z_a) ->
// (grayscale value c, density sigma).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xrf/autodiff.hpp"
#include "xrf/rng.hpp"

namespace xrf::field {

using ad::Matrix;
using ad::Tensor;

/// Fourier features of each component of x, component-major:
/// [sin(2^0 pi x0), cos(2^0 pi x0), ..., sin(2^(L-1) pi x0), cos(2^(L-1) pi x0),
///  sin(2^0 pi x1), ...]. L = 0 gives the empty vector.
std::vector<double> encode(std::span<const double> x, int num_frequencies);

/// Batched, differentiable version of encode(): (N, D) -> (N, 2*L*D).
Tensor positional_encoding(const Tensor& x, int num_frequencies);

struct EncodingConfig {
  int pos_frequencies = 6;
  int dir_frequencies = 2;
  bool include_input = true;  // prepend raw x / d to their encodings
};

struct FieldArch {
  int depth = 8;        // hidden layers in the density trunk
  int width = 128;
  int color_width = 64; // hidden layer of the colour head
  int shape_dim = 8;    // z_s
  int appearance_dim = 8;  // z_a
  EncodingConfig encoding;

  int pos_features() const;
  int dir_features() const;
  void validate() const;
};

/// Closed-form parameter count of the declared topology.
std::size_t parameter_count(const FieldArch& arch);

struct LatentPair {
  Tensor shape;       // 1 x shape_dim
  Tensor appearance;  // 1 x appearance_dim
};

struct FieldOutput {
  Tensor value;    // N x 1, sigmoid -> (0, 1)
  Tensor density;  // N x 1, softplus -> [0, inf)
};

class RadianceField {
 public:
  RadianceField() = default;
  RadianceField(FieldArch arch, std::vector<Tensor> params);

  const FieldArch& arch() const { return arch_; }
  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  /// Stable names, index-aligned with parameters().
  std::vector<std::string> parameter_names() const;

  /// positions, directions: N x 3 (directions need not be repeated per point
  /// if given as 1 x 3; they are broadcast).
  FieldOutput query(const Tensor& positions, const Tensor& directions,
                    const LatentPair& z) const;

  /// Deep copy with fresh leaf tensors (same requires_grad flags).
  RadianceField clone() const;

 private:
  FieldArch arch_;
  std::vector<Tensor> params_;
};

/// He-uniform weights, zero biases; deterministic in seed.
RadianceField init_field(const FieldArch& arch, std::uint64_t seed);

/// Standard-normal latents.
LatentPair sample_latents(const FieldArch& arch, Rng& rng);

LatentPair make_latents(const Matrix& shape, const Matrix& appearance,
                        bool requires_grad = false);

}  // namespace xrf::field
