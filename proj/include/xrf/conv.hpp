// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "xrf/autodiff.hpp"

namespace xrf::ad {

/// Geometry of a 2-D convolution over a batch stored as (B, C*H*W) rows.
struct Conv2dShape {
  Index in_channels = 1;
  Index in_height = 1;
  Index in_width = 1;
  Index out_channels = 1;
  Index kernel = 3;
  Index stride = 1;
  Index padding = 0;

  Index out_height() const { return (in_height + 2 * padding - kernel) / stride + 1; }
  Index out_width() const { return (in_width + 2 * padding - kernel) / stride + 1; }
  Index in_size() const { return in_channels * in_height * in_width; }
  Index out_size() const { return out_channels * out_height() * out_width(); }
  Index patch_size() const { return in_channels * kernel * kernel; }
};

/// Cross-correlation with zero padding.
/// weight: (out_channels, in_channels*kernel*kernel); bias: (1, out_channels).
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              const Conv2dShape& shape);

/// Nearest-neighbour 2x upsampling of (B, C*H*W) to (B, C*2H*2W).
Tensor upsample2x(const Tensor& x, Index channels, Index height, Index width);

/// Per-channel spatial mean: (B, C*H*W) -> (B, C).
Tensor global_avg_pool(const Tensor& x, Index channels, Index height, Index width);

}  // namespace xrf::ad
