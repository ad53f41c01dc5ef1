// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace xrf {

/// 8-bit grayscale raster, row-major, row 0 at the top.
struct Gray8 {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;
};

void write_png(const std::filesystem::path& path, const Gray8& image);
Gray8 read_png(const std::filesystem::path& path);

/// round(255 * v) after clamping v to [0, 1].
std::uint8_t to_u8(double v);
Gray8 quantize(std::span<const double> values, int height, int width);

}  // namespace xrf
