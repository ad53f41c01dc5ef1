// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <vector>

namespace xrf::plot {

struct Series {
  std::vector<double> xs;
  std::vector<double> ys;
};

/// Rasterizes line series onto a white 8-bit canvas with a black frame and
/// writes it as PNG. Series are drawn in successively lighter grays; there is
/// no text, the axes span the data range.
void write_line_plot(const std::filesystem::path& path, const std::vector<Series>& series,
                     int width = 640, int height = 360);

}  // namespace xrf::plot
