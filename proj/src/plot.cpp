// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#include "xrf/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "xrf/image_io.hpp"

namespace xrf::plot {

void write_line_plot(const std::filesystem::path& path, const std::vector<Series>& series,
                     int width, int height) {
  if (width < 16 || height < 16) throw std::invalid_argument("plot: canvas too small");
  Gray8 img;
  img.width = width;
  img.height = height;
  img.pixels.assign(static_cast<std::size_t>(width) * height, 255);
  auto set = [&](int x, int y, std::uint8_t v) {
    if (x >= 0 && x < width && y >= 0 && y < height) {
      img.pixels[static_cast<std::size_t>(y) * width + x] = v;
    }
  };
  const int margin = 8;
  for (int x = margin; x < width - margin; ++x) {
    set(x, margin, 0);
    set(x, height - margin - 1, 0);
  }
  for (int y = margin; y < height - margin; ++y) {
    set(margin, y, 0);
    set(width - margin - 1, y, 0);
  }

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    if (s.xs.size() != s.ys.size()) throw std::invalid_argument("plot: xs/ys size mismatch");
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) continue;
      x0 = std::min(x0, s.xs[i]);
      x1 = std::max(x1, s.xs[i]);
      y0 = std::min(y0, s.ys[i]);
      y1 = std::max(y1, s.ys[i]);
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  const double pw = width - 2 * margin - 3;
  const double ph = height - 2 * margin - 3;
  auto to_px = [&](double x, double y) {
    return std::pair<double, double>{margin + 1 + (x - x0) / (x1 - x0) * pw,
                                     height - margin - 2 - (y - y0) / (y1 - y0) * ph};
  };

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto shade = static_cast<std::uint8_t>(std::min<std::size_t>(k * 60, 180));
    const auto& s = series[k];
    for (std::size_t i = 0; i + 1 < s.xs.size(); ++i) {
      if (!std::isfinite(s.ys[i]) || !std::isfinite(s.ys[i + 1])) continue;
      const auto [ax, ay] = to_px(s.xs[i], s.ys[i]);
      const auto [bx, by] = to_px(s.xs[i + 1], s.ys[i + 1]);
      const int n = static_cast<int>(std::ceil(std::max(std::abs(bx - ax), std::abs(by - ay)))) + 1;
      for (int j = 0; j <= n; ++j) {
        const double t = static_cast<double>(j) / n;
        set(static_cast<int>(std::lround(ax + t * (bx - ax))),
            static_cast<int>(std::lround(ay + t * (by - ay))), shade);
      }
    }
  }
  write_png(path, img);
}

}  // namespace xrf::plot
