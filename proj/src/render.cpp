// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#include "xrf/render.hpp"

#include <stdexcept>

#include "xrf/rng.hpp"

namespace xrf::render {

void RenderConfig::validate() const {
  if (n_samples < 1) throw std::invalid_argument("render: n_samples must be >= 1");
  if (!(background >= 0.0 && background <= 1.0)) {
    throw std::invalid_argument("render: background must be in [0, 1]");
  }
}

std::vector<Ray> rays_for_patch(const Pose& pose, const Matrix& coords) {
  if (coords.cols() != 2) throw std::invalid_argument("rays_for_patch: coords must be N x 2");
  const ViewFrame frame = view_frame(pose.normalized());
  std::vector<Ray> rays;
  rays.reserve(static_cast<std::size_t>(coords.rows()));
  for (ad::Index i = 0; i < coords.rows(); ++i) {
    rays.push_back(panel_ray(frame, coords(i, 0), coords(i, 1)));
  }
  return rays;
}

RenderResult render_rays(const FieldFn& field, const std::vector<Ray>& rays,
                         const RenderConfig& cfg) {
  cfg.validate();
  if (rays.empty()) throw std::invalid_argument("render_rays: no rays");
  const auto n = static_cast<ad::Index>(rays.size());
  const ad::Index s = cfg.n_samples;
  Matrix positions(n * s, 3);
  Matrix delta(n, s);
  bool shared_direction = true;
  for (const auto& r : rays) {
    if (!(r.far > r.near)) throw std::invalid_argument("render_rays: ray needs near < far");
    shared_direction = shared_direction && r.direction == rays[0].direction;
  }
  Rng rng(cfg.seed);
  std::vector<double> t(static_cast<std::size_t>(s));
  for (ad::Index i = 0; i < n; ++i) {
    const Ray& r = rays[static_cast<std::size_t>(i)];
    const double bin = (r.far - r.near) / static_cast<double>(s);
    for (ad::Index k = 0; k < s; ++k) {
      const double u = cfg.stratified ? rng.uniform() : 0.0;
      t[k] = r.near + (static_cast<double>(k) + u) * bin;
    }
    for (ad::Index k = 0; k < s; ++k) {
      delta(i, k) = (k + 1 < s ? t[k + 1] : r.far) - t[k];
      positions.row(i * s + k) = (r.origin + t[k] * r.direction).transpose();
    }
  }
  Matrix directions;
  if (shared_direction) {
    directions = rays[0].direction.transpose();
  } else {
    directions.resize(n * s, 3);
    for (ad::Index i = 0; i < n; ++i) {
      directions.middleRows(i * s, s) =
          rays[static_cast<std::size_t>(i)].direction.transpose().replicate(s, 1);
    }
  }

  const field::FieldOutput out = field(Tensor(std::move(positions)), Tensor(std::move(directions)));
  if (out.density.rows() != n * s || out.value.rows() != n * s) {
    throw std::invalid_argument("render_rays: field returned the wrong batch size");
  }
  const Tensor sigma = ad::reshape(out.density, n, s);
  const Tensor value = ad::reshape(out.value, n, s);
  const Tensor optical = ad::mul(sigma, Tensor(std::move(delta)));
  const Tensor trans = ad::exp(ad::scale(ad::exclusive_cumsum_cols(optical), -1.0));
  const Tensor alpha = ad::add_scalar(ad::scale(ad::exp(ad::scale(optical, -1.0)), -1.0), 1.0);
  const Tensor weights = ad::mul(trans, alpha);
  const Tensor final_t = ad::exp(ad::scale(ad::row_sum(optical), -1.0));
  Tensor pixels = ad::row_sum(ad::mul(weights, value));
  if (cfg.background != 0.0) pixels = ad::add(pixels, ad::scale(final_t, cfg.background));
  return {std::move(pixels), final_t, weights};
}

RenderResult render_rays(const field::RadianceField& f, const field::LatentPair& z,
                         const std::vector<Ray>& rays, const RenderConfig& cfg) {
  return render_rays(
      [&](const Tensor& x, const Tensor& d) { return f.query(x, d, z); }, rays, cfg);
}

Matrix pixel_center_grid(int height, int width) {
  Matrix coords(static_cast<ad::Index>(height) * width, 2);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      coords(r * width + c, 0) = pixel_center_coord(c, width);
      coords(r * width + c, 1) = pixel_center_coord(r, height);
    }
  }
  return coords;
}

std::vector<double> render_view(const field::RadianceField& f, const field::LatentPair& z,
                                const Pose& pose, int height, int width,
                                const RenderConfig& cfg, int chunk_rays) {
  if (chunk_rays < 1) throw std::invalid_argument("render_view: chunk_rays must be >= 1");
  ad::NoGradGuard no_grad;
  const Matrix coords = pixel_center_grid(height, width);
  const std::vector<Ray> rays = rays_for_patch(pose, coords);
  std::vector<double> out(rays.size());
  Rng seeds(cfg.seed);
  for (std::size_t start = 0; start < rays.size(); start += chunk_rays) {
    const std::size_t stop = std::min(rays.size(), start + static_cast<std::size_t>(chunk_rays));
    std::vector<Ray> chunk(rays.begin() + static_cast<std::ptrdiff_t>(start),
                           rays.begin() + static_cast<std::ptrdiff_t>(stop));
    RenderConfig c = cfg;
    c.seed = seeds.next_u64();
    const RenderResult res = render_rays(f, z, chunk, c);
    for (std::size_t i = start; i < stop; ++i) {
      out[i] = res.pixels.value()(static_cast<ad::Index>(i - start), 0);
    }
  }
  return out;
}

}  // namespace xrf::render
