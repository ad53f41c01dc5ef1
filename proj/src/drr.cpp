// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#include "xrf/drr.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "xrf/image_io.hpp"

namespace xrf::drr {

namespace {

using json = nlohmann::json;

// Trilinear sample at continuous voxel coordinates (voxel i covers [i, i+1)).
double sample(const phantom::Volume& v, double gx, double gy, double gz) {
  const auto& d = v.dims;
  if (gx < 0 || gy < 0 || gz < 0 || gx > d[0] || gy > d[1] || gz > d[2]) return 0.0;
  double g[3] = {gx - 0.5, gy - 0.5, gz - 0.5};
  int i0[3], i1[3];
  double f[3];
  for (int a = 0; a < 3; ++a) {
    g[a] = std::clamp(g[a], 0.0, static_cast<double>(d[a] - 1));
    i0[a] = static_cast<int>(std::floor(g[a]));
    i1[a] = std::min(i0[a] + 1, d[a] - 1);
    f[a] = g[a] - i0[a];
  }
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int x = (c & 1) ? i1[0] : i0[0];
    const int y = (c & 2) ? i1[1] : i0[1];
    const int z = (c & 4) ? i1[2] : i0[2];
    const double w = ((c & 1) ? f[0] : 1 - f[0]) * ((c & 2) ? f[1] : 1 - f[1]) *
                     ((c & 4) ? f[2] : 1 - f[2]);
    if (w != 0.0) acc += w * v.at(x, y, z);
  }
  return acc;
}

}  // namespace

Polarity parse_polarity(const std::string& name) {
  if (name == "bright") return Polarity::kAttenuationBright;
  if (name == "dark") return Polarity::kAttenuationDark;
  throw std::invalid_argument("unknown polarity '" + name + "' (expected bright|dark)");
}

std::string polarity_name(Polarity p) {
  return p == Polarity::kAttenuationBright ? "bright" : "dark";
}

double default_fov_extent(const phantom::Volume& v) {
  return std::max({v.half_extent(0), v.half_extent(1), v.half_extent(2)});
}

double line_integral(const phantom::Volume& v, const Ray& scene_ray,
                     double fov_extent_mm, int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("n_steps must be positive");
  const Vec3 o = scene_ray.origin * fov_extent_mm;
  const Vec3& dir = scene_ray.direction;
  double t0 = scene_ray.near * fov_extent_mm;
  double t1 = scene_ray.far * fov_extent_mm;
  // Slab clipping against the centred bounding box.
  for (int a = 0; a < 3; ++a) {
    const double h = v.half_extent(a);
    if (dir[a] == 0.0) {
      if (o[a] < -h || o[a] > h) return 0.0;
      continue;
    }
    double ta = (-h - o[a]) / dir[a];
    double tb = (h - o[a]) / dir[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (!(t1 > t0)) return 0.0;
  const double dt = (t1 - t0) / n_steps;
  const double inv = 1.0 / v.spacing;
  double acc = 0.0;
  for (int k = 0; k < n_steps; ++k) {
    const double t = t0 + (k + 0.5) * dt;
    const Vec3 p = o + t * dir;
    acc += sample(v, p[0] * inv + 0.5 * v.dims[0], p[1] * inv + 0.5 * v.dims[1],
                  p[2] * inv + 0.5 * v.dims[2]);
  }
  return acc * dt;
}

RadiographImage project(const phantom::Volume& v, const Pose& pose, int height,
                        int width, int n_steps, Polarity polarity) {
  for (int d : v.dims) {
    if (d < 1) throw std::invalid_argument("project: degenerate volume");
  }
  if (v.voxels.size() != v.voxel_count()) throw std::invalid_argument("project: voxel count");
  if (n_steps < 2) throw std::invalid_argument("project: n_steps must be >= 2");
  if (height < 1 || width < 1) throw std::invalid_argument("project: resolution must be >= 1");
  pose.validate();
  RadiographImage img;
  img.height = height;
  img.width = width;
  img.pose = pose.normalized();
  img.pixels.resize(static_cast<std::size_t>(height) * width);
  const ViewFrame frame = view_frame(img.pose);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const Ray ray = panel_ray(frame, pixel_center_coord(c, width), pixel_center_coord(r, height));
      const double integral = line_integral(v, ray, pose.fov_extent_mm, n_steps);
      const double transmitted = std::exp(-integral);
      const double value =
          polarity == Polarity::kAttenuationBright ? 1.0 - transmitted : transmitted;
      img.pixels[static_cast<std::size_t>(r) * width + c] = std::clamp(value, 0.0, 1.0);
    }
  }
  return img;
}

DatasetManifest make_dataset(const phantom::Volume& v, const DatasetOptions& opts,
                             const std::filesystem::path& out_dir) {
  if (opts.n_views < 1) throw std::invalid_argument("n_views must be >= 1");
  if (!(opts.step_deg > 0.0)) throw std::invalid_argument("step_deg must be > 0");
  if (opts.n_views * opts.step_deg > 360.0 + 1e-9) {
    throw std::invalid_argument("n_views * step_deg must not exceed 360");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw std::runtime_error("cannot create output directory " + out_dir.string());
  }
  DatasetManifest m;
  m.height = opts.height;
  m.width = opts.width;
  m.n_steps = opts.n_steps;
  m.polarity = opts.polarity;
  m.volume_hash = v.content_hash();
  const double fov = opts.fov_extent_mm > 0 ? opts.fov_extent_mm : default_fov_extent(v);
  for (int k = 0; k < opts.n_views; ++k) {
    Pose pose;
    pose.theta_deg = normalize_degrees(k * opts.step_deg);
    pose.fov_extent_mm = fov;
    const RadiographImage img = project(v, pose, opts.height, opts.width, opts.n_steps, opts.polarity);
    char name[32];
    std::snprintf(name, sizeof(name), "view_%03d.png", k);
    write_png(out_dir / name, quantize(img.pixels, img.height, img.width));
    m.views.push_back({name, img.pose});
  }
  save_manifest(m, out_dir / kManifestName);
  return m;
}

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  json j;
  j["format"] = "xrf-dataset-1";
  j["height"] = m.height;
  j["width"] = m.width;
  j["n_steps"] = m.n_steps;
  j["polarity"] = polarity_name(m.polarity);
  j["volume_hash"] = m.volume_hash;
  j["views"] = json::array();
  for (const auto& view : m.views) {
    j["views"].push_back({{"file", view.file},
                          {"theta_deg", view.pose.theta_deg},
                          {"elevation_deg", view.pose.elevation_deg},
                          {"distance_mm", view.pose.distance_mm},
                          {"fov_extent_mm", view.pose.fov_extent_mm}});
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write manifest " + path.string());
  f << j.dump(2) << '\n';
  if (!f) throw std::runtime_error("failed writing manifest " + path.string());
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open manifest " + path.string());
  json j;
  try {
    j = json::parse(f);
    if (j.at("format").get<std::string>() != "xrf-dataset-1") {
      throw std::runtime_error("unsupported manifest format");
    }
    DatasetManifest m;
    m.height = j.at("height").get<int>();
    m.width = j.at("width").get<int>();
    m.n_steps = j.at("n_steps").get<int>();
    m.polarity = parse_polarity(j.at("polarity").get<std::string>());
    m.volume_hash = j.at("volume_hash").get<std::string>();
    for (const auto& e : j.at("views")) {
      DatasetView view;
      view.file = e.at("file").get<std::string>();
      view.pose.theta_deg = e.at("theta_deg").get<double>();
      view.pose.elevation_deg = e.at("elevation_deg").get<double>();
      view.pose.distance_mm = e.at("distance_mm").get<double>();
      view.pose.fov_extent_mm = e.at("fov_extent_mm").get<double>();
      m.views.push_back(std::move(view));
    }
    return m;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed manifest " + path.string() + ": " + e.what());
  }
}

std::vector<RadiographImage> load_views(const DatasetManifest& m,
                                        const std::filesystem::path& dir) {
  std::vector<RadiographImage> out;
  out.reserve(m.views.size());
  for (const auto& view : m.views) {
    const Gray8 g = read_png(dir / view.file);
    if (g.height != m.height || g.width != m.width) {
      throw std::runtime_error("image " + view.file + " does not match manifest resolution");
    }
    RadiographImage img;
    img.height = g.height;
    img.width = g.width;
    img.pose = view.pose;
    img.pixels.resize(g.pixels.size());
    for (std::size_t i = 0; i < g.pixels.size(); ++i) img.pixels[i] = g.pixels[i] / 255.0;
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace xrf::drr
