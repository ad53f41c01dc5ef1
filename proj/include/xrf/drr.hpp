// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Digitally reconstructed radiographs from a Volume on a vertical-axis orbit.

#include <filesystem>
#include <string>
#include <vector>

#include "xrf/geometry.hpp"
#include "xrf/phantom.hpp"

namespace xrf::drr {

enum class Polarity {
  kAttenuationBright,  // pixel = 1 - exp(-integral)
  kAttenuationDark,    // pixel = exp(-integral)
};

Polarity parse_polarity(const std::string& name);
std::string polarity_name(Polarity p);

struct RadiographImage {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;  // row-major, each in [0, 1]
  Pose pose;

  double at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
};

/// Default fov: half of the largest physical extent of the volume.
double default_fov_extent(const phantom::Volume& v);

/// Line integral of mu (dimensionless) along a scene-unit ray. The ray is
/// clipped to the volume's bounding box and integrated by the midpoint rule
/// with n_steps samples; mu is trilinearly interpolated between voxel centres,
/// clamped at the box faces and zero outside the box.
double line_integral(const phantom::Volume& v, const Ray& scene_ray,
                     double fov_extent_mm, int n_steps);

/// Parallel-beam projection. Pixel (r, c) integrates along
/// panel_ray(frame, pixel_center_coord(c, W), pixel_center_coord(r, H)).
RadiographImage project(const phantom::Volume& v, const Pose& pose, int height,
                        int width, int n_steps,
                        Polarity polarity = Polarity::kAttenuationBright);

struct DatasetView {
  std::string file;  // relative to the manifest directory
  Pose pose;
};

struct DatasetManifest {
  int height = 0;
  int width = 0;
  int n_steps = 0;
  Polarity polarity = Polarity::kAttenuationBright;
  std::string volume_hash;
  std::vector<DatasetView> views;
};

struct DatasetOptions {
  int n_views = 72;
  double step_deg = 5.0;
  int height = 128;
  int width = 128;
  int n_steps = 512;
  double fov_extent_mm = 0.0;  // <= 0 selects default_fov_extent
  Polarity polarity = Polarity::kAttenuationBright;
};

/// Views at theta = 0, step, 2*step, ... written as view_NNN.png plus
/// manifest.json in out_dir.
DatasetManifest make_dataset(const phantom::Volume& v, const DatasetOptions& opts,
                             const std::filesystem::path& out_dir);

inline constexpr const char* kManifestName = "manifest.json";

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Loads every view image of a manifest (8-bit PNGs scaled to [0, 1]).
std::vector<RadiographImage> load_views(const DatasetManifest& m,
                                        const std::filesystem::path& dir);

}  // namespace xrf::drr
