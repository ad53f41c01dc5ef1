// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <cmath>

namespace xrf {

using Vec3 = Eigen::Vector3d;

/// A view on the vertical-axis orbit.
///
/// Scene units are multiples of fov_extent: the imaged square on the panel
/// spans [-1, 1]^2 scene units, i.e. [-fov_extent, fov_extent]^2 mm.
struct Pose {
  double theta_deg = 0.0;      // rotation about +z, normalised to [0, 360)
  double elevation_deg = 0.0;  // tilt of the view direction out of the xy-plane
  double distance_mm = 1000.0; // source-to-centre; unused by parallel beams
  double fov_extent_mm = 32.0; // half-width of the imaged region

  Pose normalized() const;
  void validate() const;
};

/// Wraps any finite angle into [0, 360).
double normalize_degrees(double deg);

/// Unit view direction and the two panel axes (u to the right, v up).
struct ViewFrame {
  Vec3 direction;
  Vec3 u_axis;
  Vec3 v_axis;
};

/// Exact at multiples of 90 degrees, and sin/cos of (a + 180) are exact
/// negatives of those of a.
void sincos_degrees(double deg, double& s, double& c);

ViewFrame view_frame(const Pose& pose);

struct Ray {
  Vec3 origin;
  Vec3 direction;
  double near = 0.0;
  double far = 1.0;
};

/// Half-length of every parallel-beam ray: covers the [-1, 1]^3 scene cube.
inline const double kRayHalfLength = std::sqrt(3.0);

/// Ray through normalised image coordinates (x right, y down; both in
/// [-1, 1]) for a parallel-beam panel. Scene units.
Ray panel_ray(const ViewFrame& frame, double x, double y);

/// Normalised coordinate of pixel centre i on an axis of n pixels.
inline double pixel_center_coord(int i, int n) { return 2.0 * (i + 0.5) / n - 1.0; }

}  // namespace xrf
