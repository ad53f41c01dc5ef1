// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#include "xrf/geometry.hpp"

#include <numbers>
#include <stdexcept>

namespace xrf {

double normalize_degrees(double deg) {
  if (!std::isfinite(deg)) throw std::invalid_argument("angle must be finite");
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  if (r >= 360.0) r = 0.0;
  return r;
}

Pose Pose::normalized() const {
  Pose p = *this;
  p.theta_deg = normalize_degrees(theta_deg);
  return p;
}

void Pose::validate() const {
  if (!(fov_extent_mm > 0.0) || !std::isfinite(fov_extent_mm)) {
    throw std::invalid_argument("pose fov_extent must be > 0");
  }
  if (!std::isfinite(theta_deg) || !std::isfinite(elevation_deg)) {
    throw std::invalid_argument("pose angles must be finite");
  }
}

void sincos_degrees(double deg, double& s, double& c) {
  const double a = normalize_degrees(deg);
  const int quadrant = static_cast<int>(a / 90.0);
  const double rem = a - 90.0 * quadrant;
  const double rad = rem * std::numbers::pi / 180.0;
  const double s0 = rem == 0.0 ? 0.0 : std::sin(rad);
  const double c0 = rem == 0.0 ? 1.0 : std::cos(rad);
  switch (quadrant) {
    case 0: s = s0; c = c0; break;
    case 1: s = c0; c = -s0; break;
    case 2: s = -s0; c = -c0; break;
    default: s = -c0; c = s0; break;
  }
}

ViewFrame view_frame(const Pose& pose) {
  double st, ct, se, ce;
  sincos_degrees(pose.theta_deg, st, ct);
  sincos_degrees(pose.elevation_deg, se, ce);
  ViewFrame f;
  f.direction = Vec3(ce * ct, ce * st, se);
  f.u_axis = Vec3(-st, ct, 0.0);
  f.v_axis = Vec3(-se * ct, -se * st, ce);
  return f;
}

Ray panel_ray(const ViewFrame& frame, double x, double y) {
  Ray r;
  r.origin = x * frame.u_axis - y * frame.v_axis - kRayHalfLength * frame.direction;
  r.direction = frame.direction;
  r.near = 0.0;
  r.far = 2.0 * kRayHalfLength;
  return r;
}

}  // namespace xrf
