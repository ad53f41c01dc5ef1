// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "xrf/drr.hpp"
#include "xrf/geometry.hpp"
#include "xrf/image_io.hpp"
#include "xrf/phantom.hpp"

namespace {

using namespace xrf;
using drr::Polarity;

// 20 voxels of 10 mm with a 5-voxel margin: a 100 mm cube of mu = 0.01.
phantom::Volume beer_lambert_cube() {
  return phantom::make_phantom(phantom::PhantomKind::kCube, 20, 0,
                               {{"mu", 0.01}, {"margin", 5}, {"spacing", 10.0}});
}

TEST(Geometry, NormalizeDegreesWrapsIntoRange) {
  EXPECT_EQ(normalize_degrees(360.0), 0.0);
  EXPECT_EQ(normalize_degrees(-90.0), 270.0);
  EXPECT_EQ(normalize_degrees(725.0), 5.0);
  Pose p;
  p.theta_deg = -5.0;
  EXPECT_EQ(p.normalized().theta_deg, 355.0);
}

TEST(Geometry, PoseValidation) {
  Pose p;
  p.fov_extent_mm = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.fov_extent_mm = 10.0;
  EXPECT_NO_THROW(p.validate());
}

TEST(Geometry, ViewFrameIsOrthonormal) {
  for (double theta : {0.0, 37.0, 90.0, 181.0, 359.0}) {
    for (double elev : {0.0, 20.0}) {
      Pose p;
      p.theta_deg = theta;
      p.elevation_deg = elev;
      const ViewFrame f = view_frame(p);
      EXPECT_NEAR(f.direction.norm(), 1.0, 1e-12);
      EXPECT_NEAR(f.u_axis.norm(), 1.0, 1e-12);
      EXPECT_NEAR(f.v_axis.norm(), 1.0, 1e-12);
      EXPECT_NEAR(f.direction.dot(f.u_axis), 0.0, 1e-12);
      EXPECT_NEAR(f.direction.dot(f.v_axis), 0.0, 1e-12);
      EXPECT_NEAR(f.u_axis.dot(f.v_axis), 0.0, 1e-12);
    }
  }
}

TEST(Geometry, OppositeViewsHaveNegatedDirections) {
  Pose a, b;
  a.theta_deg = 30.0;
  b.theta_deg = 210.0;
  EXPECT_EQ(view_frame(a).direction, Vec3(-view_frame(b).direction));
}

TEST(Geometry, CentreRayPassesThroughOrigin) {
  Pose p;
  p.theta_deg = 77.0;
  const Ray r = panel_ray(view_frame(p), 0.0, 0.0);
  const double t = -r.origin.dot(r.direction);
  EXPECT_NEAR((r.origin + t * r.direction).norm(), 0.0, 1e-12);
  EXPECT_LT(r.near, t);
  EXPECT_GT(r.far, t);
}

TEST(Drr, EmptyVolumeGivesZeroImage) {
  phantom::Volume v;
  v.dims = {8, 8, 8};
  v.voxels.assign(512, 0.0f);
  const auto img = drr::project(v, Pose{}, 6, 5, 16);
  for (double px : img.pixels) EXPECT_EQ(px, 0.0);
}

TEST(Drr, UniformCubeMatchesBeerLambert) {
  const auto v = beer_lambert_cube();
  Pose pose;
  pose.fov_extent_mm = drr::default_fov_extent(v);
  for (double theta : {0.0, 90.0}) {
    pose.theta_deg = theta;
    const auto img = drr::project(v, pose, 3, 3, 512);
    EXPECT_NEAR(img.at(1, 1), 1.0 - std::exp(-1.0), 1e-3) << "theta " << theta;
  }
}

TEST(Drr, QuadratureErrorHasFirstOrderEnvelope) {
  // Oblique off-centre ray through a cube: the trilinear profile has kinks at
  // unaligned places, so midpoint errors wobble with kink position but stay
  // under a C / n envelope.
  const auto v = beer_lambert_cube();
  const double fov = drr::default_fov_extent(v);
  Pose pose;
  pose.theta_deg = 23.0;
  pose.elevation_deg = 11.0;
  const Ray ray = panel_ray(view_frame(pose), 0.213, -0.377);
  const double reference = drr::line_integral(v, ray, fov, 1 << 20);
  std::vector<double> err;
  for (int n = 8; n <= 1024; n *= 2) {
    err.push_back(std::abs(drr::line_integral(v, ray, fov, n) - reference));
  }
  ASSERT_GT(err.front(), 1e-6);
  for (std::size_t i = 1; i < err.size(); ++i) {
    EXPECT_LE(err[i], 2.0 * err.front() / std::ldexp(1.0, static_cast<int>(i))) << "doubling " << i;
  }
  const double order = std::log2(err.front() / std::max(err.back(), 1e-300)) / (err.size() - 1);
  EXPECT_GE(order, 1.0);
}

TEST(Drr, SymmetricPhantomGivesEqualOrthogonalViews) {
  const auto v = phantom::make_phantom(phantom::PhantomKind::kCube, 32, 0);
  Pose a, b;
  a.fov_extent_mm = b.fov_extent_mm = drr::default_fov_extent(v);
  b.theta_deg = 90.0;
  const auto ia = drr::project(v, a, 16, 16, 256);
  const auto ib = drr::project(v, b, 16, 16, 256);
  for (std::size_t i = 0; i < ia.pixels.size(); ++i) EXPECT_NEAR(ia.pixels[i], ib.pixels[i], 1e-3);
}

TEST(Drr, ScalingMuNeverDarkensAnyPixel) {
  auto v = phantom::make_phantom(phantom::PhantomKind::kEllipsoids, 24, 3);
  auto w = v;
  for (auto& x : w.voxels) x *= 1.7f;
  Pose p;
  p.theta_deg = 40.0;
  p.fov_extent_mm = drr::default_fov_extent(v);
  const auto a = drr::project(v, p, 12, 12, 64);
  const auto b = drr::project(w, p, 12, 12, 64);
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    EXPECT_GE(b.pixels[i], a.pixels[i]);
    EXPECT_GE(a.pixels[i], 0.0);
    EXPECT_LE(b.pixels[i], 1.0);
  }
}

TEST(Drr, DarkPolarityIsComplement) {
  const auto v = phantom::make_phantom(phantom::PhantomKind::kKneeToy, 24, 1);
  Pose p;
  p.fov_extent_mm = drr::default_fov_extent(v);
  const auto a = drr::project(v, p, 8, 8, 64, Polarity::kAttenuationBright);
  const auto b = drr::project(v, p, 8, 8, 64, Polarity::kAttenuationDark);
  for (std::size_t i = 0; i < a.pixels.size(); ++i) EXPECT_NEAR(a.pixels[i] + b.pixels[i], 1.0, 1e-15);
}

TEST(Drr, ProjectIsDeterministic) {
  const auto v = phantom::make_phantom(phantom::PhantomKind::kEllipsoids, 24, 9);
  Pose p;
  p.theta_deg = 135.0;
  EXPECT_EQ(drr::project(v, p, 10, 10, 32).pixels, drr::project(v, p, 10, 10, 32).pixels);
}

TEST(Drr, RejectsInvalidInput) {
  const auto v = phantom::make_phantom(phantom::PhantomKind::kCube, 8, 0);
  EXPECT_THROW(drr::project(v, Pose{}, 4, 4, 1), std::invalid_argument);
  EXPECT_THROW(drr::project(v, Pose{}, 4, 4, 0), std::invalid_argument);
  EXPECT_THROW(drr::project(v, Pose{}, 4, 4, -3), std::invalid_argument);
  phantom::Volume bad;
  bad.dims = {0, 4, 4};
  EXPECT_THROW(drr::project(bad, Pose{}, 4, 4, 8), std::invalid_argument);
  EXPECT_THROW(drr::parse_polarity("sepia"), std::invalid_argument);
}

TEST(Dataset, DefaultsFollowSeventyTwoViewProtocol) {
  const auto dir = xrf::testing::scratch_dir("ds");
  const auto v = phantom::make_phantom(phantom::PhantomKind::kCube, 8, 0);
  drr::DatasetOptions o;
  o.height = o.width = 4;
  o.n_steps = 8;
  const auto m = drr::make_dataset(v, o, dir);
  ASSERT_EQ(m.views.size(), 72u);
  for (int k = 0; k < 72; ++k) {
    EXPECT_EQ(m.views[k].pose.theta_deg, 5.0 * k);
    EXPECT_TRUE(std::filesystem::exists(dir / m.views[k].file));
  }
  EXPECT_EQ(m.volume_hash, v.content_hash());
  const auto loaded = drr::load_manifest(dir / drr::kManifestName);
  ASSERT_EQ(loaded.views.size(), m.views.size());
  for (std::size_t k = 0; k < m.views.size(); ++k) {
    EXPECT_EQ(loaded.views[k].file, m.views[k].file);
    EXPECT_EQ(loaded.views[k].pose.theta_deg, m.views[k].pose.theta_deg);
    EXPECT_EQ(loaded.views[k].pose.fov_extent_mm, m.views[k].pose.fov_extent_mm);
  }
  EXPECT_EQ(loaded.height, 4);
  EXPECT_EQ(loaded.volume_hash, m.volume_hash);
}

TEST(Dataset, PngHoldsRoundedIntensities) {
  const auto dir = xrf::testing::scratch_dir("ds");
  const auto v = phantom::make_phantom(phantom::PhantomKind::kKneeToy, 16, 1);
  drr::DatasetOptions o;
  o.n_views = 1;
  o.height = o.width = 8;
  o.n_steps = 32;
  const auto m = drr::make_dataset(v, o, dir);
  ASSERT_EQ(m.views.size(), 1u);
  EXPECT_EQ(m.views[0].pose.theta_deg, 0.0);
  Pose p = m.views[0].pose;
  const auto img = drr::project(v, p, 8, 8, 32);
  const Gray8 png = read_png(dir / m.views[0].file);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    EXPECT_EQ(png.pixels[i], static_cast<std::uint8_t>(std::lround(255.0 * img.pixels[i])));
  }
  const auto views = drr::load_views(m, dir);
  EXPECT_EQ(views[0].pixels[3], png.pixels[3] / 255.0);
}

TEST(Dataset, RejectsOverfullOrbitAndUnwritableDir) {
  const auto v = phantom::make_phantom(phantom::PhantomKind::kCube, 8, 0);
  drr::DatasetOptions o;
  o.n_views = 73;
  EXPECT_THROW(drr::make_dataset(v, o, xrf::testing::scratch_dir("ds")), std::invalid_argument);
  o.n_views = 2;
  o.height = o.width = 2;
  const auto dir = xrf::testing::scratch_dir("ds");
  { std::ofstream(dir / "file") << "x"; }
  EXPECT_THROW(drr::make_dataset(v, o, dir / "file" / "sub"), std::runtime_error);
}

}  // namespace
