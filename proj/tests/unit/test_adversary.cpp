// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "xrf/adversary.hpp"

namespace {

using namespace xrf;
using namespace xrf::adversary;
using xrf::testing::max_rel_err;
using xrf::testing::numeric_grad;
using xrf::testing::random_matrix;

drr::RadiographImage random_image(Rng& rng, int h, int w) {
  drr::RadiographImage img;
  img.height = h;
  img.width = w;
  for (int i = 0; i < h * w; ++i) img.pixels.push_back(rng.uniform());
  return img;
}

// Tent-weighted sum over every pixel: an independent form of bilinear lookup.
double tent_lookup(const drr::RadiographImage& img, double x, double y) {
  const double px = std::clamp((x + 1.0) * 0.5 * img.width - 0.5, 0.0, img.width - 1.0);
  const double py = std::clamp((y + 1.0) * 0.5 * img.height - 0.5, 0.0, img.height - 1.0);
  double acc = 0.0;
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const double wx = std::max(0.0, 1.0 - std::abs(px - c));
      const double wy = std::max(0.0, 1.0 - std::abs(py - r));
      acc += wx * wy * img.at(r, c);
    }
  }
  return acc;
}

TEST(PatchSpec, FullScaleForcesCentredPatch) {
  const auto s = sample_patch_spec(123, 16, 1.0, 1.0);
  EXPECT_EQ(s.scale, 1.0);
  EXPECT_EQ(s.center_x, 0.0);
  EXPECT_EQ(s.center_y, 0.0);
  EXPECT_EQ(s.size, 16);
}

TEST(PatchSpec, SameSeedSameSpec) {
  const auto a = sample_patch_spec(9, 8, 0.25, 1.0);
  const auto b = sample_patch_spec(9, 8, 0.25, 1.0);
  EXPECT_EQ(a.scale, b.scale);
  EXPECT_EQ(a.center_x, b.center_x);
  EXPECT_EQ(a.center_y, b.center_y);
}

TEST(PatchSpec, ScaleMeanAndFootprintOverManyDraws) {
  Rng rng(31);
  const int n = 10000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto s = sample_patch_spec(rng, 16, 0.25, 1.0);
    ASSERT_GE(s.scale, 0.25);
    ASSERT_LE(s.scale, 1.0);
    ASSERT_LE(std::abs(s.center_x) + s.scale, 1.0 + 1e-12);
    ASSERT_LE(std::abs(s.center_y) + s.scale, 1.0 + 1e-12);
    sum += s.scale;
  }
  const double sd_of_mean = 0.75 / std::sqrt(12.0) / std::sqrt(static_cast<double>(n));
  EXPECT_LT(std::abs(sum / n - 0.625), 3.0 * sd_of_mean);
}

TEST(PatchSpec, RejectsBadRanges) {
  EXPECT_THROW(sample_patch_spec(0, 16, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(sample_patch_spec(0, 16, 0.6, 0.5), std::invalid_argument);
  EXPECT_THROW(sample_patch_spec(0, 16, 0.5, 1.1), std::invalid_argument);
  EXPECT_THROW(sample_patch_spec(0, 3, 0.5, 1.0), std::invalid_argument);
}

TEST(PatchCoords, TwoByTwoFullScaleHitsCorners) {
  const Matrix c = patch_coords({2, 1.0, 0.0, 0.0});
  ASSERT_EQ(c.rows(), 4);
  EXPECT_EQ(c(0, 0), -1.0);
  EXPECT_EQ(c(0, 1), -1.0);
  EXPECT_EQ(c(1, 0), 1.0);
  EXPECT_EQ(c(1, 1), -1.0);
  EXPECT_EQ(c(2, 0), -1.0);
  EXPECT_EQ(c(2, 1), 1.0);
  EXPECT_EQ(c(3, 0), 1.0);
  EXPECT_EQ(c(3, 1), 1.0);
}

TEST(PatchCoords, LatticeSpacingAndBounds) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto spec = sample_patch_spec(rng, 5 + trial % 7, 0.1, 1.0);
    const Matrix c = patch_coords(spec);
    const int k = spec.size;
    const double step = 2.0 * spec.scale / (k - 1);
    EXPECT_LE(c.cwiseAbs().maxCoeff(), 1.0);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b + 1 < k; ++b) {
        EXPECT_NEAR(c(a * k + b + 1, 0) - c(a * k + b, 0), step, 1e-12);
        EXPECT_NEAR(c((b + 1) * k + a, 1) - c(b * k + a, 1), step, 1e-12);
      }
    }
    EXPECT_NEAR(c(0, 0), spec.center_x - spec.scale, 1e-12);
    EXPECT_NEAR(c(k * k - 1, 1), spec.center_y + spec.scale, 1e-12);
  }
}

TEST(PatchCoords, RejectsOutOfBoundsFootprint) {
  EXPECT_THROW(patch_coords({4, 0.5, 0.6, 0.0}), std::invalid_argument);
  EXPECT_THROW(patch_coords({4, 0.0, 0.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(patch_coords({1, 0.5, 0.0, 0.0}), std::invalid_argument);
}

TEST(ExtractPatch, ConstantImageGivesConstantPatch) {
  drr::RadiographImage img;
  img.height = 6;
  img.width = 9;
  img.pixels.assign(54, 0.37);
  Rng rng(1);
  const Matrix out = extract_patch(img, random_matrix(rng, 40, 2, -1.0, 1.0));
  for (ad::Index i = 0; i < out.size(); ++i) EXPECT_NEAR(out(0, i), 0.37, 1e-15);
}

TEST(ExtractPatch, PixelCentresReturnPixels) {
  Rng rng(2);
  const auto img = random_image(rng, 5, 7);
  Matrix c(35, 2);
  for (int r = 0; r < 5; ++r) {
    for (int k = 0; k < 7; ++k) {
      c(r * 7 + k, 0) = pixel_center_coord(k, 7);
      c(r * 7 + k, 1) = pixel_center_coord(r, 5);
    }
  }
  const Matrix out = extract_patch(img, c);
  for (int i = 0; i < 35; ++i) EXPECT_NEAR(out(0, i), img.pixels[i], 1e-12);
}

TEST(ExtractPatch, MatchesTentOracle) {
  Rng rng(3);
  const auto img = random_image(rng, 11, 8);
  const Matrix c = random_matrix(rng, 500, 2, -1.0, 1.0);
  const Matrix out = extract_patch(img, c);
  for (int i = 0; i < 500; ++i) EXPECT_NEAR(out(0, i), tent_lookup(img, c(i, 0), c(i, 1)), 1e-6);
}

TEST(Discriminator, FeatureShapeFollowsStridePlan) {
  DiscArch arch;
  const auto d = init_discriminator(arch, 1);
  // 16 -> 8 -> 4 -> 2; the second block is exposed.
  EXPECT_EQ(d.feature_shape().width, 4);
  EXPECT_EQ(d.feature_shape().height, 4);
  EXPECT_EQ(d.feature_shape().depth, 32);
  Rng rng(2);
  const auto out = d(Tensor(random_matrix(rng, 3, 256, 0, 1)), {0.3, 0.5, 1.0});
  EXPECT_EQ(out.logits.rows(), 3);
  EXPECT_EQ(out.logits.cols(), 1);
  EXPECT_EQ(out.features.rows(), 3);
  EXPECT_EQ(out.features.cols(), 4 * 4 * 32);
}

TEST(Discriminator, DeterministicAndScaleAware) {
  DiscArch arch;
  arch.patch_size = 8;
  const auto d = init_discriminator(arch, 5);
  const auto e = init_discriminator(arch, 5);
  Rng rng(6);
  const Tensor p(random_matrix(rng, 1, 64, 0, 1));
  const double a = d(p, {0.5}).logits.item();
  EXPECT_EQ(a, d(p, {0.5}).logits.item());
  EXPECT_EQ(a, e(p, {0.5}).logits.item());
  EXPECT_NE(a, d(p, {0.9}).logits.item());
}

TEST(Discriminator, RejectsShapeMismatch) {
  DiscArch arch;
  arch.patch_size = 8;
  const auto d = init_discriminator(arch, 5);
  EXPECT_THROW(d(Tensor(Matrix::Zero(1, 63)), {0.5}), std::invalid_argument);
  EXPECT_THROW(d(Tensor(Matrix::Zero(2, 64)), {0.5}), std::invalid_argument);
}

TEST(Discriminator, LogitGradientMatchesCentralDifferences) {
  DiscArch arch;
  arch.patch_size = 8;
  arch.channels1 = 4;
  arch.channels2 = 6;
  arch.channels3 = 8;
  auto d = init_discriminator(arch, 7);
  Rng rng(8);
  for (auto& p : d.parameters()) p.value_mut() = random_matrix(rng, p.rows(), p.cols(), -0.5, 0.5);
  Tensor patch(random_matrix(rng, 2, 64, 0, 1), true);
  auto loss = [&] { return ad::sum(d(patch, {0.4, 0.8}).logits); };
  loss().backward();
  const Matrix numeric = numeric_grad([&] { return loss().item(); }, patch);
  EXPECT_LT(max_rel_err(patch.grad(), numeric, 1e-6), 1e-4);
  for (auto& p : d.parameters()) {
    p.zero_grad();
  }
  loss().backward();
  for (std::size_t i = 0; i < d.parameters().size(); ++i) {
    auto& p = d.parameters()[i];
    EXPECT_LT(max_rel_err(p.grad(), numeric_grad([&] { return loss().item(); }, p), 1e-6), 1e-4)
        << d.parameter_names()[i];
  }
}

}  // namespace
