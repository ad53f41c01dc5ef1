// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Image-quality metrics: PSNR, SSIM, FID and KID.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "xrf/autodiff.hpp"
#include "xrf/objective.hpp"

namespace xrf::metrics {

using ad::Matrix;

/// Returned when the images are identical (MSE = 0).
inline constexpr double kPsnrCap = 100.0;

/// 10 log10(max_val^2 / MSE), capped at kPsnrCap.
double psnr(std::span<const double> a, std::span<const double> b, double max_val = 255.0);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double max_val = 255.0;
};

/// Mean local SSIM. Local moments use a Gaussian window centred on every
/// pixel; taps falling outside the image are dropped and the remaining
/// weights renormalised, so any image size (including smaller than the
/// window) is valid.
double ssim(std::span<const double> a, std::span<const double> b, int height, int width,
            const SsimOptions& opts = {});

enum class CovarianceMode { kSample, kPopulation };

/// ||mu_r - mu_f||^2 + tr(S_r + S_f - 2 (S_r S_f)^(1/2)); the trace of the
/// square root is taken from the eigenvalues of S_r^(1/2) S_f S_r^(1/2).
double fid(const Matrix& real, const Matrix& fake,
           CovarianceMode mode = CovarianceMode::kSample);

struct KidResult {
  double mean = 0.0;
  double std = 0.0;  // population std over subsets
};

/// Unbiased MMD^2 with k(x, y) = (x.y / D + 1)^3, averaged over n_subsets
/// draws of subset_size rows (without replacement) from each set.
KidResult kid(const Matrix& real, const Matrix& fake, int subset_size, int n_subsets,
              std::uint64_t seed);

struct ViewMetrics {
  double theta_deg = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct MetricReport {
  std::vector<ViewMetrics> views;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double fid = 0.0;
  KidResult kid;
  std::size_t n_pred = 0;
  std::size_t n_ref = 0;
  std::string extractor;
};

struct EvalOptions {
  int kid_subset_size = 50;
  int kid_subsets = 10;
  std::uint64_t seed = 0;
  CovarianceMode covariance = CovarianceMode::kSample;
};

/// Pairs predicted and reference views by theta (to 1e-6 degrees) and
/// computes per-view PSNR/SSIM on the 8-bit images plus set-level FID/KID on
/// pooled extractor features. Every reference theta must be present in pred.
MetricReport evaluate_stack(const std::filesystem::path& pred_manifest,
                            const std::filesystem::path& ref_manifest,
                            const objective::FeatureExtractor& fx, const EvalOptions& opts = {});

/// report.json, per_view.csv and psnr_by_angle.png in out_dir.
void write_report(const MetricReport& report, const std::filesystem::path& out_dir);

}  // namespace xrf::metrics
