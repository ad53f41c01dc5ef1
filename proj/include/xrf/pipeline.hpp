// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// End-to-end runs: train -> finetune on one view -> render the orbit ->
// evaluate against the dataset, and the loss-weighting ablation over it.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "xrf/metrics.hpp"
#include "xrf/trainloop.hpp"

namespace xrf::pipeline {

struct PipelineOptions {
  double finetune_theta_deg = 0.0;
  train::RenderOptions render;
  metrics::EvalOptions eval;
};

struct PipelineResult {
  train::RunCheckpoint tuned;
  metrics::MetricReport report;
  double input_mse_before = 0.0;  // best-of-M latents, untouched parameters
  double input_mse_after = 0.0;   // selected iterate
};

/// Writes into out_dir: config.resolved.json, checkpoint.xrfc, history.csv,
/// finetuned.xrfc, render/ (stack + manifest) and eval/ (report).
PipelineResult run(const train::TrainConfig& cfg, const std::filesystem::path& dataset_manifest,
                   const std::filesystem::path& out_dir, const PipelineOptions& opts = {},
                   const train::ProgressFn& progress = {});

/// Index of the dataset view at theta (1e-6 degree tolerance); throws if absent.
std::size_t view_at(const std::vector<drr::RadiographImage>& views, double theta_deg);

/// fixed(0.6,0.4), fixed(0.5,0.5), fixed(0.4,0.6), uncertainty.
std::vector<train::LambdaMode> ablation_grid();

struct AblationRow {
  train::LambdaMode mode;
  std::uint64_t seed = 0;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double fid = 0.0;
  double kid_mean = 0.0;
};

using AblationProgress = std::function<void(const AblationRow&)>;

/// One pipeline run per (mode, seed) under out_dir/<mode>/seed_<s>.
std::vector<AblationRow> run_ablation(const train::TrainConfig& base,
                                      const std::vector<train::LambdaMode>& modes,
                                      const std::vector<std::uint64_t>& seeds,
                                      const std::filesystem::path& dataset_manifest,
                                      const std::filesystem::path& out_dir,
                                      const PipelineOptions& opts = {},
                                      const AblationProgress& progress = {});

struct ModeSummary {
  train::LambdaMode mode;
  double mean_psnr = 0.0;
  double std_psnr = 0.0;
  double mean_ssim = 0.0;
  double std_ssim = 0.0;
};

/// Per-mode mean and population std over seeds, in first-appearance order.
std::vector<ModeSummary> summarize(const std::vector<AblationRow>& rows);

/// ablation.csv (per run) and ablation.md (per-mode table).
void write_ablation_table(const std::vector<AblationRow>& rows, const std::filesystem::path& dir);

}  // namespace xrf::pipeline
