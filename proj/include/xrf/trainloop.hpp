// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Adversarial training, single-view fine-tuning and full-orbit rendering.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "xrf/adversary.hpp"
#include "xrf/drr.hpp"
#include "xrf/field.hpp"
#include "xrf/objective.hpp"
#include "xrf/optim.hpp"
#include "xrf/render.hpp"

namespace xrf::train {

using ad::Matrix;

enum class LambdaKind { kFixed, kUncertainty };

struct LambdaMode {
  LambdaKind kind = LambdaKind::kUncertainty;
  double lambda1 = 0.5;  // weight of L_r in fixed mode
  double lambda2 = 0.5;  // weight of L_mse in fixed mode

  static LambdaMode fixed(double l1, double l2) { return {LambdaKind::kFixed, l1, l2}; }
  static LambdaMode uncertainty() { return {}; }
  /// "uncertainty" or "fixed(0.6,0.4)".
  std::string name() const;
};

struct TrainConfig {
  std::int64_t steps = 2000;
  int batch_patches = 1;
  int patch_size = 16;
  double scale_min = 0.25;
  double scale_max = 1.0;
  optim::AdamConfig gen_opt{1e-3, 0.9, 0.999, 1e-8};
  optim::AdamConfig disc_opt{2e-4, 0.5, 0.999, 1e-8};
  optim::AdamConfig uncertainty_opt{1e-2, 0.9, 0.999, 1e-8};
  LambdaMode lambda;
  /// Total generator loss = adversarial term + weighted term when set,
  /// weighted term only otherwise.
  bool adversarial_term = true;
  double r1_gamma = 1.0;
  field::FieldArch field_arch{4, 64, 32, 8, 8, {}};
  adversary::DiscArch disc_arch;
  int decoder_hidden = 16;
  render::RenderConfig train_render{32, true, 0.0, 0};
  int eval_samples = 64;
  objective::ExtractorKind extractor = objective::ExtractorKind::kSeededRandom;
  std::uint64_t extractor_seed = 0;
  std::string extractor_weights;
  std::uint64_t seed = 0;
  int log_every = 100;

  int finetune_steps = 60;
  int finetune_candidates = 32;
  double finetune_lr = 2e-4;
  int finetune_eval_every = 10;

  void validate() const;
};

/// Geometry of the training images, recorded so renders match the dataset.
struct ImageInfo {
  int height = 0;
  int width = 0;
  double elevation_deg = 0.0;
  double distance_mm = 1000.0;
  double fov_extent_mm = 32.0;
};

struct HistoryRow {
  std::int64_t step = 0;
  double loss_d = 0.0;
  double loss_g_adv = 0.0;
  double l_r = 0.0;
  double l_mse = 0.0;
  double sigma1_sq = 1.0;
  double sigma2_sq = 1.0;
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::int64_t t = 0;
};

struct FinetuneRow {
  int iteration = 0;
  double view_mse = 0.0;
};

struct RunCheckpoint {
  TrainConfig config;
  ImageInfo image;
  field::RadianceField field;
  adversary::Discriminator disc;
  objective::AuxDecoder decoder;
  objective::UncertaintyParams uncertainty;
  AdamState gen_state;
  AdamState disc_state;
  AdamState uncertainty_state;
  std::string rng_state;
  std::int64_t step = 0;
  std::vector<HistoryRow> history;
  /// Set by finetune; render_full falls back to zero latents when absent.
  std::optional<field::LatentPair> latents;
  std::vector<FinetuneRow> finetune_history;
};

/// Fresh run: seeded parameters, zeroed optimizer state, step 0.
RunCheckpoint init_run(const TrainConfig& cfg, const ImageInfo& image);

std::unique_ptr<objective::FeatureExtractor> make_extractor(const TrainConfig& cfg);

using ProgressFn = std::function<void(const HistoryRow&)>;

/// Continues ckpt until ckpt.step == ckpt.config.steps. Throws
/// TrainingDiverged on a non-finite loss, naming the step and the term.
/// progress is called every config.log_every steps.
void train_steps(RunCheckpoint& ckpt, std::span<const drr::RadiographImage> views,
                 const objective::FeatureExtractor& fx, const ProgressFn& progress = {});

RunCheckpoint train(const TrainConfig& cfg, std::span<const drr::RadiographImage> views,
                    const ProgressFn& progress = {});

struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Deep copy: the result shares no parameter storage with ckpt.
RunCheckpoint clone_checkpoint(const RunCheckpoint& ckpt);

/// Image geometry taken from a dataset (all views must share a resolution).
ImageInfo image_info(std::span<const drr::RadiographImage> views);

struct FinetuneOptions {
  int steps = 60;
  int candidates = 32;  // M
  double lr = 2e-4;
  int eval_every = 10;
  std::uint64_t seed = 0;
};

FinetuneOptions finetune_options(const TrainConfig& cfg);

/// MSE between a full render of the input view (eval sample count,
/// deterministic sampling) and the view itself.
double view_mse(const field::RadianceField& f, const field::LatentPair& z,
                const drr::RadiographImage& view, int n_samples);

/// Best-of-M latent search followed by joint latent + field optimisation on
/// patches of one view with the discriminator frozen. The returned checkpoint
/// holds the iterate (including iteration 0) with the lowest view_mse.
RunCheckpoint finetune(const RunCheckpoint& ckpt, const drr::RadiographImage& xray,
                       const objective::FeatureExtractor& fx, const FinetuneOptions& opts);

/// Per-image min-max scaling to [0, 255] with round-half-to-even; a constant
/// image maps to zeros.
std::vector<std::uint8_t> normalize_output(std::span<const double> y);

struct RenderOptions {
  int n_views = 72;
  double step_deg = 5.0;
  int height = 0;  // 0 = training resolution
  int width = 0;
};

/// Writes view_NNN.png (normalised) and manifest.json into out_dir.
drr::DatasetManifest render_full(const RunCheckpoint& ckpt, const RenderOptions& opts,
                                 const std::filesystem::path& out_dir);

void write_history_csv(const std::vector<HistoryRow>& rows, const std::filesystem::path& path);

/// Loss curves and sigma traces as PNG files in dir.
void write_history_plots(const std::vector<HistoryRow>& rows, const std::filesystem::path& dir);

}  // namespace xrf::train
