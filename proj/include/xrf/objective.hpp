// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Generator and discriminator objectives: feature reconstruction, pixel MSE,
// fixed and uncertainty-weighted combinations, adversarial terms and R1.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "xrf/adversary.hpp"
#include "xrf/autodiff.hpp"
#include "xrf/conv.hpp"

namespace xrf::objective {

using ad::Matrix;
using ad::Tensor;
using adversary::FeatureShape;

struct FeatureMap {
  Tensor values;  // B x (depth * height * width)
  FeatureShape shape;
};

/// Frozen image -> multi-layer feature maps (the phi_i of the feature loss).
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  /// images: B x (height * width) single-channel rasters.
  virtual std::vector<FeatureMap> extract(const Tensor& images, int height, int width) const = 0;
  /// Provenance string recorded in reports, e.g. "seeded_random(seed=7)".
  virtual std::string descriptor() const = 0;
};

/// Stack of stride-2 3x3 convolutions with leaky ReLU (slope 0.2), padding 1.
/// Stage i maps an H x W input to ceil(H/2) x ceil(W/2). Every stage's output
/// is a feature layer.
class ConvPyramidExtractor final : public FeatureExtractor {
 public:
  struct Stage {
    Tensor weight;  // out x (in * 9)
    Tensor bias;    // 1 x out
  };

  ConvPyramidExtractor(std::vector<Stage> stages, std::string descriptor);

  std::vector<FeatureMap> extract(const Tensor& images, int height, int width) const override;
  std::string descriptor() const override { return descriptor_; }
  const std::vector<Stage>& stages() const { return stages_; }

 private:
  std::vector<Stage> stages_;
  std::string descriptor_;
};

enum class ExtractorKind { kSeededRandom, kExternal };

/// Channel plan of the seeded default: 1 -> 8 -> 16 -> 32 -> 64.
inline constexpr int kSeededChannels[] = {8, 16, 32, 64};

/// kSeededRandom: He-normal weights from `seed`, zero biases.
/// kExternal: loads an archive with arrays stage<i>.weight / stage<i>.bias
/// (i = 0, 1, ...) and metadata {"kind": "xrf-feature-extractor"}.
std::unique_ptr<FeatureExtractor> make_feature_extractor(
    ExtractorKind kind, std::uint64_t seed = 0, const std::filesystem::path& weights = {});

void save_feature_extractor(const ConvPyramidExtractor& fx, const std::filesystem::path& path);

/// Global-average-pooled features of every layer, concatenated: B x sum(depth_i).
Matrix pooled_features(const FeatureExtractor& fx, const Matrix& images, int height, int width);

/// Maps discriminator features back to a K x K patch:
/// up2x -> conv3x3(d -> 16) -> leaky -> up2x -> conv3x3(16 -> 1) -> sigmoid.
class AuxDecoder {
 public:
  AuxDecoder() = default;
  AuxDecoder(FeatureShape input, int hidden, std::vector<Tensor> params);

  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  std::vector<std::string> parameter_names() const;
  FeatureShape input_shape() const { return input_; }
  int hidden() const { return hidden_; }
  int output_size() const { return 4 * input_.width; }

  /// features: B x input.size() -> B x (4w * 4h).
  Tensor operator()(const Tensor& features) const;

 private:
  FeatureShape input_;
  int hidden_ = 16;
  std::vector<Tensor> params_;
};

AuxDecoder init_aux_decoder(FeatureShape input, int hidden, std::uint64_t seed);

/// mean over layers i of mean over the batch of
///   ||phi_i(a) - phi_i(b)||_2 / (w_i h_i d_i).
Tensor feature_recon_loss(std::span<const FeatureMap> fake, std::span<const FeatureMap> real);

/// L_r with the decoder: compares phi(G(f)) against phi(real_patches).
Tensor feature_recon_loss(const FeatureExtractor& fx, const AuxDecoder& decoder,
                          const Tensor& disc_features, const Tensor& real_patches);

/// (1/N) sum (y - y_hat)^2 over all entries.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

/// lambda1 * L_r + lambda2 * L_mse.
Tensor fixed_gen_loss(const Tensor& l_r, const Tensor& l_mse, double lambda1, double lambda2);

/// Learned log-variances s_i = log sigma_i^2.
struct UncertaintyParams {
  Tensor log_var_feature;  // s1, weights L_r
  Tensor log_var_pixel;    // s2, weights L_mse

  static UncertaintyParams init(double s1 = 0.0, double s2 = 0.0);
  double sigma1_sq() const;
  double sigma2_sq() const;
  std::vector<Tensor> parameters() const { return {log_var_feature, log_var_pixel}; }
};

/// exp(-s1) L_r / 2 + exp(-s2) L_mse / 2 + (s1 + s2) / 2
/// i.e. L_r / (2 sigma1^2) + L_mse / (2 sigma2^2) + log(sigma1 sigma2).
Tensor uncertainty_loss(const Tensor& l_r, const Tensor& l_mse, const UncertaintyParams& u);

struct GanLosses {
  Tensor loss_d;      // mean softplus(-D(real)) + mean softplus(D(fake))
  Tensor loss_g_adv;  // mean softplus(-D(fake))
};

/// Non-saturating logistic losses.
GanLosses gan_losses(const Tensor& logits_real, const Tensor& logits_fake);

/// Batch of inputs (B x n) -> logits (B x 1).
using DiscFn = std::function<Tensor(const Tensor&)>;

/// R1 = gamma/2 * mean_b ||d D(x_b) / d x_b||^2 at real inputs x.
///
/// The penalty value is exact. When accumulate_param_grads is set, its
/// gradient with respect to the discriminator parameters is accumulated
/// through a central-difference Hessian-vector product,
///   d/dtheta R1 = gamma/B * d/dtheta [sum D(x + eps g) - sum D(x - eps g)] / (2 eps),
/// with g the (frozen) input gradient. This needs two extra forward/backward
/// passes instead of second-order autodiff. Any parameter gradients already
/// accumulated before the call are preserved.
double r1_penalty(const DiscFn& disc, const Matrix& real, double gamma,
                  bool accumulate_param_grads, std::span<Tensor> disc_params);

}  // namespace xrf::objective
