// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#include "xrf/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "xrf/archive.hpp"
#include "xrf/rng.hpp"

namespace xrf::objective {

namespace {

constexpr double kSlope = 0.2;

ad::Conv2dShape stage_shape(const ConvPyramidExtractor::Stage& s, ad::Index h, ad::Index w) {
  return {s.weight.cols() / 9, h, w, s.weight.rows(), 3, 2, 1};
}

}  // namespace

ConvPyramidExtractor::ConvPyramidExtractor(std::vector<Stage> stages, std::string descriptor)
    : stages_(std::move(stages)), descriptor_(std::move(descriptor)) {
  if (stages_.empty()) throw std::invalid_argument("feature extractor needs at least one stage");
  ad::Index in_c = 1;
  for (const auto& s : stages_) {
    if (s.weight.cols() != in_c * 9) {
      throw std::invalid_argument("feature extractor: stage input channels do not chain");
    }
    if (s.bias.rows() != 1 || s.bias.cols() != s.weight.rows()) {
      throw std::invalid_argument("feature extractor: bias shape mismatch");
    }
    in_c = s.weight.rows();
  }
}

std::vector<FeatureMap> ConvPyramidExtractor::extract(const Tensor& images, int height,
                                                      int width) const {
  if (images.cols() != static_cast<ad::Index>(height) * width) {
    throw std::invalid_argument("feature extractor: image size does not match " +
                                std::to_string(height) + "x" + std::to_string(width));
  }
  std::vector<FeatureMap> maps;
  Tensor h = images;
  ad::Index hh = height;
  ad::Index ww = width;
  for (const auto& s : stages_) {
    const ad::Conv2dShape shape = stage_shape(s, hh, ww);
    h = ad::leaky_relu(ad::conv2d(h, s.weight, s.bias, shape), kSlope);
    hh = shape.out_height();
    ww = shape.out_width();
    maps.push_back({h, {static_cast<int>(ww), static_cast<int>(hh),
                        static_cast<int>(shape.out_channels)}});
  }
  return maps;
}

std::unique_ptr<FeatureExtractor> make_feature_extractor(ExtractorKind kind, std::uint64_t seed,
                                                         const std::filesystem::path& weights) {
  std::vector<ConvPyramidExtractor::Stage> stages;
  if (kind == ExtractorKind::kSeededRandom) {
    Rng rng(seed);
    ad::Index in_c = 1;
    for (int c : kSeededChannels) {
      Matrix w(c, in_c * 9);
      const double stddev = std::sqrt(2.0 / static_cast<double>(in_c * 9));
      for (ad::Index i = 0; i < w.size(); ++i) w.data()[i] = stddev * rng.normal();
      stages.push_back({Tensor(std::move(w)), Tensor(Matrix::Zero(1, c))});
      in_c = c;
    }
    return std::make_unique<ConvPyramidExtractor>(
        std::move(stages), "seeded_random(seed=" + std::to_string(seed) + ")");
  }
  if (weights.empty() || !std::filesystem::exists(weights)) {
    throw std::runtime_error("external feature extractor weights not found: '" +
                             weights.string() + "'");
  }
  const archive::Archive a = archive::load_archive(weights);
  if (a.metadata.value("kind", std::string()) != "xrf-feature-extractor") {
    throw std::runtime_error("archive " + weights.string() + " is not a feature extractor");
  }
  for (int i = 0;; ++i) {
    const std::string prefix = "stage" + std::to_string(i);
    if (!a.contains(prefix + ".weight")) break;
    stages.push_back({Tensor(a.get(prefix + ".weight")), Tensor(a.get(prefix + ".bias"))});
  }
  return std::make_unique<ConvPyramidExtractor>(std::move(stages),
                                                "external(" + weights.filename().string() + ")");
}

void save_feature_extractor(const ConvPyramidExtractor& fx, const std::filesystem::path& path) {
  archive::Archive a;
  a.metadata = {{"kind", "xrf-feature-extractor"}, {"descriptor", fx.descriptor()}};
  for (std::size_t i = 0; i < fx.stages().size(); ++i) {
    const std::string prefix = "stage" + std::to_string(i);
    a.put(prefix + ".weight", fx.stages()[i].weight.value());
    a.put(prefix + ".bias", fx.stages()[i].bias.value());
  }
  archive::save_archive(a, path);
}

Matrix pooled_features(const FeatureExtractor& fx, const Matrix& images, int height, int width) {
  ad::NoGradGuard no_grad;
  const auto maps = fx.extract(Tensor(images), height, width);
  std::vector<Tensor> pooled;
  for (const auto& m : maps) {
    pooled.push_back(ad::global_avg_pool(m.values, m.shape.depth, m.shape.height, m.shape.width));
  }
  return ad::concat_cols(pooled).value();
}

AuxDecoder::AuxDecoder(FeatureShape input, int hidden, std::vector<Tensor> params)
    : input_(input), hidden_(hidden), params_(std::move(params)) {
  if (input_.width != input_.height || input_.width < 1 || input_.depth < 1) {
    throw std::invalid_argument("aux decoder: feature map must be square and non-empty");
  }
  if (params_.size() != 4 || params_[0].rows() != hidden_ ||
      params_[0].cols() != input_.depth * 9 || params_[2].rows() != 1 ||
      params_[2].cols() != hidden_ * 9) {
    throw std::invalid_argument("aux decoder: parameter shapes do not match");
  }
}

std::vector<std::string> AuxDecoder::parameter_names() const {
  return {"decoder.conv1.weight", "decoder.conv1.bias", "decoder.conv2.weight",
          "decoder.conv2.bias"};
}

Tensor AuxDecoder::operator()(const Tensor& features) const {
  if (features.cols() != input_.size()) {
    throw std::invalid_argument("aux decoder: feature size mismatch");
  }
  const ad::Index d = input_.depth;
  const ad::Index h = input_.height;
  const ad::Index w = input_.width;
  Tensor x = ad::upsample2x(features, d, h, w);
  x = ad::conv2d(x, params_[0], params_[1], {d, 2 * h, 2 * w, hidden_, 3, 1, 1});
  x = ad::leaky_relu(x, kSlope);
  x = ad::upsample2x(x, hidden_, 2 * h, 2 * w);
  x = ad::conv2d(x, params_[2], params_[3], {hidden_, 4 * h, 4 * w, 1, 3, 1, 1});
  return ad::sigmoid(x);
}

AuxDecoder init_aux_decoder(FeatureShape input, int hidden, std::uint64_t seed) {
  Rng rng(seed);
  auto uniform = [&](ad::Index rows, ad::Index cols, double bound) {
    Matrix m(rows, cols);
    for (ad::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
    return Tensor(std::move(m), true);
  };
  std::vector<Tensor> params;
  params.push_back(uniform(hidden, input.depth * 9, std::sqrt(6.0 / (input.depth * 9))));
  params.push_back(Tensor(Matrix::Zero(1, hidden), true));
  params.push_back(uniform(1, hidden * 9, std::sqrt(3.0 / (hidden * 9))));
  params.push_back(Tensor(Matrix::Zero(1, 1), true));
  return AuxDecoder(input, hidden, std::move(params));
}

Tensor feature_recon_loss(std::span<const FeatureMap> fake, std::span<const FeatureMap> real) {
  if (fake.empty() || fake.size() != real.size()) {
    throw std::invalid_argument("feature_recon_loss: layer lists differ");
  }
  Tensor total;
  for (std::size_t i = 0; i < fake.size(); ++i) {
    const auto& a = fake[i];
    const auto& b = real[i];
    if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols() ||
        a.shape.size() != a.values.cols()) {
      throw std::invalid_argument("feature_recon_loss: layer " + std::to_string(i) +
                                  " shape mismatch");
    }
    const Tensor norms = ad::row_norm(ad::sub(a.values, b.values));
    const Tensor term = ad::scale(ad::mean(norms), 1.0 / a.shape.size());
    total = total.defined() ? ad::add(total, term) : term;
  }
  return ad::scale(total, 1.0 / static_cast<double>(fake.size()));
}

Tensor feature_recon_loss(const FeatureExtractor& fx, const AuxDecoder& decoder,
                          const Tensor& disc_features, const Tensor& real_patches) {
  const int k = decoder.output_size();
  if (real_patches.cols() != static_cast<ad::Index>(k) * k) {
    throw std::invalid_argument("feature_recon_loss: decoder output is " + std::to_string(k) +
                                "x" + std::to_string(k) + " but the real patch differs");
  }
  const Tensor decoded = decoder(disc_features);
  const auto fake_maps = fx.extract(decoded, k, k);
  std::vector<FeatureMap> real_maps;
  {
    ad::NoGradGuard no_grad;
    real_maps = fx.extract(real_patches.detach(), k, k);
  }
  return feature_recon_loss(fake_maps, real_maps);
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  if (pred.size() == 0) throw std::invalid_argument("mse_loss: empty input");
  return ad::mean(ad::square(ad::sub(target, pred)));
}

Tensor fixed_gen_loss(const Tensor& l_r, const Tensor& l_mse, double lambda1, double lambda2) {
  return ad::add(ad::scale(l_r, lambda1), ad::scale(l_mse, lambda2));
}

UncertaintyParams UncertaintyParams::init(double s1, double s2) {
  return {Tensor::scalar(s1, true), Tensor::scalar(s2, true)};
}

double UncertaintyParams::sigma1_sq() const { return std::exp(log_var_feature.item()); }
double UncertaintyParams::sigma2_sq() const { return std::exp(log_var_pixel.item()); }

Tensor uncertainty_loss(const Tensor& l_r, const Tensor& l_mse, const UncertaintyParams& u) {
  const Tensor& s1 = u.log_var_feature;
  const Tensor& s2 = u.log_var_pixel;
  const Tensor weighted_r = ad::mul(ad::exp(ad::scale(s1, -1.0)), l_r);
  const Tensor weighted_mse = ad::mul(ad::exp(ad::scale(s2, -1.0)), l_mse);
  const Tensor reg = ad::add(s1, s2);
  return ad::scale(ad::add(ad::add(weighted_r, weighted_mse), reg), 0.5);
}

GanLosses gan_losses(const Tensor& logits_real, const Tensor& logits_fake) {
  Tensor real_term = ad::mean(ad::softplus(ad::scale(logits_real, -1.0)));
  Tensor fake_term = ad::mean(ad::softplus(logits_fake));
  Tensor g_term = ad::mean(ad::softplus(ad::scale(logits_fake, -1.0)));
  return {ad::add(real_term, fake_term), std::move(g_term)};
}

double r1_penalty(const DiscFn& disc, const Matrix& real, double gamma,
                  bool accumulate_param_grads, std::span<Tensor> disc_params) {
  if (real.rows() < 1) throw std::invalid_argument("r1_penalty: empty batch");
  const double batch = static_cast<double>(real.rows());

  std::vector<Matrix> saved;
  saved.reserve(disc_params.size());
  for (auto& p : disc_params) {
    saved.push_back(p.node()->grad);
    p.zero_grad();
  }

  Tensor x(real, true);
  ad::sum(disc(x)).backward();
  const Matrix g = x.grad();
  const double penalty = 0.5 * gamma * g.rowwise().squaredNorm().sum() / batch;
  for (auto& p : disc_params) p.zero_grad();

  const double g_max = g.cwiseAbs().maxCoeff();
  if (accumulate_param_grads && gamma != 0.0 && g_max > 0.0) {
    const double eps = 1e-4 / g_max;
    const Tensor plus = ad::sum(disc(Tensor(Matrix(real + eps * g))));
    const Tensor minus = ad::sum(disc(Tensor(Matrix(real - eps * g))));
    ad::scale(ad::sub(plus, minus), gamma / (batch * 2.0 * eps)).backward();
  }

  for (std::size_t i = 0; i < disc_params.size(); ++i) {
    auto& node = *disc_params[i].node();
    if (saved[i].size() == 0) continue;
    if (node.grad.size() == 0) node.grad = std::move(saved[i]); else node.grad += saved[i];
  }
  return penalty;
}

}  // namespace xrf::objective
