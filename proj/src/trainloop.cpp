// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#include "xrf/trainloop.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "xrf/image_io.hpp"
#include "xrf/plot.hpp"
#include "xrf/rng.hpp"

namespace xrf::train {

namespace {

using ad::Tensor;

enum SeedStream : std::uint64_t {
  kFieldStream = 1,
  kDiscStream = 2,
  kDecoderStream = 3,
  kLoopStream = 4,
  kFinetuneStream = 5,
};

std::vector<Tensor> clone_tensors(const std::vector<Tensor>& ts) {
  std::vector<Tensor> out;
  out.reserve(ts.size());
  for (const auto& t : ts) out.emplace_back(t.value(), t.requires_grad());
  return out;
}

std::vector<Tensor> generator_params(RunCheckpoint& ckpt) {
  std::vector<Tensor> p = ckpt.field.parameters();
  for (const auto& t : ckpt.decoder.parameters()) p.push_back(t);
  return p;
}

optim::Adam make_adam(std::vector<Tensor> params, const optim::AdamConfig& cfg,
                      const AdamState& state) {
  optim::Adam adam(std::move(params), cfg);
  if (state.t > 0 || !state.m.empty()) adam.restore(state.m, state.v, state.t);
  return adam;
}

AdamState save_adam(const optim::Adam& adam) {
  return {adam.first_moments(), adam.second_moments(), adam.steps()};
}

void zero_all(std::vector<Tensor>& ts) {
  for (auto& t : ts) t.zero_grad();
}

void check_finite(const Tensor& t, const char* term, std::int64_t step) {
  if (!std::isfinite(t.item())) {
    throw TrainingDiverged("non-finite " + std::string(term) + " at step " + std::to_string(step));
  }
}

Tensor render_patch(const field::RadianceField& f, const field::LatentPair& z, const Pose& pose,
                    const Matrix& coords, const render::RenderConfig& rc) {
  const auto res = render::render_rays(f, z, render::rays_for_patch(pose, coords), rc);
  return ad::reshape(res.pixels, 1, coords.rows());
}

Tensor weighted_term(const TrainConfig& cfg, const Tensor& l_r, const Tensor& l_mse,
                     const objective::UncertaintyParams& u) {
  if (cfg.lambda.kind == LambdaKind::kUncertainty) return objective::uncertainty_loss(l_r, l_mse, u);
  return objective::fixed_gen_loss(l_r, l_mse, cfg.lambda.lambda1, cfg.lambda.lambda2);
}

Tensor non_saturating_g(const Tensor& logits_fake) {
  return ad::mean(ad::softplus(ad::scale(logits_fake, -1.0)));
}

std::vector<double> scales_of(const std::vector<adversary::PatchSpec>& specs) {
  std::vector<double> s;
  for (const auto& p : specs) s.push_back(p.scale);
  return s;
}

}  // namespace

std::string LambdaMode::name() const {
  if (kind == LambdaKind::kUncertainty) return "uncertainty";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "fixed(%g,%g)", lambda1, lambda2);
  return buf;
}

void TrainConfig::validate() const {
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  if (batch_patches < 1) throw std::invalid_argument("batch_patches must be >= 1");
  if (patch_size < 4 || patch_size % 4 != 0) {
    throw std::invalid_argument("patch_size must be a multiple of 4 and >= 4");
  }
  if (disc_arch.patch_size != patch_size) {
    throw std::invalid_argument("discriminator patch size differs from patch_size");
  }
  if (!(scale_min > 0.0 && scale_min <= scale_max && scale_max <= 1.0)) {
    throw std::invalid_argument("need 0 < scale_min <= scale_max <= 1");
  }
  for (const auto* o : {&gen_opt, &disc_opt, &uncertainty_opt}) {
    if (!(o->lr > 0.0)) throw std::invalid_argument("optimizer step sizes must be > 0");
    if (!(o->beta1 >= 0.0 && o->beta1 < 1.0 && o->beta2 >= 0.0 && o->beta2 < 1.0)) {
      throw std::invalid_argument("optimizer moment decays must be in [0, 1)");
    }
  }
  if (lambda.kind == LambdaKind::kFixed &&
      !(lambda.lambda1 >= 0.0 && lambda.lambda2 >= 0.0 && std::isfinite(lambda.lambda1) &&
        std::isfinite(lambda.lambda2))) {
    throw std::invalid_argument("fixed loss weights must be finite and >= 0");
  }
  if (!(r1_gamma >= 0.0)) throw std::invalid_argument("r1_gamma must be >= 0");
  field_arch.validate();
  train_render.validate();
  if (eval_samples < 1) throw std::invalid_argument("eval_samples must be >= 1");
  if (decoder_hidden < 1) throw std::invalid_argument("decoder_hidden must be >= 1");
  if (log_every < 1) throw std::invalid_argument("log_every must be >= 1");
  if (finetune_steps < 0) throw std::invalid_argument("finetune_steps must be >= 0");
  if (finetune_candidates < 1) throw std::invalid_argument("finetune_candidates must be >= 1");
  if (!(finetune_lr > 0.0)) throw std::invalid_argument("finetune_lr must be > 0");
  if (finetune_eval_every < 1) throw std::invalid_argument("finetune_eval_every must be >= 1");
}

ImageInfo image_info(std::span<const drr::RadiographImage> views) {
  if (views.empty()) throw std::invalid_argument("dataset has no views");
  ImageInfo info;
  info.height = views[0].height;
  info.width = views[0].width;
  info.elevation_deg = views[0].pose.elevation_deg;
  info.distance_mm = views[0].pose.distance_mm;
  info.fov_extent_mm = views[0].pose.fov_extent_mm;
  for (const auto& v : views) {
    if (v.height != info.height || v.width != info.width) {
      throw std::invalid_argument("dataset views differ in resolution");
    }
  }
  return info;
}

RunCheckpoint init_run(const TrainConfig& cfg, const ImageInfo& image) {
  cfg.validate();
  RunCheckpoint c;
  c.config = cfg;
  c.image = image;
  c.field = field::init_field(cfg.field_arch, derive_seed(cfg.seed, kFieldStream));
  c.disc = adversary::init_discriminator(cfg.disc_arch, derive_seed(cfg.seed, kDiscStream));
  c.decoder = objective::init_aux_decoder(c.disc.feature_shape(), cfg.decoder_hidden,
                                          derive_seed(cfg.seed, kDecoderStream));
  if (c.decoder.output_size() != cfg.patch_size) {
    throw std::invalid_argument("aux decoder output does not match patch_size");
  }
  c.uncertainty = objective::UncertaintyParams::init();
  auto zeros_like = [](const std::vector<Tensor>& ts) {
    AdamState s;
    for (const auto& t : ts) {
      s.m.push_back(Matrix::Zero(t.rows(), t.cols()));
      s.v.push_back(Matrix::Zero(t.rows(), t.cols()));
    }
    return s;
  };
  c.gen_state = zeros_like(generator_params(c));
  c.disc_state = zeros_like(c.disc.parameters());
  c.uncertainty_state = zeros_like(c.uncertainty.parameters());
  c.rng_state = Rng(derive_seed(cfg.seed, kLoopStream)).state();
  return c;
}

RunCheckpoint clone_checkpoint(const RunCheckpoint& ckpt) {
  RunCheckpoint c = ckpt;
  c.field = ckpt.field.clone();
  c.disc = adversary::Discriminator(ckpt.disc.arch(), clone_tensors(ckpt.disc.parameters()));
  c.decoder = objective::AuxDecoder(ckpt.decoder.input_shape(), ckpt.decoder.hidden(),
                                    clone_tensors(ckpt.decoder.parameters()));
  c.uncertainty = objective::UncertaintyParams::init(ckpt.uncertainty.log_var_feature.item(),
                                                     ckpt.uncertainty.log_var_pixel.item());
  if (ckpt.latents) {
    c.latents = field::make_latents(ckpt.latents->shape.value(), ckpt.latents->appearance.value());
  }
  return c;
}

std::unique_ptr<objective::FeatureExtractor> make_extractor(const TrainConfig& cfg) {
  return objective::make_feature_extractor(cfg.extractor, cfg.extractor_seed,
                                           cfg.extractor_weights);
}

void train_steps(RunCheckpoint& ckpt, std::span<const drr::RadiographImage> views,
                 const objective::FeatureExtractor& fx, const ProgressFn& progress) {
  const TrainConfig& cfg = ckpt.config;
  cfg.validate();
  if (views.empty()) throw std::invalid_argument("train: dataset has no views");
  for (const auto& v : views) {
    if (v.height != ckpt.image.height || v.width != ckpt.image.width) {
      throw std::invalid_argument("train: view resolution differs from the checkpoint");
    }
  }
  if (ckpt.step >= cfg.steps) return;

  Rng rng;
  rng.set_state(ckpt.rng_state);
  std::vector<Tensor> gen_params = generator_params(ckpt);
  std::vector<Tensor> disc_params = ckpt.disc.parameters();
  std::vector<Tensor> unc_params = ckpt.uncertainty.parameters();
  optim::Adam gen_opt = make_adam(gen_params, cfg.gen_opt, ckpt.gen_state);
  optim::Adam disc_opt = make_adam(disc_params, cfg.disc_opt, ckpt.disc_state);
  optim::Adam unc_opt = make_adam(unc_params, cfg.uncertainty_opt, ckpt.uncertainty_state);
  const bool learn_weights = cfg.lambda.kind == LambdaKind::kUncertainty;
  const int k = cfg.patch_size;

  auto draw_spec = [&]() { return adversary::sample_patch_spec(rng, k, cfg.scale_min, cfg.scale_max); };
  auto draw_view = [&]() -> const drr::RadiographImage& {
    return views[static_cast<std::size_t>(rng.uniform_index(views.size()))];
  };

  while (ckpt.step < cfg.steps) {
    const std::int64_t step = ckpt.step + 1;
    HistoryRow row;
    row.step = step;

    // Discriminator update.
    {
      std::vector<Tensor> real_rows, fake_rows;
      std::vector<adversary::PatchSpec> real_specs, fake_specs;
      for (int b = 0; b < cfg.batch_patches; ++b) {
        const auto& rv = draw_view();
        real_specs.push_back(draw_spec());
        real_rows.emplace_back(adversary::extract_patch(rv, adversary::patch_coords(real_specs.back())));
        const auto& fv = draw_view();
        fake_specs.push_back(draw_spec());
        const field::LatentPair z = field::sample_latents(cfg.field_arch, rng);
        render::RenderConfig rc = cfg.train_render;
        rc.seed = rng.next_u64();
        ad::NoGradGuard no_grad;
        fake_rows.push_back(render_patch(ckpt.field, z, fv.pose,
                                         adversary::patch_coords(fake_specs.back()), rc)
                                .detach());
      }
      const Tensor real = ad::concat_rows(real_rows);
      const Tensor fake = ad::concat_rows(fake_rows);
      const std::vector<double> real_scales = scales_of(real_specs);
      zero_all(disc_params);
      const auto lr_ = ckpt.disc(real, real_scales).logits;
      const auto lf_ = ckpt.disc(fake, scales_of(fake_specs)).logits;
      const objective::GanLosses gl = objective::gan_losses(lr_, lf_);
      check_finite(gl.loss_d, "loss_D", step);
      gl.loss_d.backward();
      const double r1 = objective::r1_penalty(
          [&](const Tensor& x) { return ckpt.disc(x, real_scales).logits; }, real.value(),
          cfg.r1_gamma, true, disc_params);
      if (!std::isfinite(r1)) throw TrainingDiverged("non-finite r1_penalty at step " + std::to_string(step));
      disc_opt.step();
      zero_all(disc_params);
      row.loss_d = gl.loss_d.item() + r1;
    }

    // Generator (and loss-weight) update.
    {
      std::vector<Tensor> real_rows, fake_rows;
      std::vector<adversary::PatchSpec> specs;
      for (int b = 0; b < cfg.batch_patches; ++b) {
        const auto& v = draw_view();
        specs.push_back(draw_spec());
        const Matrix coords = adversary::patch_coords(specs.back());
        real_rows.emplace_back(adversary::extract_patch(v, coords));
        const field::LatentPair z = field::sample_latents(cfg.field_arch, rng);
        render::RenderConfig rc = cfg.train_render;
        rc.seed = rng.next_u64();
        fake_rows.push_back(render_patch(ckpt.field, z, v.pose, coords, rc));
      }
      const Tensor real = ad::concat_rows(real_rows);
      const Tensor fake = ad::concat_rows(fake_rows);
      zero_all(gen_params);
      zero_all(unc_params);
      row.sigma1_sq = ckpt.uncertainty.sigma1_sq();
      row.sigma2_sq = ckpt.uncertainty.sigma2_sq();
      const adversary::DiscOutput out = ckpt.disc(fake, scales_of(specs));
      const Tensor adv = non_saturating_g(out.logits);
      const Tensor l_mse = objective::mse_loss(fake, real);
      const Tensor l_r = objective::feature_recon_loss(fx, ckpt.decoder, out.features, real);
      check_finite(adv, "loss_G_adv", step);
      check_finite(l_mse, "L_MSE", step);
      check_finite(l_r, "L_r", step);
      const Tensor term = weighted_term(cfg, l_r, l_mse, ckpt.uncertainty);
      check_finite(term, "weighted generator loss", step);
      const Tensor total = cfg.adversarial_term ? ad::add(adv, term) : term;
      total.backward();
      gen_opt.step();
      if (learn_weights) unc_opt.step();
      zero_all(gen_params);
      zero_all(unc_params);
      zero_all(disc_params);
      row.loss_g_adv = adv.item();
      row.l_mse = l_mse.item();
      row.l_r = l_r.item();
    }

    ckpt.history.push_back(row);
    ckpt.step = step;
    if (progress && (step % cfg.log_every == 0 || step == cfg.steps)) progress(row);
  }

  ckpt.gen_state = save_adam(gen_opt);
  ckpt.disc_state = save_adam(disc_opt);
  ckpt.uncertainty_state = save_adam(unc_opt);
  ckpt.rng_state = rng.state();
}

RunCheckpoint train(const TrainConfig& cfg, std::span<const drr::RadiographImage> views,
                    const ProgressFn& progress) {
  RunCheckpoint ckpt = init_run(cfg, image_info(views));
  const auto fx = make_extractor(cfg);
  train_steps(ckpt, views, *fx, progress);
  return ckpt;
}

FinetuneOptions finetune_options(const TrainConfig& cfg) {
  return {cfg.finetune_steps, cfg.finetune_candidates, cfg.finetune_lr, cfg.finetune_eval_every,
          cfg.seed};
}

double view_mse(const field::RadianceField& f, const field::LatentPair& z,
                const drr::RadiographImage& view, int n_samples) {
  render::RenderConfig rc;
  rc.n_samples = n_samples;
  rc.stratified = false;
  const std::vector<double> img = render::render_view(f, z, view.pose, view.height, view.width, rc);
  double sse = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i) sse += (img[i] - view.pixels[i]) * (img[i] - view.pixels[i]);
  return sse / static_cast<double>(img.size());
}

RunCheckpoint finetune(const RunCheckpoint& ckpt, const drr::RadiographImage& xray,
                       const objective::FeatureExtractor& fx, const FinetuneOptions& opts) {
  if (xray.height != ckpt.image.height || xray.width != ckpt.image.width) {
    throw std::invalid_argument(
        "finetune: input view is " + std::to_string(xray.height) + "x" +
        std::to_string(xray.width) + " but the checkpoint renders " +
        std::to_string(ckpt.image.height) + "x" + std::to_string(ckpt.image.width));
  }
  if (opts.steps < 0 || opts.candidates < 1 || !(opts.lr > 0.0) || opts.eval_every < 1) {
    throw std::invalid_argument("finetune: invalid options");
  }
  const TrainConfig& cfg = ckpt.config;
  RunCheckpoint out = clone_checkpoint(ckpt);
  Rng rng(derive_seed(opts.seed, kFinetuneStream));

  field::LatentPair best_z;
  double best = std::numeric_limits<double>::infinity();
  for (int m = 0; m < opts.candidates; ++m) {
    field::LatentPair z = field::sample_latents(cfg.field_arch, rng);
    const double mse = view_mse(out.field, z, xray, cfg.eval_samples);
    if (mse < best || m == 0) {
      best = mse;
      best_z = z;
    }
  }

  out.finetune_history.clear();
  out.finetune_history.push_back({0, best});
  field::LatentPair z = field::make_latents(best_z.shape.value(), best_z.appearance.value(), true);
  std::vector<Matrix> best_params;
  for (const auto& p : out.field.parameters()) best_params.push_back(p.value());
  Matrix best_shape = z.shape.value();
  Matrix best_app = z.appearance.value();

  std::vector<Tensor> params = out.field.parameters();
  params.push_back(z.shape);
  params.push_back(z.appearance);
  optim::Adam adam(params, {opts.lr, 0.9, 0.999, 1e-8});
  std::vector<Tensor> frozen = out.disc.parameters();
  for (const auto& t : out.decoder.parameters()) frozen.push_back(t);
  for (const auto& t : out.uncertainty.parameters()) frozen.push_back(t);

  for (int it = 1; it <= opts.steps; ++it) {
    std::vector<Tensor> real_rows, fake_rows;
    std::vector<adversary::PatchSpec> specs;
    for (int b = 0; b < cfg.batch_patches; ++b) {
      specs.push_back(adversary::sample_patch_spec(rng, cfg.patch_size, cfg.scale_min, cfg.scale_max));
      const Matrix coords = adversary::patch_coords(specs.back());
      real_rows.emplace_back(adversary::extract_patch(xray, coords));
      render::RenderConfig rc = cfg.train_render;
      rc.seed = rng.next_u64();
      fake_rows.push_back(render_patch(out.field, z, xray.pose, coords, rc));
    }
    const Tensor real = ad::concat_rows(real_rows);
    const Tensor fake = ad::concat_rows(fake_rows);
    zero_all(params);
    const adversary::DiscOutput d = out.disc(fake, scales_of(specs));
    const Tensor l_mse = objective::mse_loss(fake, real);
    const Tensor l_r = objective::feature_recon_loss(fx, out.decoder, d.features, real);
    Tensor total = weighted_term(cfg, l_r, l_mse, out.uncertainty);
    if (cfg.adversarial_term) total = ad::add(non_saturating_g(d.logits), total);
    check_finite(total, "finetune loss", it);
    total.backward();
    adam.step();
    zero_all(params);
    zero_all(frozen);

    if (it % opts.eval_every == 0 || it == opts.steps) {
      const double mse = view_mse(out.field, z, xray, cfg.eval_samples);
      out.finetune_history.push_back({it, mse});
      if (mse < best) {
        best = mse;
        for (std::size_t i = 0; i < best_params.size(); ++i) {
          best_params[i] = out.field.parameters()[i].value();
        }
        best_shape = z.shape.value();
        best_app = z.appearance.value();
      }
    }
  }

  for (std::size_t i = 0; i < best_params.size(); ++i) {
    out.field.parameters()[i].value_mut() = best_params[i];
  }
  out.latents = field::make_latents(best_shape, best_app);
  return out;
}

std::vector<std::uint8_t> normalize_output(std::span<const double> y) {
  std::vector<std::uint8_t> out(y.size(), 0);
  if (y.empty()) return out;
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double mn = *lo;
  const double mx = *hi;
  if (!(mx > mn)) return out;
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double v = std::nearbyint((y[i] - mn) / (mx - mn) * 255.0);
    out[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  std::fesetround(saved);
  return out;
}

drr::DatasetManifest render_full(const RunCheckpoint& ckpt, const RenderOptions& opts,
                                 const std::filesystem::path& out_dir) {
  if (opts.n_views < 1) throw std::invalid_argument("render_full: n_views must be >= 1");
  if (!(opts.step_deg >= 0.0) || opts.n_views * opts.step_deg > 360.0) {
    throw std::invalid_argument("render_full: n_views * step_deg must be <= 360");
  }
  const int h = opts.height > 0 ? opts.height : ckpt.image.height;
  const int w = opts.width > 0 ? opts.width : ckpt.image.width;
  if (h < 1 || w < 1) throw std::invalid_argument("render_full: unknown resolution");
  const auto& arch = ckpt.config.field_arch;
  const field::LatentPair z =
      ckpt.latents ? *ckpt.latents
                   : field::make_latents(Matrix::Zero(1, arch.shape_dim),
                                         Matrix::Zero(1, arch.appearance_dim));
  std::filesystem::create_directories(out_dir);
  render::RenderConfig rc;
  rc.n_samples = ckpt.config.eval_samples;
  rc.stratified = false;

  drr::DatasetManifest m;
  m.height = h;
  m.width = w;
  m.n_steps = rc.n_samples;
  m.volume_hash = "";
  for (int k = 0; k < opts.n_views; ++k) {
    Pose pose;
    pose.theta_deg = k * opts.step_deg;
    pose.elevation_deg = ckpt.image.elevation_deg;
    pose.distance_mm = ckpt.image.distance_mm;
    pose.fov_extent_mm = ckpt.image.fov_extent_mm;
    pose = pose.normalized();
    const std::vector<double> pixels = render::render_view(ckpt.field, z, pose, h, w, rc);
    Gray8 img;
    img.height = h;
    img.width = w;
    img.pixels = normalize_output(pixels);
    char name[32];
    std::snprintf(name, sizeof(name), "view_%03d.png", k);
    write_png(out_dir / name, img);
    m.views.push_back({name, pose});
  }
  drr::save_manifest(m, out_dir / drr::kManifestName);
  return m;
}

void write_history_csv(const std::vector<HistoryRow>& rows, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (f == nullptr) throw std::runtime_error("cannot write " + path.string());
  std::fprintf(f, "step,loss_D,loss_G_adv,L_r,L_MSE,sigma1_sq,sigma2_sq\n");
  for (const auto& r : rows) {
    std::fprintf(f, "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", static_cast<long long>(r.step),
                 r.loss_d, r.loss_g_adv, r.l_r, r.l_mse, r.sigma1_sq, r.sigma2_sq);
  }
  std::fclose(f);
}

void write_history_plots(const std::vector<HistoryRow>& rows, const std::filesystem::path& dir) {
  if (rows.size() < 2) return;
  std::filesystem::create_directories(dir);
  plot::Series d, g, lr, lm, s1, s2;
  for (const auto& r : rows) {
    const double x = static_cast<double>(r.step);
    d.xs.push_back(x);
    d.ys.push_back(r.loss_d);
    g.xs.push_back(x);
    g.ys.push_back(r.loss_g_adv);
    lr.xs.push_back(x);
    lr.ys.push_back(r.l_r);
    lm.xs.push_back(x);
    lm.ys.push_back(r.l_mse);
    s1.xs.push_back(x);
    s1.ys.push_back(r.sigma1_sq);
    s2.xs.push_back(x);
    s2.ys.push_back(r.sigma2_sq);
  }
  plot::write_line_plot(dir / "loss_gan.png", {d, g});
  plot::write_line_plot(dir / "loss_recon.png", {lr, lm});
  plot::write_line_plot(dir / "sigma_trace.png", {s1, s2});
}

}  // namespace xrf::train
