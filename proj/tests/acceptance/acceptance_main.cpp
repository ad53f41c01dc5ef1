// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.
//
// usage: xrf_acceptance <work_dir> [criterion ...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "xrf/adversary.hpp"
#include "xrf/autodiff.hpp"
#include "xrf/drr.hpp"
#include "xrf/field.hpp"
#include "xrf/hash.hpp"
#include "xrf/metrics.hpp"
#include "xrf/objective.hpp"
#include "xrf/phantom.hpp"
#include "xrf/pipeline.hpp"
#include "xrf/render.hpp"
#include "xrf/rng.hpp"
#include "xrf/runtime.hpp"
#include "xrf/trainloop.hpp"

namespace {

namespace fs = std::filesystem;
namespace ad = xrf::ad;
using ad::Matrix;
using ad::Tensor;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += "failed: " + what;
    }
  }
  void note(const std::string& s) {
    if (!detail.empty()) detail += "; ";
    detail += s;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Matrix random_matrix(xrf::Rng& rng, ad::Index rows, ad::Index cols, double lo = -1.0,
                     double hi = 1.0) {
  Matrix m(rows, cols);
  for (ad::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

Matrix numeric_grad(const std::function<double()>& loss, Tensor& t, double h = 1e-5) {
  Matrix g(t.rows(), t.cols());
  for (ad::Index i = 0; i < t.size(); ++i) {
    double& v = t.value_mut().data()[i];
    const double saved = v;
    v = saved + h;
    const double up = loss();
    v = saved - h;
    const double down = loss();
    v = saved;
    g.data()[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double max_rel_err(const Matrix& a, const Matrix& n, double floor = 1e-6) {
  double worst = 0.0;
  for (ad::Index i = 0; i < a.size(); ++i) {
    const double d = std::abs(a.data()[i] - n.data()[i]);
    const double s = std::max({std::abs(a.data()[i]), std::abs(n.data()[i]), floor});
    worst = std::max(worst, d / s);
  }
  return worst;
}

Tensor scalar(double v, bool grad = false) { return Tensor(Matrix::Constant(1, 1, v), grad); }

// 1. Log-variance loss analytics.
Outcome criterion1() {
  Outcome o;
  const auto t0 = Clock::now();
  const double a = 0.37, b = 2.9;
  auto u = xrf::objective::UncertaintyParams::init();
  const double lr = 0.05;
  int converged_at = -1;
  for (int step = 1; step <= 2000; ++step) {
    u.log_var_feature.zero_grad();
    u.log_var_pixel.zero_grad();
    xrf::objective::uncertainty_loss(scalar(a), scalar(b), u).backward();
    u.log_var_feature.value_mut()(0, 0) -= lr * u.log_var_feature.grad()(0, 0);
    u.log_var_pixel.value_mut()(0, 0) -= lr * u.log_var_pixel.grad()(0, 0);
    if (converged_at < 0 && std::abs(u.sigma1_sq() / a - 1.0) < 0.01 &&
        std::abs(u.sigma2_sq() / b - 1.0) < 0.01) {
      converged_at = step;
    }
  }
  o.require(converged_at > 0, "sigma^2 within 1% of (0.37, 2.9) in 2000 steps");
  o.require(std::abs(u.sigma1_sq() / a - 1.0) < 0.01 && std::abs(u.sigma2_sq() / b - 1.0) < 0.01,
            "sigma^2 stays within 1% after convergence");
  o.note("within 1% at step " + std::to_string(converged_at) + ", sigma^2 = (" +
         fmt("%.6f", u.sigma1_sq()) + ", " + fmt("%.6f", u.sigma2_sq()) + ")");

  auto star = xrf::objective::UncertaintyParams::init(std::log(a), std::log(b));
  xrf::objective::uncertainty_loss(scalar(a), scalar(b), star).backward();
  const double g = std::max(std::abs(star.log_var_feature.grad()(0, 0)),
                            std::abs(star.log_var_pixel.grad()(0, 0)));
  o.require(g <= 1e-6, "analytic gradient at s* = ln(L) is 0 within 1e-6");
  o.note("|grad| at stationary point " + fmt("%.2e", g));
  const double secs = seconds_since(t0);
  o.require(secs < 1.0, "runtime < 1 s");
  o.note(fmt("%.3f s", secs));
  return o;
}

// 2. Autodiff against central differences on tiny instances.
Outcome criterion2() {
  Outcome o;
  const auto t0 = Clock::now();
  const double tol = 1e-4;
  double worst = 0.0;
  std::string worst_name;
  auto check = [&](const std::string& name, const Matrix& analytic, const Matrix& numeric) {
    const double e = max_rel_err(analytic, numeric);
    if (e > worst) {
      worst = e;
      worst_name = name;
    }
    o.require(e < tol, name + fmt(" rel err %.2e", e));
  };
  xrf::Rng rng(2026);

  {  // field.query
    xrf::field::FieldArch a;
    a.depth = 2;
    a.width = 8;
    a.color_width = 6;
    a.shape_dim = 3;
    a.appearance_dim = 2;
    a.encoding = {2, 1, true};
    auto f = xrf::field::init_field(a, 1);
    for (auto& p : f.parameters()) p.value_mut() = random_matrix(rng, p.rows(), p.cols(), -0.5, 0.5);
    auto z = xrf::field::make_latents(random_matrix(rng, 1, 3), random_matrix(rng, 1, 2), true);
    const Tensor pos(random_matrix(rng, 5, 3)), dir(random_matrix(rng, 5, 3));
    const Matrix wv = random_matrix(rng, 5, 1), wd = random_matrix(rng, 5, 1);
    auto loss = [&] {
      const auto out = f.query(pos, dir, z);
      return ad::add(ad::sum(ad::mul(out.value, Tensor(wv))), ad::sum(ad::mul(out.density, Tensor(wd))));
    };
    loss().backward();
    auto value = [&] { return loss().item(); };
    for (std::size_t i = 0; i < f.parameters().size(); ++i) {
      check("field." + f.parameter_names()[i], f.parameters()[i].grad(),
            numeric_grad(value, f.parameters()[i]));
    }
    check("field.z_shape", z.shape.grad(), numeric_grad(value, z.shape));
    check("field.z_appearance", z.appearance.grad(), numeric_grad(value, z.appearance));
  }

  {  // render.render_rays
    xrf::field::FieldArch a;
    a.depth = 2;
    a.width = 6;
    a.color_width = 4;
    a.shape_dim = 2;
    a.appearance_dim = 2;
    a.encoding = {1, 1, true};
    auto f = xrf::field::init_field(a, 3);
    for (auto& p : f.parameters()) p.value_mut() = random_matrix(rng, p.rows(), p.cols(), -0.6, 0.6);
    auto z = xrf::field::make_latents(random_matrix(rng, 1, 2), random_matrix(rng, 1, 2), true);
    xrf::Pose pose;
    pose.theta_deg = 33.0;
    const auto rays = xrf::render::rays_for_patch(pose, random_matrix(rng, 3, 2, -0.5, 0.5));
    xrf::render::RenderConfig cfg;
    cfg.n_samples = 6;
    cfg.seed = 3;
    cfg.background = 0.2;
    const Matrix w = random_matrix(rng, 3, 1);
    auto loss = [&] {
      return ad::sum(ad::mul(xrf::render::render_rays(f, z, rays, cfg).pixels, Tensor(w)));
    };
    loss().backward();
    auto value = [&] { return loss().item(); };
    for (std::size_t i = 0; i < f.parameters().size(); ++i) {
      check("render." + f.parameter_names()[i], f.parameters()[i].grad(),
            numeric_grad(value, f.parameters()[i]));
    }
    check("render.z_shape", z.shape.grad(), numeric_grad(value, z.shape));
    check("render.z_appearance", z.appearance.grad(), numeric_grad(value, z.appearance));
  }

  {  // objective.feature_recon_loss through the aux decoder
    const auto fx = xrf::objective::make_feature_extractor(xrf::objective::ExtractorKind::kSeededRandom, 3);
    auto dec = xrf::objective::init_aux_decoder({2, 2, 3}, 4, 2);
    Tensor feat(random_matrix(rng, 2, 12), true);
    const Tensor real(random_matrix(rng, 2, 64, 0, 1));
    auto loss = [&] { return xrf::objective::feature_recon_loss(*fx, dec, feat, real); };
    loss().backward();
    auto value = [&] { return loss().item(); };
    check("feature_recon.features", feat.grad(), numeric_grad(value, feat));
    for (auto& p : dec.parameters()) check("feature_recon.decoder", p.grad(), numeric_grad(value, p));
  }

  {  // objective.mse_loss, fixed_gen_loss, uncertainty_loss
    Tensor pred(random_matrix(rng, 3, 4), true);
    const Tensor target(random_matrix(rng, 3, 4));
    auto mse = [&] { return xrf::objective::mse_loss(pred, target); };
    mse().backward();
    check("mse_loss", pred.grad(), numeric_grad([&] { return mse().item(); }, pred));

    Tensor lr = scalar(0.8, true), lm = scalar(1.7, true);
    auto fixed = [&] { return xrf::objective::fixed_gen_loss(lr, lm, 0.6, 0.4); };
    fixed().backward();
    auto fv = [&] { return fixed().item(); };
    check("fixed_gen_loss.L_r", lr.grad(), numeric_grad(fv, lr));
    check("fixed_gen_loss.L_mse", lm.grad(), numeric_grad(fv, lm));

    Tensor ur = scalar(0.45, true), um = scalar(2.2, true);
    auto u = xrf::objective::UncertaintyParams::init(0.3, -0.7);
    auto unc = [&] { return xrf::objective::uncertainty_loss(ur, um, u); };
    unc().backward();
    auto uv = [&] { return unc().item(); };
    check("uncertainty_loss.s1", u.log_var_feature.grad(), numeric_grad(uv, u.log_var_feature));
    check("uncertainty_loss.s2", u.log_var_pixel.grad(), numeric_grad(uv, u.log_var_pixel));
    check("uncertainty_loss.L_r", ur.grad(), numeric_grad(uv, ur));
    check("uncertainty_loss.L_mse", um.grad(), numeric_grad(uv, um));
  }

  {  // objective.gan_losses through the patch discriminator
    xrf::adversary::DiscArch arch;
    arch.patch_size = 8;
    arch.channels1 = 3;
    arch.channels2 = 4;
    arch.channels3 = 4;
    auto d = xrf::adversary::init_discriminator(arch, 5);
    Tensor real(random_matrix(rng, 2, 64, 0, 1), true), fake(random_matrix(rng, 2, 64, 0, 1), true);
    const std::vector<double> scales{0.5, 1.0};
    auto loss_d = [&] {
      return xrf::objective::gan_losses(d(real, scales).logits, d(fake, scales).logits).loss_d;
    };
    auto loss_g = [&] {
      return xrf::objective::gan_losses(d(real, scales).logits, d(fake, scales).logits).loss_g_adv;
    };
    loss_d().backward();
    auto dv = [&] { return loss_d().item(); };
    for (auto& p : d.parameters()) check("gan_losses.loss_d.disc", p.grad(), numeric_grad(dv, p));
    check("gan_losses.loss_d.real", real.grad(), numeric_grad(dv, real));
    fake.zero_grad();
    loss_g().backward();
    check("gan_losses.loss_g.fake", fake.grad(), numeric_grad([&] { return loss_g().item(); }, fake));
  }

  {  // objective.r1_penalty parameter gradient
    Tensor w1(random_matrix(rng, 4, 3), true), w2(random_matrix(rng, 3, 1), true);
    std::vector<Tensor> params{w1, w2};
    const xrf::objective::DiscFn disc = [&](const Tensor& x) {
      return ad::matmul(ad::softplus(ad::matmul(x, w1)), w2);
    };
    const Matrix real = random_matrix(rng, 3, 4);
    xrf::objective::r1_penalty(disc, real, 1.3, true, params);
    const Matrix g1 = w1.grad(), g2 = w2.grad();
    auto value = [&] {
      std::vector<Tensor> none;
      return xrf::objective::r1_penalty(disc, real, 1.3, false, none);
    };
    check("r1_penalty.w1", g1, numeric_grad(value, w1));
    check("r1_penalty.w2", g2, numeric_grad(value, w2));
  }

  o.note("worst " + worst_name + fmt(" %.2e", worst));
  const double secs = seconds_since(t0);
  o.require(secs < 30.0, "runtime < 30 s");
  o.note(fmt("%.2f s", secs));
  return o;
}

// 3. Piecewise-constant density along x, value c(x) = x / 4, ray x in [0, 4].
struct Segment {
  double a, b, sigma;
};

const std::vector<Segment> kSegments{{1.0, 2.0, 0.8}, {2.5, 3.0, 2.0}};

double segment_sigma(double x) {
  for (const auto& s : kSegments) {
    if (x >= s.a && x < s.b) return s.sigma;
  }
  return 0.0;
}

// Closed form of the emission integral and the exit transmittance.
void analytic_pixel(double& pixel, double& transmittance) {
  pixel = 0.0;
  double T = 1.0;
  for (const auto& s : kSegments) {
    const double L = s.b - s.a;
    const double e = std::exp(-s.sigma * L);
    pixel += T / 4.0 * (s.a * (1.0 - e) + (1.0 - e * (1.0 + s.sigma * L)) / s.sigma);
    T *= e;
  }
  transmittance = T;
}

Outcome criterion3() {
  Outcome o;
  const auto t0 = Clock::now();
  const xrf::render::FieldFn scene = [](const Tensor& pos, const Tensor&) {
    Matrix sigma(pos.rows(), 1), value(pos.rows(), 1);
    for (ad::Index i = 0; i < pos.rows(); ++i) {
      const double x = pos.value()(i, 0);
      sigma(i, 0) = segment_sigma(x);
      value(i, 0) = x / 4.0;
    }
    return xrf::field::FieldOutput{Tensor(std::move(value)), Tensor(std::move(sigma))};
  };
  xrf::Ray ray;
  ray.origin = xrf::Vec3::Zero();
  ray.direction = xrf::Vec3::UnitX();
  ray.near = 0.0;
  ray.far = 4.0;
  double pixel_ref = 0.0, t_ref = 0.0;
  analytic_pixel(pixel_ref, t_ref);

  std::vector<int> ns;
  std::vector<double> errs;
  for (int n = 64; n <= 1024; n *= 2) {
    xrf::render::RenderConfig cfg;
    cfg.n_samples = n;
    cfg.stratified = false;
    const auto res = xrf::render::render_rays(scene, {ray}, cfg);
    const double err = std::abs(res.pixels.value()(0, 0) - pixel_ref);
    const double terr = std::abs(res.transmittance.value()(0, 0) - t_ref);
    o.require(terr <= 2e-3, "transmittance within 2e-3 at n = " + std::to_string(n));
    ns.push_back(n);
    errs.push_back(err);
  }
  o.require(errs.back() <= 2e-3, "pixel within 2e-3 at 1024 samples");
  std::string ratios;
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double r = errs[i - 1] / errs[i];
    ratios += (i > 1 ? "," : "") + fmt("%.3f", r);
    o.require(r >= 1.6 && r <= 2.4, "error halves within 20% from n = " + std::to_string(ns[i - 1]));
  }
  o.note("err@1024 " + fmt("%.2e", errs.back()) + ", halving ratios " + ratios);
  const double secs = seconds_since(t0);
  o.require(secs < 10.0, "runtime < 10 s");
  o.note(fmt("%.2f s", secs));
  return o;
}

// 4. Beer-Lambert cube and the 72-view dataset layout.
Outcome criterion4(const fs::path& work) {
  Outcome o;
  const auto t0 = Clock::now();
  // 10 interior voxels of 10 mm at mu = 0.01 / mm: mu t = 1.
  const auto cube = xrf::phantom::make_phantom(xrf::phantom::PhantomKind::kCube, 20, 0,
                                               {{"mu", 0.01}, {"margin", 5}, {"spacing", 10.0}});
  xrf::Pose pose;
  pose.fov_extent_mm = xrf::drr::default_fov_extent(cube);
  double worst = 0.0;
  for (double theta : {0.0, 90.0, 180.0, 270.0}) {
    pose.theta_deg = theta;
    const auto img = xrf::drr::project(cube, pose, 3, 3, 512);
    worst = std::max(worst, std::abs(img.at(1, 1) - (1.0 - std::exp(-1.0))));
  }
  o.require(worst <= 1e-3, "cube centre pixel within 1e-3 of 1 - exp(-1)");
  o.note("cube err " + fmt("%.2e", worst));

  const auto vol = xrf::phantom::make_phantom(xrf::phantom::PhantomKind::kKneeToy, 24, 0);
  xrf::drr::DatasetOptions opts;
  opts.height = opts.width = 16;
  opts.n_steps = 64;
  const fs::path dir = work / "c4_dataset";
  fs::remove_all(dir);
  const auto m = xrf::drr::make_dataset(vol, opts, dir);
  const auto back = xrf::drr::load_manifest(dir / xrf::drr::kManifestName);
  o.require(m.views.size() == 72 && back.views.size() == 72, "72 views");
  std::set<std::string> files, hashes;
  bool thetas_ok = true;
  for (std::size_t k = 0; k < back.views.size(); ++k) {
    thetas_ok = thetas_ok && back.views[k].pose.theta_deg == 5.0 * static_cast<double>(k);
    files.insert(back.views[k].file);
    if (fs::exists(dir / back.views[k].file)) hashes.insert(xrf::hash_file(dir / back.views[k].file));
  }
  o.require(thetas_ok, "theta_k = 5 k degrees for k = 0..71");
  o.require(files.size() == 72, "72 distinct files");
  o.require(hashes.size() == 72, "72 distinct images on disk");
  o.note(std::to_string(hashes.size()) + " distinct views");
  const double secs = seconds_since(t0);
  o.require(secs < 30.0, "runtime < 30 s");
  o.note(fmt("%.2f s", secs));
  return o;
}

// 5. Metric oracles.
Outcome criterion5() {
  Outcome o;
  const auto t0 = Clock::now();
  {  // MSE = 25.5^2 against max 255 is exactly 20 dB.
    std::vector<double> a(64, 100.0), b(64, 125.5);
    const double p = xrf::metrics::psnr(a, b);
    o.require(p == 20.0, "PSNR 20 dB case exact");
    o.note("psnr " + fmt("%.17g", p));
  }
  xrf::Rng rng(55);
  {
    std::vector<double> a(32 * 24);
    for (auto& v : a) v = std::round(rng.uniform(0.0, 255.0));
    const double s = xrf::metrics::ssim(a, a, 32, 24);
    o.require(std::abs(s - 1.0) <= 1e-9, "SSIM(a, a) = 1 within 1e-9");
  }
  {
    const Matrix x = random_matrix(rng, 200, 6);
    const double f = xrf::metrics::fid(x, x);
    o.require(f <= 1e-6, "FID(X, X) <= 1e-6");
    o.note("fid(X,X) " + fmt("%.1e", f));
  }
  {  // {0, 2} vs {2, 4} (population): mean gap 4, equal variances.
    Matrix r(2, 1), f(2, 1);
    r << 0.0, 2.0;
    f << 2.0, 4.0;
    const double v = xrf::metrics::fid(r, f, xrf::metrics::CovarianceMode::kPopulation);
    o.require(v == 4.0, "1-D FID hand case = 4 exactly");
  }
  {
    std::vector<double> means;
    for (int seed = 0; seed < 100; ++seed) {
      xrf::Rng g(1000 + static_cast<std::uint64_t>(seed));
      Matrix r(200, 8), f(200, 8);
      for (ad::Index i = 0; i < r.size(); ++i) r.data()[i] = g.normal();
      for (ad::Index i = 0; i < f.size(); ++i) f.data()[i] = g.normal();
      means.push_back(xrf::metrics::kid(r, f, 50, 10, static_cast<std::uint64_t>(seed)).mean);
    }
    double avg = 0.0;
    for (double m : means) avg += m;
    avg /= static_cast<double>(means.size());
    double var = 0.0;
    for (double m : means) var += (m - avg) * (m - avg);
    const double sd = std::sqrt(var / static_cast<double>(means.size()));
    o.require(std::abs(avg) <= 3.0 * sd, "KID same distribution |mean| <= 3 std over 100 seeds");
    o.note("kid mean " + fmt("%.2e", avg) + " std " + fmt("%.2e", sd));
  }
  const double secs = seconds_since(t0);
  o.require(secs < 60.0, "runtime < 60 s");
  o.note(fmt("%.2f s", secs));
  return o;
}

// 6-8 share the desk dataset.
fs::path desk_dataset(const fs::path& work) {
  const fs::path dir = work / "desk_data";
  const auto vol = xrf::phantom::make_phantom(xrf::phantom::PhantomKind::kKneeToy, 64, 0);
  xrf::drr::DatasetOptions opts;
  opts.height = opts.width = 64;
  fs::remove_all(dir);
  xrf::drr::make_dataset(vol, opts, dir);
  return dir / xrf::drr::kManifestName;
}

xrf::train::TrainConfig desk_config() {
  xrf::train::TrainConfig cfg;
  cfg.steps = 2000;
  cfg.lambda = xrf::train::LambdaMode::uncertainty();
  cfg.patch_size = 16;
  cfg.disc_arch.patch_size = 16;
  cfg.seed = 0;
  return cfg;
}

struct DeskRun {
  xrf::pipeline::PipelineResult trained;
  xrf::pipeline::PipelineResult untrained;
  double seconds = 0.0;
};

std::map<std::string, std::string> tree_hashes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = xrf::hash_file(e.path());
  }
  return out;
}

Outcome criterion6(const fs::path& manifest, const fs::path& work, DeskRun& run) {
  Outcome o;
  const auto t0 = Clock::now();
  const auto cfg = desk_config();
  fs::remove_all(work / "desk_run");
  run.trained = xrf::pipeline::run(cfg, manifest, work / "desk_run");
  auto base = cfg;
  base.steps = 0;
  base.finetune_steps = 0;
  base.finetune_candidates = 1;
  fs::remove_all(work / "desk_untrained");
  run.untrained = xrf::pipeline::run(base, manifest, work / "desk_untrained");
  run.seconds = seconds_since(t0);

  const double gain = run.trained.report.mean_psnr - run.untrained.report.mean_psnr;
  o.require(gain >= 2.0, "trained PSNR exceeds untrained by >= 2 dB");
  o.require(run.trained.input_mse_after <= run.trained.input_mse_before,
            "finetune does not worsen input-view L_MSE");
  o.require(run.seconds <= 45.0 * 60.0, "runtime <= 45 min");
  o.note("PSNR " + fmt("%.3f", run.trained.report.mean_psnr) + " vs untrained " +
         fmt("%.3f", run.untrained.report.mean_psnr) + " dB (+" + fmt("%.3f", gain) + ")");
  o.note("SSIM " + fmt("%.4f", run.trained.report.mean_ssim) + " FID " +
         fmt("%.4f", run.trained.report.fid) + " KID " + fmt("%.5f", run.trained.report.kid.mean));
  o.note("input MSE " + fmt("%.3e", run.trained.input_mse_before) + " -> " +
         fmt("%.3e", run.trained.input_mse_after));
  o.note(fmt("%.1f s", run.seconds));
  return o;
}

// Reduced per-run budget so the 12 runs fit in four desk runs.
xrf::train::TrainConfig ablation_config() {
  auto cfg = desk_config();
  cfg.steps = 500;
  cfg.eval_samples = 32;
  cfg.finetune_steps = 20;
  cfg.finetune_candidates = 16;
  return cfg;
}

Outcome criterion7(const fs::path& manifest, const fs::path& work, double desk_seconds) {
  Outcome o;
  const auto t0 = Clock::now();
  fs::remove_all(work / "ablation");
  const auto rows = xrf::pipeline::run_ablation(ablation_config(), xrf::pipeline::ablation_grid(),
                                                {0, 1, 2}, manifest, work / "ablation");
  const double secs = seconds_since(t0);
  const auto summary = xrf::pipeline::summarize(rows);
  std::vector<double> fixed;
  double learned = 0.0;
  bool have_learned = false;
  std::string table;
  for (const auto& s : summary) {
    table += (table.empty() ? "" : ", ") + s.mode.name() + " " + fmt("%.3f", s.mean_psnr);
    if (s.mode.kind == xrf::train::LambdaKind::kFixed) {
      fixed.push_back(s.mean_psnr);
    } else {
      learned = s.mean_psnr;
      have_learned = true;
    }
  }
  o.require(have_learned && fixed.size() == 3, "four modes over three seeds");
  if (fixed.size() == 3) {
    std::sort(fixed.begin(), fixed.end());
    o.require(learned >= fixed[1], "uncertainty mean PSNR >= median of fixed modes");
    o.note("median fixed " + fmt("%.3f", fixed[1]));
  }
  o.require(secs <= 4.0 * desk_seconds, "runtime <= 4x criterion 6");
  o.note(table);
  o.note(fmt("%.1f s", secs) + fmt(" (limit %.1f s)", 4.0 * desk_seconds));
  return o;
}

Outcome criterion8(const fs::path& manifest, const fs::path& work) {
  Outcome o;
  const auto t0 = Clock::now();
  fs::remove_all(work / "desk_rerun");
  xrf::pipeline::run(desk_config(), manifest, work / "desk_rerun");
  const auto a = tree_hashes(work / "desk_run");
  const auto b = tree_hashes(work / "desk_rerun");
  o.require(!a.empty() && a.count("history.csv") == 1, "first run produced history.csv");
  o.require(a == b, "identical file set and hashes");
  std::size_t differing = 0;
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    if (it == b.end() || it->second != v) ++differing;
  }
  o.note(std::to_string(a.size()) + " files compared, " + std::to_string(differing) + " differ");
  if (a.count("history.csv")) o.note("history.csv " + a.at("history.csv"));
  o.note(fmt("%.1f s", seconds_since(t0)));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  xrf::configure_allocator();
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <work_dir> [criterion ...]\n", argv[0]);
    return 2;
  }
  const fs::path work = argv[1];
  fs::create_directories(work);
  std::set<int> only;
  for (int i = 2; i < argc; ++i) only.insert(std::atoi(argv[i]));
  auto wanted = [&](int c) { return only.empty() || only.count(c) > 0; };

  bool all = true;
  std::ofstream summary(work / "acceptance_summary.txt");
  auto report = [&](int c, const Outcome& o) {
    char line[32];
    std::snprintf(line, sizeof line, "%s criterion %d: ", o.pass ? "PASS" : "FAIL", c);
    std::printf("%s%s\n", line, o.detail.c_str());
    std::fflush(stdout);
    summary << line << o.detail << '\n';
    all = all && o.pass;
  };
  auto guarded = [&](int c, const std::function<Outcome()>& fn) {
    if (!wanted(c)) return;
    try {
      report(c, fn());
    } catch (const std::exception& e) {
      Outcome o;
      o.require(false, std::string("exception: ") + e.what());
      report(c, o);
    }
  };

  guarded(1, criterion1);
  guarded(2, criterion2);
  guarded(3, criterion3);
  guarded(4, [&] { return criterion4(work); });
  guarded(5, criterion5);

  if (wanted(6) || wanted(7) || wanted(8)) {
    fs::path manifest;
    DeskRun desk;
    bool desk_ok = false;
    try {
      manifest = desk_dataset(work);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "desk dataset: %s\n", e.what());
    }
    guarded(6, [&] {
      const auto o = criterion6(manifest, work, desk);
      desk_ok = true;
      return o;
    });
    guarded(7, [&] {
      if (!desk_ok) {
        Outcome o;
        o.require(false, "criterion 6 run needed for the runtime budget");
        return o;
      }
      return criterion7(manifest, work, desk.seconds);
    });
    guarded(8, [&] {
      if (!desk_ok) {
        Outcome o;
        o.require(false, "criterion 6 run needed as the reference");
        return o;
      }
      return criterion8(manifest, work);
    });
  }
  return all ? 0 : 1;
}
