// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#include "xrf/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "xrf/checkpoint.hpp"
#include "xrf/config.hpp"

namespace xrf::pipeline {

std::size_t view_at(const std::vector<drr::RadiographImage>& views, double theta_deg) {
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (std::abs(views[i].pose.theta_deg - theta_deg) < 1e-6) return i;
  }
  throw std::invalid_argument("dataset has no view at theta = " + std::to_string(theta_deg) + " deg");
}

PipelineResult run(const train::TrainConfig& cfg, const std::filesystem::path& dataset_manifest,
                   const std::filesystem::path& out_dir, const PipelineOptions& opts,
                   const train::ProgressFn& progress) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  config::save(cfg, out_dir / "config.resolved.json");
  const drr::DatasetManifest manifest = drr::load_manifest(dataset_manifest);
  const auto views = drr::load_views(manifest, dataset_manifest.parent_path());
  const auto fx = train::make_extractor(cfg);

  train::RunCheckpoint ckpt = train::init_run(cfg, train::image_info(views));
  train::train_steps(ckpt, views, *fx, progress);
  checkpoint::save(ckpt, out_dir / "checkpoint.xrfc");
  train::write_history_csv(ckpt.history, out_dir / "history.csv");

  const auto& input = views[view_at(views, opts.finetune_theta_deg)];
  PipelineResult result;
  result.tuned = train::finetune(ckpt, input, *fx, train::finetune_options(cfg));
  checkpoint::save(result.tuned, out_dir / "finetuned.xrfc");
  result.input_mse_before = result.tuned.finetune_history.front().view_mse;
  result.input_mse_after = result.input_mse_before;
  for (const auto& r : result.tuned.finetune_history) {
    result.input_mse_after = std::min(result.input_mse_after, r.view_mse);
  }

  train::render_full(result.tuned, opts.render, out_dir / "render");
  result.report = metrics::evaluate_stack(out_dir / "render" / drr::kManifestName,
                                          dataset_manifest, *fx, opts.eval);
  metrics::write_report(result.report, out_dir / "eval");
  return result;
}

std::vector<train::LambdaMode> ablation_grid() {
  return {train::LambdaMode::fixed(0.6, 0.4), train::LambdaMode::fixed(0.5, 0.5),
          train::LambdaMode::fixed(0.4, 0.6), train::LambdaMode::uncertainty()};
}

std::vector<AblationRow> run_ablation(const train::TrainConfig& base,
                                      const std::vector<train::LambdaMode>& modes,
                                      const std::vector<std::uint64_t>& seeds,
                                      const std::filesystem::path& dataset_manifest,
                                      const std::filesystem::path& out_dir,
                                      const PipelineOptions& opts,
                                      const AblationProgress& progress) {
  std::vector<AblationRow> rows;
  for (const auto& mode : modes) {
    for (std::uint64_t seed : seeds) {
      train::TrainConfig cfg = base;
      cfg.lambda = mode;
      cfg.seed = seed;
      const auto dir = out_dir / mode.name() / ("seed_" + std::to_string(seed));
      const PipelineResult r = run(cfg, dataset_manifest, dir, opts);
      AblationRow row{mode, seed, r.report.mean_psnr, r.report.mean_ssim, r.report.fid,
                      r.report.kid.mean};
      rows.push_back(row);
      if (progress) progress(row);
    }
  }
  write_ablation_table(rows, out_dir);
  return rows;
}

std::vector<ModeSummary> summarize(const std::vector<AblationRow>& rows) {
  std::vector<ModeSummary> out;
  for (const auto& r : rows) {
    const auto name = r.mode.name();
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const ModeSummary& s) { return s.mode.name() == name; });
    if (it != out.end()) continue;
    ModeSummary s;
    s.mode = r.mode;
    std::vector<double> p, q;
    for (const auto& x : rows) {
      if (x.mode.name() == name) {
        p.push_back(x.mean_psnr);
        q.push_back(x.mean_ssim);
      }
    }
    auto stats = [](const std::vector<double>& v, double& mean, double& sd) {
      mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      sd = std::sqrt(var / static_cast<double>(v.size()));
    };
    stats(p, s.mean_psnr, s.std_psnr);
    stats(q, s.mean_ssim, s.std_ssim);
    out.push_back(s);
  }
  return out;
}

void write_ablation_table(const std::vector<AblationRow>& rows, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::FILE* f = std::fopen((dir / "ablation.csv").string().c_str(), "w");
  if (f == nullptr) throw std::runtime_error("cannot write ablation.csv");
  std::fprintf(f, "mode,seed,mean_psnr_db,mean_ssim,fid,kid_mean\n");
  for (const auto& r : rows) {
    std::fprintf(f, "%s,%llu,%.17g,%.17g,%.17g,%.17g\n", r.mode.name().c_str(),
                 static_cast<unsigned long long>(r.seed), r.mean_psnr, r.mean_ssim, r.fid,
                 r.kid_mean);
  }
  std::fclose(f);
  std::ofstream md(dir / "ablation.md");
  md << "| loss weights | PSNR (dB) | SSIM |\n|---|---|---|\n";
  char buf[160];
  for (const auto& s : summarize(rows)) {
    const std::string label = s.mode.kind == train::LambdaKind::kUncertainty
                                  ? std::string("learned (uncertainty)")
                                  : s.mode.name();
    std::snprintf(buf, sizeof(buf), "| %s | %.3f ± %.3f | %.4f ± %.4f |\n", label.c_str(),
                  s.mean_psnr, s.std_psnr, s.mean_ssim, s.std_ssim);
    md << buf;
  }
}

}  // namespace xrf::pipeline
