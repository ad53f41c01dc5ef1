// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
//
// xrf: phantom -> drr -> train -> finetune -> render -> eval, plus ablate.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "xrf/checkpoint.hpp"
#include "xrf/config.hpp"
#include "xrf/drr.hpp"
#include "xrf/hash.hpp"
#include "xrf/image_io.hpp"
#include "xrf/metrics.hpp"
#include "xrf/phantom.hpp"
#include "xrf/pipeline.hpp"
#include "xrf/runtime.hpp"
#include "xrf/trainloop.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path default_out(const std::string& sub) {
  const char* root = std::getenv("XRF_OUTPUT_ROOT");
  return fs::path(root != nullptr && *root != '\0' ? root : "xrf_out") / sub;
}

// A directory argument may name the manifest itself or its directory.
fs::path manifest_path(const fs::path& p) {
  return fs::is_directory(p) ? p / xrf::drr::kManifestName : p;
}

json hashes(const std::vector<fs::path>& paths) {
  json j = json::object();
  for (const auto& p : paths) {
    if (fs::is_regular_file(p)) j[p.string()] = xrf::hash_file(p);
  }
  return j;
}

json dir_hashes(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "run_manifest.json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return hashes(files);
}

void write_run_manifest(const fs::path& path, const std::vector<std::string>& argv,
                        const json& settings, const std::vector<fs::path>& inputs,
                        const json& outputs) {
  json j;
  j["format"] = "xrf-run-1";
  j["argv"] = argv;
  j["settings"] = settings;
  j["inputs"] = hashes(inputs);
  j["outputs"] = outputs;
  std::ofstream(path) << j.dump(2) << '\n';
}

void print_row(const xrf::train::HistoryRow& r) {
  std::fprintf(stderr,
               "step %lld  loss_D %.4f  loss_G_adv %.4f  L_r %.5f  L_MSE %.6f  "
               "sigma1^2 %.4g  sigma2^2 %.4g\n",
               static_cast<long long>(r.step), r.loss_d, r.loss_g_adv, r.l_r, r.l_mse,
               r.sigma1_sq, r.sigma2_sq);
}

struct TrainFlags {
  std::string config;
  long long steps = -1;
  std::string lambda;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_train_flags(CLI::App* app, TrainFlags& f) {
  app->add_option("--config", f.config, "Flat JSON config (unknown keys rejected)")
      ->check(CLI::ExistingFile);
  app->add_option("--steps", f.steps, "Training steps (overrides config)");
  app->add_option("--lambda", f.lambda, "Loss weighting: uncertainty | fixed:L1,L2");
}

xrf::train::TrainConfig resolve_config(const TrainFlags& f) {
  xrf::train::TrainConfig cfg;
  if (!f.config.empty()) cfg = xrf::config::load(f.config);
  if (f.steps >= 0) cfg.steps = f.steps;
  if (!f.lambda.empty()) cfg.lambda = xrf::config::parse_lambda_mode(f.lambda);
  if (f.seed_set) cfg.seed = f.seed;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  xrf::configure_allocator();
  CLI::App app{"xrf: X-ray radiance-field pipeline (phantoms, DRRs, training, evaluation)"};
  app.require_subcommand(1);
  std::vector<std::string> args(argv, argv + argc);

  std::uint64_t seed = 0;
  auto add_seed = [&](CLI::App* sub) {
    return sub->add_option("--seed", seed, "Random seed");
  };

  // phantom
  auto* ph = app.add_subcommand("phantom", "Generate a synthetic attenuation volume");
  std::string kind = "knee_toy";
  int size = 64;
  fs::path vol_out;
  std::vector<std::string> ph_params;
  ph->add_option("--kind", kind, "cube | ellipsoids | knee_toy")->capture_default_str();
  ph->add_option("--size", size, "Voxels per side")->capture_default_str();
  ph->add_option("--param", ph_params, "Shape parameter KEY=VALUE (repeatable)");
  ph->add_option("--out", vol_out, "Output volume file")->required();
  add_seed(ph);

  // drr
  auto* dr = app.add_subcommand("drr", "Project a volume into a radiograph dataset");
  fs::path vol_in, drr_out;
  xrf::drr::DatasetOptions dopts;
  int res = 128;
  std::string polarity = "bright";
  dr->add_option("--volume", vol_in, "Input volume")->required()->check(CLI::ExistingFile);
  dr->add_option("--views", dopts.n_views, "Number of views")->capture_default_str();
  dr->add_option("--step-deg", dopts.step_deg, "Angular step (degrees)")->capture_default_str();
  dr->add_option("--res", res, "Image side in pixels")->capture_default_str();
  dr->add_option("--steps", dopts.n_steps, "Quadrature samples per ray")->capture_default_str();
  dr->add_option("--fov", dopts.fov_extent_mm, "Half-width of the imaged region in mm (0 = fit)");
  dr->add_option("--polarity", polarity, "bright (1 - exp) | dark (exp)")->capture_default_str();
  dr->add_option("--out", drr_out, "Output directory");
  add_seed(dr);

  // train
  auto* tr = app.add_subcommand("train", "Train the radiance field on a dataset");
  TrainFlags tflags;
  fs::path data, train_out, resume;
  tr->add_option("--data", data, "Dataset directory or manifest")->required()->check(CLI::ExistingPath);
  tr->add_option("--out", train_out, "Output directory");
  tr->add_option("--resume", resume, "Continue from a checkpoint")->check(CLI::ExistingFile);
  add_train_flags(tr, tflags);
  add_seed(tr);

  // finetune
  auto* ft = app.add_subcommand("finetune", "Fit latents and generator to one radiograph");
  fs::path ckpt_in, ft_out, ft_image;
  double theta = 0.0;
  int ft_steps = -1, ft_candidates = -1;
  ft->add_option("--checkpoint", ckpt_in, "Trained checkpoint")->required()->check(CLI::ExistingFile);
  ft->add_option("--data", data, "Dataset directory or manifest holding the input view");
  ft->add_option("--image", ft_image, "8-bit PNG input view (instead of --data)")->check(CLI::ExistingFile);
  ft->add_option("--theta", theta, "Angle of the input view in degrees")->capture_default_str();
  ft->add_option("--steps", ft_steps, "Fine-tuning steps (default from checkpoint config)");
  ft->add_option("--candidates", ft_candidates, "Random latent draws M (default from config)");
  ft->add_option("--out", ft_out, "Output checkpoint");
  add_seed(ft);

  // render
  auto* rd = app.add_subcommand("render", "Render the full orbit from a checkpoint");
  fs::path render_out;
  xrf::train::RenderOptions ropts;
  int rres = 0;
  rd->add_option("--checkpoint", ckpt_in, "Checkpoint (fine-tuned latents used if present)")
      ->required()
      ->check(CLI::ExistingFile);
  rd->add_option("--views", ropts.n_views, "Number of views")->capture_default_str();
  rd->add_option("--step-deg", ropts.step_deg, "Angular step (degrees)")->capture_default_str();
  rd->add_option("--res", rres, "Image side (0 = training resolution)");
  rd->add_option("--out", render_out, "Output directory");
  add_seed(rd);

  // eval
  auto* ev = app.add_subcommand("eval", "Compare a rendered stack with reference radiographs");
  fs::path pred, ref, eval_out, fx_weights;
  std::string fx_kind = "seeded_random", covariance = "sample";
  std::uint64_t fx_seed = 0;
  xrf::metrics::EvalOptions eopts;
  ev->add_option("--pred", pred, "Predicted stack directory or manifest")->required()->check(CLI::ExistingPath);
  ev->add_option("--ref", ref, "Reference stack directory or manifest")->required()->check(CLI::ExistingPath);
  ev->add_option("--extractor", fx_kind, "seeded_random | external")->capture_default_str();
  ev->add_option("--extractor-seed", fx_seed, "Seed of the seeded_random extractor")->capture_default_str();
  ev->add_option("--extractor-weights", fx_weights, "Archive with external extractor weights");
  ev->add_option("--kid-subset", eopts.kid_subset_size, "KID subset size")->capture_default_str();
  ev->add_option("--kid-subsets", eopts.kid_subsets, "KID subset draws")->capture_default_str();
  ev->add_option("--covariance", covariance, "FID covariance: sample | population")->capture_default_str();
  ev->add_option("--out", eval_out, "Report directory");
  add_seed(ev);

  // ablate
  auto* ab = app.add_subcommand("ablate", "Compare fixed loss weights with learned weights");
  TrainFlags aflags;
  fs::path ab_out;
  std::vector<std::uint64_t> seeds;
  ab->add_option("--data", data, "Dataset directory or manifest")->required()->check(CLI::ExistingPath);
  ab->add_option("--seeds", seeds, "Seeds to run (default: --seed, --seed+1, --seed+2)");
  ab->add_option("--out", ab_out, "Output directory");
  add_train_flags(ab, aflags);
  add_seed(ab);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help() << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    const auto* active = app.get_subcommands().front();
    const bool seed_set = active->count("--seed") > 0;

    if (*ph) {
      xrf::phantom::PhantomParams params;
      for (const auto& kv : ph_params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--param expects KEY=VALUE, got '" + kv + "'");
        params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
      }
      const auto v = xrf::phantom::make_phantom(xrf::phantom::parse_phantom_kind(kind), size, seed, params);
      if (vol_out.has_parent_path()) fs::create_directories(vol_out.parent_path());
      xrf::phantom::save_volume(v, vol_out);
      json settings{{"kind", kind}, {"size", size}, {"seed", seed}, {"params", params}};
      write_run_manifest(vol_out.string() + ".manifest.json", args, settings, {},
                         hashes({vol_out}));
      std::printf("wrote %s (%s)\n", vol_out.string().c_str(), v.content_hash().c_str());
      return 0;
    }

    if (*dr) {
      if (drr_out.empty()) drr_out = default_out("drr");
      dopts.height = dopts.width = res;
      dopts.polarity = xrf::drr::parse_polarity(polarity);
      const auto v = xrf::phantom::load_volume(vol_in);
      const auto m = xrf::drr::make_dataset(v, dopts, drr_out);
      json settings{{"views", dopts.n_views}, {"step_deg", dopts.step_deg}, {"res", res},
                    {"steps", dopts.n_steps}, {"fov", dopts.fov_extent_mm},
                    {"polarity", polarity}, {"seed", seed}};
      write_run_manifest(drr_out / "run_manifest.json", args, settings, {vol_in}, dir_hashes(drr_out));
      std::printf("wrote %zu views to %s\n", m.views.size(), drr_out.string().c_str());
      return 0;
    }

    if (*tr) {
      if (train_out.empty()) train_out = default_out("train");
      tflags.seed = seed;
      tflags.seed_set = seed_set;
      const fs::path mpath = manifest_path(data);
      const auto manifest = xrf::drr::load_manifest(mpath);
      const auto views = xrf::drr::load_views(manifest, mpath.parent_path());
      xrf::train::RunCheckpoint ckpt;
      if (!resume.empty()) {
        ckpt = xrf::checkpoint::load(resume);
        if (tflags.steps >= 0) {
          if (tflags.steps < ckpt.step) {
            throw std::invalid_argument("--steps is below the checkpoint's step " + std::to_string(ckpt.step));
          }
          ckpt.config.steps = tflags.steps;
        }
      } else {
        ckpt = xrf::train::init_run(resolve_config(tflags), xrf::train::image_info(views));
      }
      fs::create_directories(train_out);
      xrf::config::save(ckpt.config, train_out / "config.resolved.json");
      const auto fx = xrf::train::make_extractor(ckpt.config);
      xrf::train::train_steps(ckpt, views, *fx, print_row);
      xrf::checkpoint::save(ckpt, train_out / "checkpoint.xrfc");
      xrf::train::write_history_csv(ckpt.history, train_out / "history.csv");
      xrf::train::write_history_plots(ckpt.history, train_out / "plots");
      std::vector<fs::path> inputs{mpath};
      for (const auto& v : manifest.views) inputs.push_back(mpath.parent_path() / v.file);
      if (!resume.empty()) inputs.push_back(resume);
      if (!tflags.config.empty()) inputs.emplace_back(tflags.config);
      write_run_manifest(train_out / "run_manifest.json", args, xrf::config::to_json(ckpt.config),
                         inputs, dir_hashes(train_out));
      std::printf("trained to step %lld, wrote %s\n", static_cast<long long>(ckpt.step),
                  (train_out / "checkpoint.xrfc").string().c_str());
      return 0;
    }

    if (*ft) {
      if (ft_out.empty()) ft_out = default_out("finetune") / "finetuned.xrfc";
      const auto ckpt = xrf::checkpoint::load(ckpt_in);
      xrf::drr::RadiographImage xray;
      std::vector<fs::path> inputs{ckpt_in};
      if (!ft_image.empty()) {
        const xrf::Gray8 g = xrf::read_png(ft_image);
        xray.height = g.height;
        xray.width = g.width;
        for (auto p : g.pixels) xray.pixels.push_back(p / 255.0);
        xray.pose.theta_deg = theta;
        xray.pose.elevation_deg = ckpt.image.elevation_deg;
        xray.pose.distance_mm = ckpt.image.distance_mm;
        xray.pose.fov_extent_mm = ckpt.image.fov_extent_mm;
        xray.pose = xray.pose.normalized();
        inputs.push_back(ft_image);
      } else {
        if (data.empty()) throw std::invalid_argument("finetune needs --data or --image");
        const fs::path mpath = manifest_path(data);
        const auto views = xrf::drr::load_views(xrf::drr::load_manifest(mpath), mpath.parent_path());
        const auto& v = views[xrf::pipeline::view_at(views, theta)];
        xray = v;
        inputs.push_back(mpath);
      }
      auto opts = xrf::train::finetune_options(ckpt.config);
      if (ft_steps >= 0) opts.steps = ft_steps;
      if (ft_candidates >= 0) opts.candidates = ft_candidates;
      if (seed_set) opts.seed = seed;
      const auto fx = xrf::train::make_extractor(ckpt.config);
      const auto tuned = xrf::train::finetune(ckpt, xray, *fx, opts);
      if (ft_out.has_parent_path()) fs::create_directories(ft_out.parent_path());
      xrf::checkpoint::save(tuned, ft_out);
      json settings{{"theta", theta}, {"steps", opts.steps}, {"candidates", opts.candidates},
                    {"lr", opts.lr}, {"eval_every", opts.eval_every}, {"seed", opts.seed}};
      write_run_manifest(ft_out.string() + ".manifest.json", args, settings, inputs, hashes({ft_out}));
      const auto& h = tuned.finetune_history;
      double best = h.front().view_mse;
      for (const auto& r : h) best = std::min(best, r.view_mse);
      std::printf("input-view MSE %.6g -> %.6g, wrote %s\n", h.front().view_mse, best,
                  ft_out.string().c_str());
      return 0;
    }

    if (*rd) {
      if (render_out.empty()) render_out = default_out("render");
      ropts.height = ropts.width = rres;
      const auto ckpt = xrf::checkpoint::load(ckpt_in);
      const auto m = xrf::train::render_full(ckpt, ropts, render_out);
      json settings{{"views", ropts.n_views}, {"step_deg", ropts.step_deg}, {"res", rres}, {"seed", seed}};
      write_run_manifest(render_out / "run_manifest.json", args, settings, {ckpt_in}, dir_hashes(render_out));
      std::printf("rendered %zu views to %s\n", m.views.size(), render_out.string().c_str());
      return 0;
    }

    if (*ev) {
      if (eval_out.empty()) eval_out = default_out("eval");
      if (covariance == "sample") {
        eopts.covariance = xrf::metrics::CovarianceMode::kSample;
      } else if (covariance == "population") {
        eopts.covariance = xrf::metrics::CovarianceMode::kPopulation;
      } else {
        throw std::invalid_argument("--covariance must be sample or population");
      }
      xrf::objective::ExtractorKind k;
      if (fx_kind == "seeded_random") {
        k = xrf::objective::ExtractorKind::kSeededRandom;
      } else if (fx_kind == "external") {
        k = xrf::objective::ExtractorKind::kExternal;
      } else {
        throw std::invalid_argument("--extractor must be seeded_random or external");
      }
      eopts.seed = seed;
      const auto fx = xrf::objective::make_feature_extractor(k, fx_seed, fx_weights);
      const auto report = xrf::metrics::evaluate_stack(manifest_path(pred), manifest_path(ref), *fx, eopts);
      xrf::metrics::write_report(report, eval_out);
      json settings{{"extractor", fx->descriptor()}, {"kid_subset", eopts.kid_subset_size},
                    {"kid_subsets", eopts.kid_subsets}, {"covariance", covariance}, {"seed", seed}};
      std::vector<fs::path> inputs{manifest_path(pred), manifest_path(ref)};
      if (!fx_weights.empty()) inputs.push_back(fx_weights);
      write_run_manifest(eval_out / "run_manifest.json", args, settings, inputs, dir_hashes(eval_out));
      std::printf("PSNR %.3f dB  SSIM %.4f  FID %.4g  KID %.4g +- %.2g  (%s features)\n",
                  report.mean_psnr, report.mean_ssim, report.fid, report.kid.mean, report.kid.std,
                  report.extractor.c_str());
      return 0;
    }

    if (*ab) {
      if (ab_out.empty()) ab_out = default_out("ablate");
      aflags.seed = seed;
      aflags.seed_set = false;
      const auto base = resolve_config(aflags);
      if (seeds.empty()) seeds = {seed, seed + 1, seed + 2};
      const fs::path mpath = manifest_path(data);
      const auto rows = xrf::pipeline::run_ablation(
          base, xrf::pipeline::ablation_grid(), seeds, mpath, ab_out, {},
          [](const xrf::pipeline::AblationRow& r) {
            std::fprintf(stderr, "%s seed %llu: PSNR %.3f dB SSIM %.4f\n", r.mode.name().c_str(),
                         static_cast<unsigned long long>(r.seed), r.mean_psnr, r.mean_ssim);
          });
      json settings = xrf::config::to_json(base);
      settings["seeds"] = seeds;
      write_run_manifest(ab_out / "run_manifest.json", args, settings, {mpath},
                         hashes({ab_out / "ablation.csv", ab_out / "ablation.md"}));
      std::ifstream md(ab_out / "ablation.md");
      std::cout << md.rdbuf();
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
