// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#include "xrf/checkpoint.hpp"

#include <stdexcept>

#include "xrf/archive.hpp"
#include "xrf/config.hpp"

namespace xrf::checkpoint {

namespace {

using ad::Matrix;
using ad::Tensor;
using nlohmann::json;

constexpr const char* kKind = "xrf-checkpoint";

void put_params(archive::Archive& a, const std::vector<std::string>& names,
                const std::vector<Tensor>& params) {
  for (std::size_t i = 0; i < params.size(); ++i) a.put(names[i], params[i].value());
}

std::vector<Tensor> get_params(const archive::Archive& a, const std::vector<std::string>& names) {
  std::vector<Tensor> out;
  for (const auto& n : names) out.emplace_back(a.get(n), true);
  return out;
}

void put_state(archive::Archive& a, const std::string& tag, const train::AdamState& s) {
  for (std::size_t i = 0; i < s.m.size(); ++i) {
    a.put("opt." + tag + ".m." + std::to_string(i), s.m[i]);
    a.put("opt." + tag + ".v." + std::to_string(i), s.v[i]);
  }
  a.metadata["optimizer_steps"][tag] = s.t;
}

train::AdamState get_state(const archive::Archive& a, const std::string& tag, std::size_t n) {
  train::AdamState s;
  for (std::size_t i = 0; i < n; ++i) {
    s.m.push_back(a.get("opt." + tag + ".m." + std::to_string(i)));
    s.v.push_back(a.get("opt." + tag + ".v." + std::to_string(i)));
  }
  s.t = a.metadata.at("optimizer_steps").at(tag).get<std::int64_t>();
  return s;
}

}  // namespace

void save(const train::RunCheckpoint& c, const std::filesystem::path& path) {
  archive::Archive a;
  a.metadata["kind"] = kKind;
  a.metadata["config"] = config::to_json(c.config);
  a.metadata["image"] = {{"height", c.image.height},
                         {"width", c.image.width},
                         {"elevation_deg", c.image.elevation_deg},
                         {"distance_mm", c.image.distance_mm},
                         {"fov_extent_mm", c.image.fov_extent_mm}};
  a.metadata["step"] = c.step;
  a.metadata["rng_state"] = c.rng_state;

  put_params(a, c.field.parameter_names(), c.field.parameters());
  put_params(a, c.disc.parameter_names(), c.disc.parameters());
  put_params(a, c.decoder.parameter_names(), c.decoder.parameters());
  a.put("uncertainty.s1", c.uncertainty.log_var_feature.value());
  a.put("uncertainty.s2", c.uncertainty.log_var_pixel.value());
  put_state(a, "gen", c.gen_state);
  put_state(a, "disc", c.disc_state);
  put_state(a, "uncertainty", c.uncertainty_state);

  Matrix hist(static_cast<ad::Index>(c.history.size()), 7);
  for (std::size_t i = 0; i < c.history.size(); ++i) {
    const auto& r = c.history[i];
    hist.row(static_cast<ad::Index>(i)) << static_cast<double>(r.step), r.loss_d, r.loss_g_adv,
        r.l_r, r.l_mse, r.sigma1_sq, r.sigma2_sq;
  }
  a.put("history", std::move(hist));
  if (c.latents) {
    a.put("latents.shape", c.latents->shape.value());
    a.put("latents.appearance", c.latents->appearance.value());
  }
  Matrix ft(static_cast<ad::Index>(c.finetune_history.size()), 2);
  for (std::size_t i = 0; i < c.finetune_history.size(); ++i) {
    ft(static_cast<ad::Index>(i), 0) = c.finetune_history[i].iteration;
    ft(static_cast<ad::Index>(i), 1) = c.finetune_history[i].view_mse;
  }
  a.put("finetune_history", std::move(ft));
  archive::save_archive(a, path);
}

train::RunCheckpoint load(const std::filesystem::path& path) {
  const archive::Archive a = archive::load_archive(path);
  if (a.metadata.value("kind", std::string()) != kKind) {
    throw std::runtime_error(path.string() + " is not a checkpoint");
  }
  train::RunCheckpoint c;
  config::apply(a.metadata.at("config"), c.config);
  c.config.validate();
  const json& img = a.metadata.at("image");
  c.image.height = img.at("height").get<int>();
  c.image.width = img.at("width").get<int>();
  c.image.elevation_deg = img.at("elevation_deg").get<double>();
  c.image.distance_mm = img.at("distance_mm").get<double>();
  c.image.fov_extent_mm = img.at("fov_extent_mm").get<double>();
  c.step = a.metadata.at("step").get<std::int64_t>();
  c.rng_state = a.metadata.at("rng_state").get<std::string>();

  // Build skeletons to learn parameter names and shapes, then fill them in.
  train::RunCheckpoint shape = train::init_run(c.config, c.image);
  c.field = field::RadianceField(c.config.field_arch,
                                 get_params(a, shape.field.parameter_names()));
  c.disc = adversary::Discriminator(c.config.disc_arch, get_params(a, shape.disc.parameter_names()));
  c.decoder = objective::AuxDecoder(shape.decoder.input_shape(), c.config.decoder_hidden,
                                    get_params(a, shape.decoder.parameter_names()));
  c.uncertainty = objective::UncertaintyParams::init(a.get("uncertainty.s1")(0, 0),
                                                     a.get("uncertainty.s2")(0, 0));
  c.gen_state = get_state(a, "gen", shape.gen_state.m.size());
  c.disc_state = get_state(a, "disc", shape.disc_state.m.size());
  c.uncertainty_state = get_state(a, "uncertainty", shape.uncertainty_state.m.size());

  const Matrix& hist = a.get("history");
  for (ad::Index i = 0; i < hist.rows(); ++i) {
    c.history.push_back({static_cast<std::int64_t>(hist(i, 0)), hist(i, 1), hist(i, 2), hist(i, 3),
                         hist(i, 4), hist(i, 5), hist(i, 6)});
  }
  if (a.contains("latents.shape")) {
    c.latents = field::make_latents(a.get("latents.shape"), a.get("latents.appearance"));
  }
  const Matrix& ft = a.get("finetune_history");
  for (ad::Index i = 0; i < ft.rows(); ++i) {
    c.finetune_history.push_back({static_cast<int>(ft(i, 0)), ft(i, 1)});
  }
  return c;
}

}  // namespace xrf::checkpoint
