// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#include "xrf/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>

namespace xrf::config {

namespace {

using nlohmann::json;
using train::TrainConfig;

struct Binding {
  std::function<json(const TrainConfig&)> get;
  std::function<void(const json&, TrainConfig&)> set;
};

template <typename T>
T as(const json& v, const std::string& key) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw std::invalid_argument("config key '" + key + "' must be a boolean");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw std::invalid_argument("config key '" + key + "' must be a string");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw std::invalid_argument("config key '" + key + "' must be a number");
  } else if constexpr (std::is_unsigned_v<T>) {
    if (!v.is_number_unsigned()) {
      throw std::invalid_argument("config key '" + key + "' must be a non-negative integer");
    }
  } else {
    if (!v.is_number_integer()) throw std::invalid_argument("config key '" + key + "' must be an integer");
  }
  return v.get<T>();
}

#define XRF_BIND(key, type, member)                                                \
  {                                                                                \
    key, {                                                                         \
      [](const TrainConfig& c) { return json(c.member); },                         \
      [](const json& v, TrainConfig& c) { c.member = as<type>(v, key); }           \
    }                                                                              \
  }

const std::vector<std::pair<std::string, Binding>>& bindings() {
  static const std::vector<std::pair<std::string, Binding>> table = {
      XRF_BIND("steps", std::int64_t, steps),
      XRF_BIND("batch_patches", int, batch_patches),
      {"patch_size",
       {[](const TrainConfig& c) { return json(c.patch_size); },
        [](const json& v, TrainConfig& c) {
          c.patch_size = as<int>(v, "patch_size");
          c.disc_arch.patch_size = c.patch_size;
        }}},
      XRF_BIND("scale_min", double, scale_min),
      XRF_BIND("scale_max", double, scale_max),
      XRF_BIND("gen_lr", double, gen_opt.lr),
      XRF_BIND("gen_beta1", double, gen_opt.beta1),
      XRF_BIND("gen_beta2", double, gen_opt.beta2),
      XRF_BIND("disc_lr", double, disc_opt.lr),
      XRF_BIND("disc_beta1", double, disc_opt.beta1),
      XRF_BIND("disc_beta2", double, disc_opt.beta2),
      XRF_BIND("uncertainty_lr", double, uncertainty_opt.lr),
      XRF_BIND("uncertainty_beta1", double, uncertainty_opt.beta1),
      XRF_BIND("uncertainty_beta2", double, uncertainty_opt.beta2),
      {"lambda_mode",
       {[](const TrainConfig& c) {
          return json(c.lambda.kind == train::LambdaKind::kUncertainty ? "uncertainty" : "fixed");
        },
        [](const json& v, TrainConfig& c) {
          const auto s = as<std::string>(v, "lambda_mode");
          if (s == "uncertainty") {
            c.lambda.kind = train::LambdaKind::kUncertainty;
          } else if (s == "fixed") {
            c.lambda.kind = train::LambdaKind::kFixed;
          } else {
            throw std::invalid_argument("config key 'lambda_mode' must be 'uncertainty' or 'fixed'");
          }
        }}},
      XRF_BIND("lambda1", double, lambda.lambda1),
      XRF_BIND("lambda2", double, lambda.lambda2),
      XRF_BIND("adversarial_term", bool, adversarial_term),
      XRF_BIND("r1_gamma", double, r1_gamma),
      XRF_BIND("field_depth", int, field_arch.depth),
      XRF_BIND("field_width", int, field_arch.width),
      XRF_BIND("field_color_width", int, field_arch.color_width),
      XRF_BIND("shape_dim", int, field_arch.shape_dim),
      XRF_BIND("appearance_dim", int, field_arch.appearance_dim),
      XRF_BIND("pos_frequencies", int, field_arch.encoding.pos_frequencies),
      XRF_BIND("dir_frequencies", int, field_arch.encoding.dir_frequencies),
      XRF_BIND("include_input", bool, field_arch.encoding.include_input),
      XRF_BIND("disc_channels1", int, disc_arch.channels1),
      XRF_BIND("disc_channels2", int, disc_arch.channels2),
      XRF_BIND("disc_channels3", int, disc_arch.channels3),
      XRF_BIND("disc_negative_slope", double, disc_arch.negative_slope),
      XRF_BIND("decoder_hidden", int, decoder_hidden),
      XRF_BIND("train_samples", int, train_render.n_samples),
      XRF_BIND("stratified", bool, train_render.stratified),
      XRF_BIND("background", double, train_render.background),
      XRF_BIND("eval_samples", int, eval_samples),
      {"extractor",
       {[](const TrainConfig& c) {
          return json(c.extractor == objective::ExtractorKind::kSeededRandom ? "seeded_random"
                                                                             : "external");
        },
        [](const json& v, TrainConfig& c) {
          const auto s = as<std::string>(v, "extractor");
          if (s == "seeded_random") {
            c.extractor = objective::ExtractorKind::kSeededRandom;
          } else if (s == "external") {
            c.extractor = objective::ExtractorKind::kExternal;
          } else {
            throw std::invalid_argument("config key 'extractor' must be 'seeded_random' or 'external'");
          }
        }}},
      XRF_BIND("extractor_seed", std::uint64_t, extractor_seed),
      XRF_BIND("extractor_weights", std::string, extractor_weights),
      XRF_BIND("seed", std::uint64_t, seed),
      XRF_BIND("log_every", int, log_every),
      XRF_BIND("finetune_steps", int, finetune_steps),
      XRF_BIND("finetune_candidates", int, finetune_candidates),
      XRF_BIND("finetune_lr", double, finetune_lr),
      XRF_BIND("finetune_eval_every", int, finetune_eval_every),
  };
  return table;
}

#undef XRF_BIND

}  // namespace

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, b] : bindings()) k.push_back(name);
    return k;
  }();
  return keys;
}

json to_json(const TrainConfig& cfg) {
  json j = json::object();
  for (const auto& [name, b] : bindings()) j[name] = b.get(cfg);
  return j;
}

void apply(const json& doc, TrainConfig& cfg) {
  if (!doc.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.value().is_object() || it.value().is_array()) {
      throw std::invalid_argument("config key '" + it.key() + "' must be a scalar (config is flat)");
    }
    const auto& table = bindings();
    auto found = std::find_if(table.begin(), table.end(),
                              [&](const auto& p) { return p.first == it.key(); });
    if (found == table.end()) throw std::invalid_argument("unknown config key '" + it.key() + "'");
    found->second.set(it.value(), cfg);
  }
}

json load_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("malformed config " + path.string() + ": " + e.what());
  }
}

TrainConfig load(const std::filesystem::path& path) {
  TrainConfig cfg;
  config::apply(load_document(path), cfg);
  return cfg;
}

void save(const TrainConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(cfg).dump(2) << '\n';
}

train::LambdaMode parse_lambda_mode(const std::string& text) {
  if (text == "uncertainty") return train::LambdaMode::uncertainty();
  const std::string prefix = "fixed:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string rest = text.substr(prefix.size());
    const auto comma = rest.find(',');
    if (comma != std::string::npos) {
      try {
        std::size_t p1 = 0, p2 = 0;
        const double l1 = std::stod(rest.substr(0, comma), &p1);
        const std::string tail = rest.substr(comma + 1);
        const double l2 = std::stod(tail, &p2);
        if (p1 == comma && p2 == tail.size()) return train::LambdaMode::fixed(l1, l2);
      } catch (const std::exception&) {
      }
    }
  }
  throw std::invalid_argument("lambda mode must be 'uncertainty' or 'fixed:L1,L2', got '" + text + "'");
}

}  // namespace xrf::config
