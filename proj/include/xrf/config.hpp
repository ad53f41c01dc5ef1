// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Flat key-value run configuration (JSON object of scalars).

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "xrf/trainloop.hpp"

namespace xrf::config {

/// Every key accepted by apply(), in documentation order.
const std::vector<std::string>& known_keys();

/// Flat document describing cfg; feeding it back through apply() on a
/// default TrainConfig reproduces cfg exactly.
nlohmann::json to_json(const train::TrainConfig& cfg);

/// Overwrites the fields named in doc. Rejects nested values, unknown keys
/// and values of the wrong type, naming the key.
void apply(const nlohmann::json& doc, train::TrainConfig& cfg);

nlohmann::json load_document(const std::filesystem::path& path);
train::TrainConfig load(const std::filesystem::path& path);
void save(const train::TrainConfig& cfg, const std::filesystem::path& path);

/// "uncertainty", "fixed" (weights from lambda1/lambda2) or "fixed:L1,L2".
train::LambdaMode parse_lambda_mode(const std::string& text);

}  // namespace xrf::config
