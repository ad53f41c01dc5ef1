// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// RunCheckpoint persistence on top of the named-array archive.
//
// Arrays: every field/disc/decoder parameter under its parameter name,
// "uncertainty.s1", "uncertainty.s2", optimizer moments as
// "opt.<gen|disc|uncertainty>.<m|v>.<index>", the loss history as
// "history" (rows of step, loss_D, loss_G_adv, L_r, L_MSE, sigma1_sq,
// sigma2_sq), optional "latents.shape"/"latents.appearance" and
// "finetune_history" (iteration, view MSE).
// Metadata: kind "xrf-checkpoint", flat config, image geometry, step,
// optimizer step counts and the loop RNG state.

#include <filesystem>

#include "xrf/trainloop.hpp"

namespace xrf::checkpoint {

void save(const train::RunCheckpoint& ckpt, const std::filesystem::path& path);
train::RunCheckpoint load(const std::filesystem::path& path);

}  // namespace xrf::checkpoint
