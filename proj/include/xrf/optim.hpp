// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "xrf/autodiff.hpp"

namespace xrf::optim {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam over a fixed list of leaf tensors. Parameters without an accumulated
/// gradient are skipped for that step (their moments are left untouched).
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<ad::Tensor> params, AdamConfig cfg);

  void step();
  void zero_grad();

  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }
  std::int64_t steps() const { return t_; }
  const std::vector<ad::Matrix>& first_moments() const { return m_; }
  const std::vector<ad::Matrix>& second_moments() const { return v_; }
  /// Restores moments and step count (shapes must match the parameters).
  void restore(std::vector<ad::Matrix> m, std::vector<ad::Matrix> v, std::int64_t t);

 private:
  std::vector<ad::Tensor> params_;
  AdamConfig cfg_;
  std::vector<ad::Matrix> m_;
  std::vector<ad::Matrix> v_;
  std::int64_t t_ = 0;
};

}  // namespace xrf::optim
