// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#include "xrf/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace xrf::optim {

Adam::Adam(std::vector<ad::Tensor> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  if (!(cfg_.lr > 0.0)) throw std::invalid_argument("Adam: learning rate must be > 0");
  for (const auto& p : params_) {
    m_.push_back(ad::Matrix::Zero(p.rows(), p.cols()));
    v_.push_back(ad::Matrix::Zero(p.rows(), p.cols()));
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.has_grad()) continue;
    const ad::Matrix& g = p.node()->grad;
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    p.value_mut().array() -=
        cfg_.lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + cfg_.eps);
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Adam::restore(std::vector<ad::Matrix> m, std::vector<ad::Matrix> v, std::int64_t t) {
  if (m.size() != params_.size() || v.size() != params_.size()) {
    throw std::invalid_argument("Adam::restore: moment count mismatch");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (m[i].rows() != params_[i].rows() || m[i].cols() != params_[i].cols() ||
        v[i].rows() != params_[i].rows() || v[i].cols() != params_[i].cols()) {
      throw std::invalid_argument("Adam::restore: moment shape mismatch");
    }
  }
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

}  // namespace xrf::optim
