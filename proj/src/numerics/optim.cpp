// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/numerics/optim.hpp"

#include <cmath>
#include <numbers>

#include "adacred/errors.hpp"

namespace adacred {

Adam::Adam(AdamConfig config, std::vector<NamedParam> params)
    : config_(config), params_(std::move(params)) {
  if (config_.lr < 0 || config_.beta1 < 0 || config_.beta1 >= 1 || config_.beta2 < 0 ||
      config_.beta2 >= 1 || config_.weight_decay < 0) {
    throw ParameterError("invalid Adam hyperparameters");
  }
  for (const NamedParam& p : params_) {
    state_.m.emplace_back(p.tensor.numel(), Real(0));
    state_.v.emplace_back(p.tensor.numel(), Real(0));
  }
}

double Adam::learning_rate(double tokens) const {
  if (!config_.lr_decay) return config_.lr;
  if (tokens < config_.warmup_tokens) return config_.lr * tokens / config_.warmup_tokens;
  const double span = std::max(1.0, config_.final_tokens - config_.warmup_tokens);
  const double progress = std::min(1.0, (tokens - config_.warmup_tokens) / span);
  const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  return config_.lr * (config_.min_lr_ratio + (1.0 - config_.min_lr_ratio) * cosine);
}

StepReport Adam::step(double tokens) {
  double sq = 0.0;
  for (NamedParam& p : params_) {
    if (!p.tensor.has_grad()) continue;
    for (Real g : p.tensor.grad()) {
      if (!std::isfinite(g)) throw NumericalError("non-finite gradient in parameter '" + p.name + "'");
      sq += double(g) * double(g);
    }
  }
  StepReport report;
  report.grad_norm = std::sqrt(sq);
  if (config_.clip_norm > 0 && report.grad_norm > config_.clip_norm) {
    report.clip_scale = config_.clip_norm / report.grad_norm;
  }
  state_.tokens += tokens;
  ++state_.step;
  report.lr = learning_rate(state_.tokens);
  const double bc1 = 1.0 - std::pow(config_.beta1, double(state_.step));
  const double bc2 = 1.0 - std::pow(config_.beta2, double(state_.step));
  const Real b1 = Real(config_.beta1), b2 = Real(config_.beta2);
  const Real scale = Real(report.clip_scale);
  const Real step_size = Real(report.lr / bc1);
  const Real inv_bc2 = Real(1.0 / bc2);
  const Real eps = Real(config_.eps);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    NamedParam& p = params_[i];
    auto w = p.tensor.mutable_data();
    const bool has_grad = p.tensor.has_grad();
    std::span<const Real> grad = has_grad ? p.tensor.grad() : std::span<const Real>();
    std::vector<Real>& m = state_.m[i];
    std::vector<Real>& v = state_.v[i];
    const Real decay = p.decay ? Real(report.lr * config_.weight_decay) : Real(0);
    for (std::size_t j = 0; j < w.size(); ++j) {
      const Real g = has_grad ? grad[j] * scale : Real(0);
      m[j] = b1 * m[j] + (Real(1) - b1) * g;
      v[j] = b2 * v[j] + (Real(1) - b2) * g * g;
      const Real denom = std::sqrt(v[j] * inv_bc2) + eps;
      w[j] -= decay * w[j];
      w[j] -= step_size * m[j] / denom;
    }
  }
  return report;
}

void Adam::zero_grad() {
  for (NamedParam& p : params_) p.tensor.zero_grad();
}

void Adam::set_state(OptimizerState state) {
  if (state.m.size() != params_.size() || state.v.size() != params_.size()) {
    throw StateError("optimizer state has wrong parameter count");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (state.m[i].size() != params_[i].tensor.numel() || state.v[i].size() != params_[i].tensor.numel()) {
      throw StateError("optimizer moment buffer shape mismatch for '" + params_[i].name + "'");
    }
  }
  if (state.step < state_.step && state_.step != 0) {
    // restoring an older snapshot is allowed only onto a fresh optimizer
    throw StateError("optimizer step counter cannot move backwards");
  }
  state_ = std::move(state);
}

}  // namespace adacred
