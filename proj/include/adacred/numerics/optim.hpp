// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0
//
// AdamW with global-norm clipping and a token-driven warmup/cosine schedule.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adacred/numerics/tensor.hpp"

namespace adacred {

struct AdamConfig {
  double lr = 6e-4;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double weight_decay = 0.1;
  double clip_norm = 1.0;  // <= 0 disables clipping
  bool lr_decay = true;
  double warmup_tokens = 512.0 * 20.0;
  double final_tokens = 2.0 * 500000.0 * 30.0;
  double min_lr_ratio = 0.1;  // cosine floor as a fraction of peak
};

struct NamedParam {
  std::string name;
  Tensor tensor;
  bool decay = false;  // decoupled weight decay applies
};

struct OptimizerState {
  std::vector<std::vector<Real>> m;
  std::vector<std::vector<Real>> v;
  std::uint64_t step = 0;
  double tokens = 0.0;
};

struct StepReport {
  double grad_norm = 0.0;  // before clipping
  double clip_scale = 1.0;
  double lr = 0.0;
};

class Adam {
 public:
  Adam(AdamConfig config, std::vector<NamedParam> params);

  // Learning rate after `tokens` tokens have been processed.
  double learning_rate(double tokens) const;

  // Applies one update from the parameters' current gradients. `tokens` is
  // the number of target tokens in the batch that produced them. Throws
  // NumericalError (leaving parameters untouched) on non-finite gradients.
  StepReport step(double tokens);

  void zero_grad();

  const AdamConfig& config() const { return config_; }
  const std::vector<NamedParam>& params() const { return params_; }
  const OptimizerState& state() const { return state_; }
  void set_state(OptimizerState state);

 private:
  AdamConfig config_;
  std::vector<NamedParam> params_;
  OptimizerState state_;
};

}  // namespace adacred
