// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Stage 1 trains the network with every mask forced to one and the credit
// heads excluded from the optimizer. Stage 2 trains everything on
// L_action + alpha * L_eff with live Gumbel-sigmoid masks, starting from a
// fresh optimizer state.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "adacred/dataset/dataset_io.hpp"
#include "adacred/envs/env.hpp"
#include "adacred/model/checkpoint.hpp"
#include "adacred/numerics/optim.hpp"
#include "adacred/training/evaluate.hpp"
#include "adacred/training/metrics.hpp"

namespace adacred {

struct TrainConfig {
  int stage = 1;
  std::size_t steps = 1000;
  std::size_t batch = 16;
  double alpha = 1.0;
  double keep_spatial = 0.75;
  double keep_temporal = 0.75;
  AdamConfig adam;
  std::size_t eval_interval = 0;  // 0 disables periodic evaluation
  EvalConfig eval;
  std::size_t checkpoint_interval = 0;  // 0 disables periodic checkpoints
  std::string checkpoint_path;
  std::uint64_t seed = 0;

  void validate() const;
};

class Trainer {
 public:
  Trainer(AdaCredModel& model, const OfflineDataset& dataset, TrainConfig config, const Env* eval_env = nullptr);

  // One optimization step; returns its metrics row (also appended to the log).
  MetricsRow step();
  // Runs until config.steps steps have been taken in total.
  void run(const std::function<void(const MetricsRow&)>& on_row = {});

  std::size_t current_step() const { return step_; }
  const MetricsLog& metrics() const { return metrics_; }
  const Adam& optimizer() const { return *optimizer_; }
  const TrainConfig& config() const { return config_; }
  const std::string& last_checkpoint() const { return last_checkpoint_; }

  // Full training state: parameters, optimizer moments, RNG streams, step
  // counter and metrics so far.
  CheckpointData capture() const;
  void restore(const CheckpointData& data);
  void save(const std::string& path);

 private:
  AdaCredModel& model_;
  const OfflineDataset& dataset_;
  TrainConfig config_;
  const Env* eval_env_;
  std::unique_ptr<Adam> optimizer_;
  Rng data_rng_;
  std::size_t step_ = 0;
  MetricsLog metrics_;
  std::string last_checkpoint_;
};

}  // namespace adacred
