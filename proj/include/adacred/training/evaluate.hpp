// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "adacred/envs/env.hpp"
#include "adacred/model/adacred_model.hpp"

namespace adacred {

struct EvalConfig {
  std::size_t seeds = 10;
  std::size_t episodes = 10;  // per seed
  std::uint64_t base_seed = 1000;
  double rtg_init = 1.0;
  bool zero_reward_tokens = false;  // imitation-mode conditioning
  MaskMode mode = MaskMode::kDeterministic;
  std::size_t max_steps = 0;  // 0: the environment's episode length
};

struct EvalResult {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over episodes
  std::vector<double> returns;
  std::vector<std::vector<std::size_t>> actions;  // per episode
};

/// Seed of episode `e` under evaluation seed `s`.
std::uint64_t episode_seed(std::uint64_t base_seed, std::size_t s, std::size_t e);

/// Greedy autoregressive control of seeds x episodes environment copies in
/// lockstep. Each step feeds the last T_ctx steps (left-padded) with the
/// return-to-go decremented by observed rewards.
EvalResult evaluate(AdaCredModel& model, const Env& env, const EvalConfig& config);

/// Returns of `episodes` rollouts of a policy, one env seed per episode.
std::vector<double> policy_returns(const Env& env, Policy& policy, std::size_t episodes, std::uint64_t base_seed);

double sample_mean(const std::vector<double>& v);
double sample_std(const std::vector<double>& v);

}  // namespace adacred
