// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "adacred/dataset/trajectory.hpp"
#include "adacred/envs/env.hpp"

namespace adacred {

/// Runs exactly T steps of `policy` from env.reset(seed). The policy RNG is
/// derived from the same seed. Invalid actions raise RangeError naming the
/// step index.
Trajectory rollout(Env& env, Policy& policy, std::size_t T, std::uint64_t seed, double gamma = 1.0);

/// Policies by name: "random", "optimal" (key-door scripted), "greedy"
/// (latent MDP), "mixed" (optimal with 50% random actions), "eps<p>"
/// (e.g. "eps0.1": optimal/greedy with probability 1-p).
std::unique_ptr<Policy> make_policy(const std::string& name, const Env& env);

}  // namespace adacred
