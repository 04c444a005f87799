// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Exact pruning-invariance check. Optimal first actions are found by
// enumerating all K^H action sequences under noise-free dynamics, once from
// the full latent state and once with the pruned dimensions zeroed.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "adacred/envs/latent_mdp.hpp"

namespace adacred {

struct PruneReport {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> pruned;
  std::size_t states = 0;
  std::size_t disagreements = 0;
  double fraction = 0.0;
};

inline constexpr std::size_t kMaxPruneDims = 6;
inline constexpr std::size_t kMaxPruneSequences = 1u << 20;

/// Best first action (ties to the lowest id) and its return.
std::pair<std::size_t, double> optimal_action(const LatentMDPSpec& spec, const std::vector<double>& g,
                                              std::size_t horizon);

/// Samples `samples` states g ~ N(0, init_scale^2) and compares the argmax
/// actions. By default the pruned set is the complement of the minimal
/// sufficient set.
PruneReport prune_invariance_check(const LatentMDPSpec& spec, std::size_t horizon, std::size_t samples,
                                   std::uint64_t seed,
                                   const std::optional<std::vector<std::size_t>>& pruned = std::nullopt);

}  // namespace adacred
