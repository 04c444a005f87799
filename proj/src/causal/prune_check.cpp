// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/causal/prune_check.hpp"

#include <cmath>

#include "adacred/causal/structure.hpp"
#include "adacred/errors.hpp"

namespace adacred {

namespace {

double best_return(const LatentMDPSpec& spec, const std::vector<double>& g, double r_prev, std::size_t depth) {
  if (depth == 0) return 0.0;
  double best = -INFINITY;
  for (std::size_t a = 0; a < spec.action_count; ++a) {
    LatentStep s = step_latent(spec, g, a, r_prev, nullptr);
    const double v = s.reward + spec.gamma * best_return(spec, s.g_next, s.reward, depth - 1);
    if (v > best) best = v;
  }
  return best;
}

void check_capacity(const LatentMDPSpec& spec, std::size_t horizon) {
  if (spec.d > kMaxPruneDims) {
    throw CapacityError("exact pruning check supports d <= " + std::to_string(kMaxPruneDims) + ", got " +
                        std::to_string(spec.d));
  }
  if (horizon == 0) throw ParameterError("horizon must be positive");
  double sequences = std::pow(double(spec.action_count), double(horizon));
  if (sequences > double(kMaxPruneSequences)) {
    throw CapacityError("K^H = " + std::to_string(sequences) + " action sequences exceeds the enumeration limit");
  }
}

}  // namespace

std::pair<std::size_t, double> optimal_action(const LatentMDPSpec& spec, const std::vector<double>& g,
                                              std::size_t horizon) {
  check_capacity(spec, horizon);
  std::size_t best_a = 0;
  double best = -INFINITY;
  for (std::size_t a = 0; a < spec.action_count; ++a) {
    LatentStep s = step_latent(spec, g, a, 0.0, nullptr);
    const double v = s.reward + spec.gamma * best_return(spec, s.g_next, s.reward, horizon - 1);
    if (v > best) {
      best = v;
      best_a = a;
    }
  }
  return {best_a, best};
}

PruneReport prune_invariance_check(const LatentMDPSpec& spec, std::size_t horizon, std::size_t samples,
                                   std::uint64_t seed, const std::optional<std::vector<std::size_t>>& pruned) {
  spec.validate();
  check_capacity(spec, horizon);
  PruneReport report;
  std::vector<char> drop(spec.d, 0);
  if (pruned) {
    for (std::size_t i : *pruned) {
      if (i >= spec.d) throw RangeError("pruned dimension " + std::to_string(i) + " out of range");
      drop[i] = 1;
    }
  } else {
    std::vector<char> keep(spec.d, 0);
    for (std::size_t i : minimal_sufficient_set(spec.masks).dims) keep[i] = 1;
    for (std::size_t i = 0; i < spec.d; ++i) drop[i] = !keep[i];
  }
  for (std::size_t i = 0; i < spec.d; ++i) (drop[i] ? report.pruned : report.kept).push_back(i);

  Rng rng(seed);
  std::vector<double> g(spec.d), g_pruned(spec.d);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < spec.d; ++i) {
      g[i] = spec.init_scale * rng.normal();
      g_pruned[i] = drop[i] ? 0.0 : g[i];
    }
    if (optimal_action(spec, g, horizon).first != optimal_action(spec, g_pruned, horizon).first) {
      ++report.disagreements;
    }
  }
  report.states = samples;
  report.fraction = samples ? double(report.disagreements) / double(samples) : 0.0;
  return report;
}

}  // namespace adacred
