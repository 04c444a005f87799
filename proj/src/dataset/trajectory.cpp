// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/dataset/trajectory.hpp"

#include <cmath>

#include "adacred/errors.hpp"

namespace adacred {

std::span<const float> Trajectory::frame(std::size_t t) const {
  if (t > length()) throw RangeError("frame index " + std::to_string(t) + " beyond trajectory end");
  const std::size_t n = frame_size();
  return std::span<const float>(observations).subspan(t * n, n);
}

double Trajectory::total_return() const {
  double total = 0.0;
  for (float r : rewards) total += r;
  return total;
}

void Trajectory::validate() const {
  const std::size_t t = actions.size();
  if (rewards.size() != t || returns_to_go.size() != t) {
    throw ContractError("trajectory actions/rewards/returns-to-go lengths disagree");
  }
  if (obs_shape.empty() || observations.size() != (t + 1) * frame_size()) {
    throw ContractError("trajectory must hold T+1 observation frames");
  }
}

std::vector<float> compute_return_to_go(std::span<const float> rewards, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ParameterError("discount must lie in [0, 1]");
  std::vector<float> out(rewards.size());
  double running = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    if (!std::isfinite(rewards[i])) throw ParameterError("non-finite reward at index " + std::to_string(i));
    running = double(rewards[i]) + gamma * running;
    out[i] = float(running);
  }
  return out;
}

}  // namespace adacred
