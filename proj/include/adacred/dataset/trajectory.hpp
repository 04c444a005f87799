// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adacred/numerics/tensor.hpp"

namespace adacred {

struct TrajectoryMeta {
  std::string env_id;
  std::uint64_t seed = 0;
  std::string policy;
  // Gridworld event log; -1 when the event never happened.
  std::int32_t key_step = -1;
  std::int32_t door_step = -1;
};

/// One episode: T+1 observation frames, T actions/rewards and the
/// corresponding return-to-go.
struct Trajectory {
  Shape obs_shape;
  std::vector<float> observations;  // (T+1) * numel(obs_shape), row-major
  std::vector<std::uint16_t> actions;
  std::vector<float> rewards;
  std::vector<float> returns_to_go;
  TrajectoryMeta meta;

  std::size_t length() const { return actions.size(); }
  std::size_t frame_size() const { return shape_numel(obs_shape); }
  std::span<const float> frame(std::size_t t) const;
  double total_return() const;

  // Throws ContractError when lengths disagree.
  void validate() const;
};

/// Suffix discounted sums: out[t] = sum_{t' >= t} gamma^(t'-t) r[t'].
/// gamma must lie in [0, 1].
std::vector<float> compute_return_to_go(std::span<const float> rewards, double gamma);

}  // namespace adacred
