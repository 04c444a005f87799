// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "adacred/dataset/dataset_io.hpp"
#include "adacred/numerics/rng.hpp"

namespace adacred {

/// Previous-action id of the first step of an episode (and of padding).
inline constexpr std::size_t kNoAction = static_cast<std::size_t>(-1);

/// What the per-step reward token carries.
enum class RewardToken { kReturnToGo, kPreviousReward };

/// B windows of T_ctx steps. Per step: previous action (kNoAction when
/// there is none), reward token, observation and the
/// target action. Windows are left-padded; padded steps have valid == 0.
struct SequenceBatch {
  std::size_t batch = 0;
  std::size_t ctx = 0;
  Shape obs_shape;
  std::vector<float> observations;  // batch * ctx * frame
  std::vector<std::size_t> prev_actions;
  std::vector<float> rtg;  // reward token values
  std::vector<std::size_t> targets;
  std::vector<std::uint8_t> valid;
  // Source of each window: trajectory index and first step (may be negative
  // when padded).
  std::vector<std::size_t> source;
  std::vector<long> start;

  std::size_t frame_size() const { return shape_numel(obs_shape); }
  std::size_t valid_count() const;
  static SequenceBatch empty(std::size_t batch, std::size_t ctx, Shape obs_shape);
};

/// Fills slot `b` of `batch` with the window of `traj` covering steps
/// [end - ctx + 1, end].
void fill_window(SequenceBatch& batch, std::size_t b, const Trajectory& traj, std::size_t end,
                 std::size_t action_count, bool zero_rewards, RewardToken token = RewardToken::kReturnToGo);

/// Uniform over (trajectory, window end) pairs of every trajectory with at
/// least T_ctx steps. Throws SamplingError when no trajectory qualifies.
SequenceBatch sample_batch(const OfflineDataset& ds, std::size_t B, std::size_t T_ctx, std::size_t action_count,
                           Rng& rng, RewardToken token = RewardToken::kReturnToGo);

/// Number of windows sample_batch can draw from.
std::size_t window_count(const OfflineDataset& ds, std::size_t T_ctx);

}  // namespace adacred
