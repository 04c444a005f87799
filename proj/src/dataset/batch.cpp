// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/dataset/batch.hpp"

#include <algorithm>

#include "adacred/errors.hpp"

namespace adacred {

std::size_t SequenceBatch::valid_count() const {
  std::size_t n = 0;
  for (std::uint8_t v : valid) n += v;
  return n;
}

SequenceBatch SequenceBatch::empty(std::size_t batch, std::size_t ctx, Shape obs_shape) {
  if (batch == 0 || ctx == 0) throw ParameterError("batch size and context must be positive");
  SequenceBatch out;
  out.batch = batch;
  out.ctx = ctx;
  out.obs_shape = std::move(obs_shape);
  const std::size_t steps = batch * ctx;
  out.observations.assign(steps * out.frame_size(), 0.0f);
  out.prev_actions.assign(steps, 0);
  out.rtg.assign(steps, 0.0f);
  out.targets.assign(steps, 0);
  out.valid.assign(steps, 0);
  out.source.assign(batch, 0);
  out.start.assign(batch, 0);
  return out;
}

void fill_window(SequenceBatch& batch, std::size_t b, const Trajectory& traj, std::size_t end,
                 std::size_t action_count, bool zero_rewards, RewardToken token) {
  if (end >= traj.length()) throw RangeError("window end beyond trajectory");
  if (traj.obs_shape != batch.obs_shape) throw DimensionError("trajectory observation shape differs from batch");
  const std::size_t ctx = batch.ctx;
  const std::size_t frame = batch.frame_size();
  const long first = long(end) - long(ctx) + 1;
  batch.start[b] = first;
  for (std::size_t k = 0; k < ctx; ++k) {
    const std::size_t slot = b * ctx + k;
    const long t = first + long(k);
    float* dst = batch.observations.data() + slot * frame;
    if (t < 0) {
      std::fill(dst, dst + frame, 0.0f);
      batch.prev_actions[slot] = kNoAction;
      batch.rtg[slot] = 0.0f;
      batch.targets[slot] = 0;
      batch.valid[slot] = 0;
      continue;
    }
    const auto f = traj.frame(std::size_t(t));
    std::copy(f.begin(), f.end(), dst);
    const std::size_t a = traj.actions[std::size_t(t)];
    if (a >= action_count) throw RangeError("stored action " + std::to_string(a) + " exceeds action count");
    batch.prev_actions[slot] = t == 0 ? kNoAction : traj.actions[std::size_t(t) - 1];
    float reward_token = 0.0f;
    if (token == RewardToken::kReturnToGo) {
      reward_token = traj.returns_to_go[std::size_t(t)];
    } else if (t > 0) {
      reward_token = traj.rewards[std::size_t(t) - 1];
    }
    batch.rtg[slot] = zero_rewards ? 0.0f : reward_token;
    batch.targets[slot] = a;
    batch.valid[slot] = 1;
  }
}

std::size_t window_count(const OfflineDataset& ds, std::size_t T_ctx) {
  std::size_t n = 0;
  for (const Trajectory& t : ds.trajectories) {
    if (t.length() >= T_ctx) n += t.length();
  }
  return n;
}

SequenceBatch sample_batch(const OfflineDataset& ds, std::size_t B, std::size_t T_ctx, std::size_t action_count,
                           Rng& rng, RewardToken token) {
  if (T_ctx == 0) throw ParameterError("context length must be positive");
  if (ds.trajectories.empty()) throw SamplingError("dataset is empty");
  std::vector<std::size_t> index;
  std::vector<std::size_t> prefix;
  std::size_t total = 0;
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    const std::size_t len = ds.trajectories[i].length();
    if (len < T_ctx) continue;
    total += len;
    index.push_back(i);
    prefix.push_back(total);
  }
  if (total == 0) {
    throw SamplingError("context length " + std::to_string(T_ctx) + " exceeds every trajectory");
  }
  SequenceBatch batch = SequenceBatch::empty(B, T_ctx, ds.trajectories[index.front()].obs_shape);
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t u = rng.below(total);
    const std::size_t k = std::size_t(std::upper_bound(prefix.begin(), prefix.end(), u) - prefix.begin());
    const std::size_t offset = u - (k == 0 ? 0 : prefix[k - 1]);
    batch.source[b] = index[k];
    fill_window(batch, b, ds.trajectories[index[k]], offset, action_count, ds.imitation, token);
  }
  return batch;
}

}  // namespace adacred
