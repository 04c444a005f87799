// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/training/evaluate.hpp"

#include <cmath>
#include <memory>

#include "adacred/envs/rollout.hpp"
#include "adacred/errors.hpp"

namespace adacred {

std::uint64_t episode_seed(std::uint64_t base_seed, std::size_t s, std::size_t e) {
  return splitmix64(splitmix64(base_seed + s) ^ (0x9E37ULL * (e + 1)));
}

double sample_mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double total = 0.0;
  for (double x : v) total += x;
  return total / double(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = sample_mean(v);
  double sq = 0.0;
  for (double x : v) sq += (x - mu) * (x - mu);
  return std::sqrt(sq / double(v.size() - 1));
}

EvalResult evaluate(AdaCredModel& model, const Env& env, const EvalConfig& config) {
  const ModelConfig& mc = model.config();
  if (env.observation_shape() != mc.obs_shape()) {
    throw ConfigError("environment observation shape " + shape_str(env.observation_shape()) +
                      " does not match the model's " + shape_str(mc.obs_shape()));
  }
  if (env.action_count() != mc.action_count) throw ConfigError("environment and model disagree on action count");
  if (config.seeds == 0 || config.episodes == 0) throw ParameterError("evaluation needs seeds and episodes");
  const std::size_t n = config.seeds * config.episodes;
  const std::size_t horizon = config.max_steps ? config.max_steps : env.episode_length();
  const std::size_t frame = shape_numel(mc.obs_shape());
  const std::size_t ctx = mc.ctx;

  std::vector<std::unique_ptr<Env>> envs;
  std::vector<std::vector<float>> frames(n);  // observation history per episode
  std::vector<std::vector<std::size_t>> prev(n);
  std::vector<std::vector<float>> tokens(n);
  std::vector<double> rtg(n, config.rtg_init);
  std::vector<double> last_reward(n, 0.0);
  EvalResult result;
  result.returns.assign(n, 0.0);
  result.actions.assign(n, {});
  for (std::size_t s = 0; s < config.seeds; ++s) {
    for (std::size_t e = 0; e < config.episodes; ++e) {
      const std::size_t i = s * config.episodes + e;
      envs.push_back(env.clone());
      frames[i] = envs.back()->reset(episode_seed(config.base_seed, s, e));
    }
  }
  for (std::size_t t = 0; t < horizon; ++t) {
    SequenceBatch batch = SequenceBatch::empty(n, ctx, mc.obs_shape());
    for (std::size_t i = 0; i < n; ++i) {
      float token = 0.0f;
      if (!config.zero_reward_tokens) {
        token = float(mc.reward_token == RewardToken::kReturnToGo ? rtg[i] : last_reward[i]);
      }
      tokens[i].push_back(token);
      prev[i].push_back(t == 0 ? kNoAction : result.actions[i].back());
      for (std::size_t k = 0; k < ctx; ++k) {
        const long step = long(t) - long(ctx) + 1 + long(k);
        const std::size_t slot = i * ctx + k;
        if (step < 0) {
          batch.prev_actions[slot] = kNoAction;
          continue;
        }
        const auto st = std::size_t(step);
        std::copy_n(frames[i].begin() + st * frame, frame, batch.observations.begin() + slot * frame);
        batch.prev_actions[slot] = prev[i][st];
        batch.rtg[slot] = tokens[i][st];
        batch.valid[slot] = 1;
      }
    }
    ForwardOptions opts;
    opts.mode = config.mode;
    ForwardResult out = model.forward(batch, opts);
    const auto logits = out.logits.data();
    const std::size_t k_actions = mc.action_count;
    for (std::size_t i = 0; i < n; ++i) {
      const Real* row = logits.data() + (i * ctx + ctx - 1) * k_actions;
      std::size_t best = 0;
      for (std::size_t a = 1; a < k_actions; ++a) {
        if (row[a] > row[best]) best = a;
      }
      StepResult r = envs[i]->step(best);
      result.actions[i].push_back(best);
      result.returns[i] += r.reward;
      rtg[i] -= r.reward;
      last_reward[i] = r.reward;
      frames[i].insert(frames[i].end(), r.observation.begin(), r.observation.end());
    }
  }
  result.mean = sample_mean(result.returns);
  result.std = sample_std(result.returns);
  return result;
}

std::vector<double> policy_returns(const Env& env, Policy& policy, std::size_t episodes, std::uint64_t base_seed) {
  std::vector<double> out;
  std::unique_ptr<Env> e = env.clone();
  for (std::size_t i = 0; i < episodes; ++i) {
    Trajectory traj = rollout(*e, policy, e->episode_length(), episode_seed(base_seed, 0, i));
    out.push_back(traj.total_return());
  }
  return out;
}

}  // namespace adacred
