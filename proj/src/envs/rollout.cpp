// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/envs/rollout.hpp"

#include "adacred/envs/gridworld.hpp"
#include "adacred/envs/latent_mdp.hpp"
#include "adacred/errors.hpp"

namespace adacred {

EpsilonPolicy::EpsilonPolicy(std::unique_ptr<Policy> inner, double epsilon, std::string tag)
    : inner_(std::move(inner)), epsilon_(epsilon), tag_(std::move(tag)) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ParameterError("epsilon must lie in [0, 1]");
}

std::size_t EpsilonPolicy::act(const Env& env, Rng& rng) {
  // Both branches consume the same draws so traces stay aligned across epsilon.
  const double u = rng.uniform();
  const std::size_t random_action = rng.below(env.action_count());
  const std::size_t greedy = inner_->act(env, rng);
  return u < epsilon_ ? random_action : greedy;
}

Trajectory rollout(Env& env, Policy& policy, std::size_t T, std::uint64_t seed, double gamma) {
  if (T == 0) throw ParameterError("rollout length must be positive");
  Trajectory traj;
  traj.obs_shape = env.observation_shape();
  traj.meta.env_id = env.id();
  traj.meta.seed = seed;
  traj.meta.policy = policy.tag();
  Rng rng(splitmix64(seed ^ 0x5eedULL));
  std::vector<float> obs = env.reset(seed);
  traj.observations = obs;
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t a = policy.act(env, rng);
    if (a >= env.action_count()) {
      throw RangeError("policy '" + policy.tag() + "' emitted invalid action " + std::to_string(a) + " at step " +
                       std::to_string(t));
    }
    StepResult r = env.step(a);
    traj.actions.push_back(std::uint16_t(a));
    traj.rewards.push_back(float(r.reward));
    traj.observations.insert(traj.observations.end(), r.observation.begin(), r.observation.end());
  }
  if (const auto* grid = dynamic_cast<const GridWorld*>(&env)) {
    traj.meta.key_step = grid->key_step();
    traj.meta.door_step = grid->door_step();
  }
  traj.returns_to_go = compute_return_to_go(traj.rewards, gamma);
  traj.validate();
  return traj;
}

namespace {

std::unique_ptr<Policy> expert_for(const Env& env) {
  if (dynamic_cast<const GridWorld*>(&env)) return std::make_unique<KeyDoorOptimalPolicy>();
  if (dynamic_cast<const LatentMDPEnv*>(&env)) return std::make_unique<LatentGreedyPolicy>();
  throw ConfigError("no scripted expert for environment '" + env.id() + "'");
}

}  // namespace

std::unique_ptr<Policy> make_policy(const std::string& name, const Env& env) {
  if (name == "random") return std::make_unique<RandomPolicy>();
  if (name == "optimal" || name == "greedy") return expert_for(env);
  if (name == "mixed") return std::make_unique<EpsilonPolicy>(expert_for(env), 0.5, "mixed");
  if (name.rfind("eps", 0) == 0) {
    double eps = 0;
    try {
      std::size_t used = 0;
      eps = std::stod(name.substr(3), &used);
      if (used != name.size() - 3) throw std::invalid_argument(name);
    } catch (const std::exception&) {
      throw ConfigError("malformed epsilon policy '" + name + "'");
    }
    return std::make_unique<EpsilonPolicy>(expert_for(env), eps, name);
  }
  throw ConfigError("unknown policy '" + name + "'");
}

}  // namespace adacred
