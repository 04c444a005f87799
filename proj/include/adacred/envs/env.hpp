// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "adacred/numerics/rng.hpp"
#include "adacred/numerics/tensor.hpp"

namespace adacred {

struct StepResult {
  std::vector<float> observation;
  double reward = 0.0;
  bool done = false;  // absorbing; further steps return zero reward
};

/// Episodic environment with a discrete action space.
class Env {
 public:
  virtual ~Env() = default;
  virtual std::string id() const = 0;
  virtual std::size_t action_count() const = 0;
  virtual Shape observation_shape() const = 0;
  virtual std::size_t episode_length() const = 0;
  virtual std::vector<float> reset(std::uint64_t seed) = 0;
  virtual StepResult step(std::size_t action) = 0;
  virtual std::unique_ptr<Env> clone() const = 0;
};

/// Behaviour policy. Scripted policies may inspect the concrete environment.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string tag() const = 0;
  virtual std::size_t act(const Env& env, Rng& rng) = 0;
};

class RandomPolicy : public Policy {
 public:
  std::string tag() const override { return "random"; }
  std::size_t act(const Env& env, Rng& rng) override { return rng.below(env.action_count()); }
};

/// Follows `inner` with probability 1-epsilon, otherwise acts uniformly.
class EpsilonPolicy : public Policy {
 public:
  EpsilonPolicy(std::unique_ptr<Policy> inner, double epsilon, std::string tag);
  std::string tag() const override { return tag_; }
  std::size_t act(const Env& env, Rng& rng) override;

 private:
  std::unique_ptr<Policy> inner_;
  double epsilon_;
  std::string tag_;
};

}  // namespace adacred
