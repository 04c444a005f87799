// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Latent MDPs with explicit structural masks:
//   g_{t+1} = phi(W_gg (c_gg) g_t + c_ag * B[:, a_t] + c_rg * w_rg r_{t-1}) + eps_g
//   o_{t+1} = W_o diag(c_go) g_{t+1} + eps_o
//   r_t     = w_r . (c_gr * g_t) + c_ar * u[a_t] + r_bias + eps_r
// phi is the identity (linear mode) or tanh.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adacred/envs/env.hpp"

namespace adacred {

/// Binary structural masks. c_gg is row-major d x d with c_gg[i*d + j] set
/// when g_j at time t feeds g_i at time t+1.
struct StructuralMasks {
  std::size_t d = 0;
  std::vector<std::uint8_t> c_gg;
  std::vector<std::uint8_t> c_ag;
  std::vector<std::uint8_t> c_rg;
  std::vector<std::uint8_t> c_go;
  std::vector<std::uint8_t> c_gr;
  std::uint8_t c_ar = 0;

  static StructuralMasks empty(std::size_t d);
  std::uint8_t gg(std::size_t target, std::size_t source) const { return c_gg[target * d + source]; }
  void validate() const;
  bool operator==(const StructuralMasks&) const = default;
};

enum class LatentMode { kLinear, kTanh };

struct LatentMDPSpec {
  std::size_t d = 0;
  std::size_t action_count = 2;
  std::size_t obs_dim = 0;
  LatentMode mode = LatentMode::kLinear;
  StructuralMasks masks;
  std::vector<double> w_gg;   // d x d
  std::vector<double> b_ag;   // d x action_count
  std::vector<double> w_rg;   // d
  std::vector<double> w_o;    // obs_dim x d
  std::vector<double> w_r;    // d
  std::vector<double> u_ar;   // action_count
  double r_bias = 0.0;
  double sigma_g = 0.1;
  double sigma_o = 0.1;
  double sigma_r = 0.1;
  double init_scale = 1.0;  // std of the initial latent state
  double gamma = 0.99;
  std::size_t horizon = 50;

  // Checks sizes and that weights vanish wherever their mask does.
  void validate() const;
};

struct LatentMDPOptions {
  LatentMode mode = LatentMode::kLinear;
  std::size_t action_count = 2;
  std::size_t obs_dim = 0;  // 0 means d
  double rg_density = 0.0;
  double sigma_g = 0.1;
  double sigma_o = 0.1;
  double sigma_r = 0.1;
  double gamma = 0.99;
  std::size_t horizon = 50;
  double max_spectral_radius = 0.9;
};

/// Samples masks with the given edge density, repairs them (reward reachable;
/// for d >= 3 the last dimension has no outgoing edges) and draws weights.
LatentMDPSpec make_latent_mdp(std::uint64_t seed, std::size_t d, double edge_density,
                              const LatentMDPOptions& options = {});

struct LatentStep {
  std::vector<double> g_next;
  std::vector<double> o_next;
  double reward = 0.0;
};

/// One transition. With rng == nullptr the step is noise-free.
LatentStep step_latent(const LatentMDPSpec& spec, const std::vector<double>& g, std::size_t action,
                       double r_prev, Rng* rng);

/// Noise-free expected immediate reward of taking `action` in `g`.
double latent_reward_mean(const LatentMDPSpec& spec, const std::vector<double>& g, std::size_t action);

std::string latent_spec_to_json(const LatentMDPSpec& spec);
LatentMDPSpec latent_spec_from_json(const std::string& text);

/// Environment wrapper. Observations are o_t, or g_t itself when
/// observe_latent is set.
class LatentMDPEnv : public Env {
 public:
  explicit LatentMDPEnv(LatentMDPSpec spec, bool observe_latent = false);

  std::string id() const override { return "latent"; }
  std::size_t action_count() const override { return spec_.action_count; }
  Shape observation_shape() const override;
  std::size_t episode_length() const override { return spec_.horizon; }
  std::vector<float> reset(std::uint64_t seed) override;
  StepResult step(std::size_t action) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<LatentMDPEnv>(*this); }

  const LatentMDPSpec& spec() const { return spec_; }
  const std::vector<double>& latent() const { return g_; }

 private:
  std::vector<float> observe(const std::vector<double>& o) const;

  LatentMDPSpec spec_;
  bool observe_latent_;
  Rng rng_;
  std::vector<double> g_;
  double r_prev_ = 0.0;
};

/// Greedy on the true expected immediate reward (ties to the lowest id).
class LatentGreedyPolicy : public Policy {
 public:
  std::string tag() const override { return "greedy"; }
  std::size_t act(const Env& env, Rng& rng) override;
};

/// Latent-state rollouts for structure identification.
struct LatentRollouts {
  std::size_t d = 0;
  // One entry per episode; states has T+1 rows of d values.
  std::vector<std::vector<std::vector<double>>> states;
  std::vector<std::vector<std::size_t>> actions;
  std::vector<std::vector<double>> rewards;

  std::size_t transitions() const;
};

/// Collects episodes of `steps` transitions under a uniformly random policy
/// until at least `transitions` transitions are available.
LatentRollouts simulate_latents(const LatentMDPSpec& spec, std::size_t transitions, std::size_t steps,
                                std::uint64_t seed);

}  // namespace adacred
