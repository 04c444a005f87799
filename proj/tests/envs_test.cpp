// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "adacred/causal/structure.hpp"
#include "adacred/envs/gridworld.hpp"
#include "adacred/envs/latent_mdp.hpp"
#include "adacred/envs/rollout.hpp"
#include "adacred/errors.hpp"

namespace adacred {
namespace {

LatentMDPSpec noise_free(LatentMDPSpec spec) {
  spec.sigma_g = spec.sigma_o = spec.sigma_r = 0.0;
  return spec;
}

// Two-dimensional hand-built spec; callers adjust masks and weights.
LatentMDPSpec tiny_spec() {
  LatentMDPSpec s;
  s.d = 2;
  s.obs_dim = 2;
  s.masks = StructuralMasks::empty(2);
  s.w_gg.assign(4, 0.0);
  s.b_ag.assign(4, 0.0);
  s.w_rg.assign(2, 0.0);
  s.w_o = {1, 0, 0, 1};
  s.masks.c_go = {1, 1};
  s.w_r.assign(2, 0.0);
  s.u_ar.assign(2, 0.0);
  s.sigma_g = s.sigma_o = s.sigma_r = 0.0;
  return s;
}

std::vector<double> masked_transition(const LatentMDPSpec& s) {
  std::vector<double> w(s.d * s.d);
  for (std::size_t i = 0; i < s.d * s.d; ++i) w[i] = s.masks.c_gg[i] ? s.w_gg[i] : 0.0;
  return w;
}

TEST(MakeLatentMdp, SameSeedSameSpec) {
  EXPECT_EQ(latent_spec_to_json(make_latent_mdp(11, 4, 0.5)), latent_spec_to_json(make_latent_mdp(11, 4, 0.5)));
  EXPECT_NE(latent_spec_to_json(make_latent_mdp(11, 4, 0.5)), latent_spec_to_json(make_latent_mdp(12, 4, 0.5)));
}

TEST(MakeLatentMdp, RejectsBadArguments) {
  EXPECT_THROW(make_latent_mdp(1, 1, 0.5), ParameterError);
  EXPECT_THROW(make_latent_mdp(1, 3, 0.0), ParameterError);
  EXPECT_THROW(make_latent_mdp(1, 3, 1.5), ParameterError);
  EXPECT_THROW(make_latent_mdp(1, 3, 1.0), ParameterError);
}

TEST(MakeLatentMdp, GeneratedSpecsSatisfyInvariants) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (std::size_t d : {2u, 3u, 4u, 6u}) {
      LatentMDPOptions opt;
      opt.rg_density = 0.3;
      const LatentMDPSpec s = make_latent_mdp(seed, d, 0.5, opt);
      EXPECT_NO_THROW(s.validate());
      for (std::size_t i = 0; i < d * d; ++i) {
        if (!s.masks.c_gg[i]) { EXPECT_EQ(s.w_gg[i], 0.0); }
      }
      for (std::size_t i = 0; i < d; ++i) {
        if (!s.masks.c_gr[i]) { EXPECT_EQ(s.w_r[i], 0.0); }
        if (!s.masks.c_rg[i]) { EXPECT_EQ(s.w_rg[i], 0.0); }
      }
      const std::vector<double> w = masked_transition(s);
      Eigen::MatrixXd m = Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(w.data(), d, d);
      EXPECT_LT(m.eigenvalues().cwiseAbs().maxCoeff(), 1.0) << "seed " << seed << " d " << d;
      EXPECT_FALSE(minimal_sufficient_set(s.masks).degenerate);
      if (d >= 3) {
        // Last dimension has no outgoing edges, hence is non-compact.
        const std::size_t last = d - 1;
        EXPECT_EQ(s.masks.c_go[last], 0);
        EXPECT_EQ(s.masks.c_gr[last], 0);
        for (std::size_t i = 0; i < d; ++i) {
          if (i != last) { EXPECT_EQ(s.masks.gg(i, last), 0); }
        }
        EXPECT_FALSE(compact_partition(s.masks).is_compact(last));
      }
    }
  }
}

TEST(MakeLatentMdp, MinimalSetOfRewardOnlyDimension) {
  StructuralMasks m = StructuralMasks::empty(2);
  m.c_gr = {1, 0};
  EXPECT_EQ(minimal_sufficient_set(m).dims, (std::vector<std::size_t>{0}));
}

// Reverse reachability: a dimension matters for reward when some directed
// latent path ends in a c_gr dimension.
std::vector<std::size_t> reward_reachable(const StructuralMasks& m) {
  std::vector<std::size_t> out;
  for (std::size_t start = 0; start < m.d; ++start) {
    std::vector<bool> seen(m.d, false);
    std::vector<std::size_t> stack{start};
    bool hit = false;
    while (!stack.empty() && !hit) {
      const std::size_t j = stack.back();
      stack.pop_back();
      if (seen[j]) continue;
      seen[j] = true;
      if (m.c_gr[j]) hit = true;
      for (std::size_t i = 0; i < m.d; ++i) {
        if (m.gg(i, j)) stack.push_back(i);
      }
    }
    if (hit) out.push_back(start);
  }
  return out;
}

TEST(MakeLatentMdp, SufficientSetMatchesGraphSearch) {
  for (std::uint64_t seed = 100; seed < 200; ++seed) {
    const LatentMDPSpec s = make_latent_mdp(seed, 2 + seed % 5, 0.4);
    EXPECT_EQ(minimal_sufficient_set(s.masks).dims, reward_reachable(s.masks)) << seed;
  }
}

TEST(StepLatent, ActionDisconnectedStateIgnoresActions) {
  LatentMDPSpec s = noise_free(make_latent_mdp(3, 4, 0.6));
  s.masks.c_ag.assign(s.d, 0);
  s.masks.c_rg.assign(s.d, 0);
  std::fill(s.b_ag.begin(), s.b_ag.end(), 0.0);
  std::fill(s.w_rg.begin(), s.w_rg.end(), 0.0);
  std::vector<double> g1(s.d, 0.5), g2 = g1;
  for (std::size_t t = 0; t < 10; ++t) {
    g1 = step_latent(s, g1, 0, 0.0, nullptr).g_next;
    g2 = step_latent(s, g2, t % 2, 1.0, nullptr).g_next;
    EXPECT_EQ(g1, g2);
  }
}

TEST(StepLatent, RewardDisconnectedIsBias) {
  LatentMDPSpec s = noise_free(make_latent_mdp(4, 3, 0.6));
  s.masks.c_gr.assign(s.d, 0);
  s.masks.c_ar = 0;
  std::fill(s.w_r.begin(), s.w_r.end(), 0.0);
  std::fill(s.u_ar.begin(), s.u_ar.end(), 0.0);
  s.r_bias = 0.25;
  std::vector<double> g(s.d, 1.0);
  Rng rng(1);
  for (std::size_t t = 0; t < 8; ++t) {
    LatentStep st = step_latent(s, g, rng.below(2), 0.0, nullptr);
    EXPECT_EQ(st.reward, 0.25);
    g = st.g_next;
  }
}

TEST(StepLatent, LinearRolloutMatchesMatrixPowers) {
  LatentMDPSpec s = noise_free(make_latent_mdp(21, 4, 0.6));
  s.masks.c_rg.assign(s.d, 0);
  std::fill(s.w_rg.begin(), s.w_rg.end(), 0.0);
  const std::size_t d = s.d;
  const std::vector<double> w = masked_transition(s);
  Eigen::MatrixXd W = Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(w.data(), d, d);
  Eigen::VectorXd g0(d);
  g0 << 0.3, -1.2, 0.7, 2.0;
  const std::vector<std::size_t> actions{1, 0, 0, 1, 1};

  std::vector<double> g(g0.data(), g0.data() + d);
  for (std::size_t a : actions) g = step_latent(s, g, a, 0.0, nullptr).g_next;

  // g_5 = W^5 g_0 + sum_k W^(4-k) b(a_k)
  Eigen::VectorXd expect = g0;
  for (int k = 0; k < 5; ++k) expect = W * expect;
  for (std::size_t k = 0; k < actions.size(); ++k) {
    Eigen::VectorXd b(d);
    for (std::size_t i = 0; i < d; ++i) b[i] = s.masks.c_ag[i] ? s.b_ag[i * s.action_count + actions[k]] : 0.0;
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(d, d);
    for (std::size_t e = 0; e < actions.size() - 1 - k; ++e) p = p * W;
    expect += p * b;
  }
  for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(g[i], expect[i], 1e-6);
}

TEST(StepLatent, MaskedDependenciesAreExactlyZero) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const LatentMDPSpec s = noise_free(make_latent_mdp(seed, 4, 0.5, {.mode = LatentMode::kTanh}));
    std::vector<double> g{0.1, -0.4, 0.8, 0.2};
    const LatentStep base = step_latent(s, g, 1, 0.5, nullptr);
    for (std::size_t j = 0; j < s.d; ++j) {
      std::vector<double> h = g;
      h[j] += 3.0;
      const LatentStep moved = step_latent(s, h, 1, 0.5, nullptr);
      for (std::size_t i = 0; i < s.d; ++i) {
        if (!s.masks.gg(i, j)) { EXPECT_EQ(moved.g_next[i], base.g_next[i]); }
      }
    }
  }
}

TEST(StepLatent, WrongDimensionThrows) {
  EXPECT_THROW(step_latent(tiny_spec(), {1.0}, 0, 0.0, nullptr), DimensionError);
}

TEST(LatentSpecJson, RoundTripIsExact) {
  const LatentMDPSpec s = make_latent_mdp(5, 5, 0.5, {.mode = LatentMode::kTanh, .rg_density = 0.5});
  const LatentMDPSpec back = latent_spec_from_json(latent_spec_to_json(s));
  EXPECT_EQ(back.masks, s.masks);
  EXPECT_EQ(back.w_gg, s.w_gg);
  EXPECT_EQ(back.b_ag, s.b_ag);
  EXPECT_EQ(back.w_o, s.w_o);
  EXPECT_EQ(back.w_r, s.w_r);
  EXPECT_EQ(back.u_ar, s.u_ar);
  EXPECT_EQ(back.mode, s.mode);
  EXPECT_EQ(back.gamma, s.gamma);
}

TEST(LatentSpecJson, MalformedInputThrows) {
  EXPECT_THROW(latent_spec_from_json("{\"d\": 2}"), FormatError);
}

// ------------------------------------------------------------- gridworld

GridWorldSpec quiet_grid() {
  GridWorldSpec g;
  g.distractors = false;
  return g;
}

TEST(RenderGridworld, DeterministicWithoutDistractors) {
  GridState st;
  st.agent_x = 2;
  st.agent_y = 1;
  st.distractor_seed = 5;
  const auto a = render_gridworld(quiet_grid(), st);
  st.distractor_seed = 99;
  st.t = 7;
  EXPECT_EQ(a, render_gridworld(quiet_grid(), st));
}

TEST(RenderGridworld, AtariSizedFrame) {
  GridWorldSpec g;
  g.cols = 21;
  g.rows = 20;
  g.distractor_rows = 1;
  g.cell_px = 4;
  g.door_x = 20;
  g.door_y = 19;
  GridWorld env(g);
  EXPECT_EQ(env.observation_shape(), (Shape{1, 84, 84}));
  EXPECT_EQ(env.reset(3).size(), 84u * 84u);
}

TEST(RenderGridworld, DistractorSeedOnlyTouchesDistractorRows) {
  GridWorldSpec g;
  GridState a;
  a.agent_x = 3;
  a.agent_y = 2;
  a.distractor_seed = 1;
  GridState b = a;
  b.distractor_seed = 2;
  const auto fa = render_gridworld(g, a), fb = render_gridworld(g, b);
  const auto [first, last] = distractor_pixel_rows(g);
  bool any_diff = false;
  for (std::size_t y = 0; y < g.height(); ++y) {
    for (std::size_t x = 0; x < g.width(); ++x) {
      const bool differ = fa[y * g.width() + x] != fb[y * g.width() + x];
      if (y < first || y >= last) { EXPECT_FALSE(differ) << y << "," << x; }
      any_diff = any_diff || differ;
    }
  }
  EXPECT_TRUE(any_diff);
}

TEST(RenderGridworld, ObjectsOccupyDisjointBlocks) {
  GridWorldSpec g = quiet_grid();
  GridState st;
  st.agent_x = 2;
  st.agent_y = 2;
  const auto f = render_gridworld(g, st);
  auto cell = [&](std::size_t cx, std::size_t cy) { return f[cy * g.cell_px * g.width() + cx * g.cell_px]; };
  EXPECT_EQ(cell(2, 2), g.agent_value);
  EXPECT_EQ(cell(g.key_x, g.key_y), g.key_value);
  EXPECT_EQ(cell(g.door_x, g.door_y), g.door_value);
}

TEST(RenderGridworld, OutOfBoundsIsStateError) {
  GridState st;
  st.agent_x = 5;
  EXPECT_THROW(render_gridworld(GridWorldSpec{}, st), StateError);
}

TEST(GridWorldSpecTest, DelayLongerThanKeyDoorDistanceRejected) {
  GridWorldSpec g;
  g.delay = 8;
  EXPECT_THROW(g.validate(), ParameterError);
}

TEST(Rollout, RandomPolicyRewardsOnlyAtDoor) {
  GridWorld env(GridWorldSpec{});
  RandomPolicy pi;
  int doors = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Trajectory tr = rollout(env, pi, 30, seed);
    EXPECT_EQ(tr.length(), 30u);
    EXPECT_EQ(tr.observations.size(), 31 * tr.frame_size());
    for (std::size_t t = 0; t < tr.length(); ++t) {
      if (int(t) == tr.meta.door_step) {
        EXPECT_EQ(tr.rewards[t], 1.0f);
        EXPECT_GE(tr.meta.door_step - tr.meta.key_step, 1);
      } else {
        EXPECT_EQ(tr.rewards[t], 0.0f);
      }
    }
    doors += tr.meta.door_step >= 0;
  }
  EXPECT_GT(doors, 0);
}

TEST(Rollout, KeyPrecedesDoorByAtLeastDelay) {
  GridWorld env(GridWorldSpec{});
  auto pi = make_policy("optimal", env);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Trajectory tr = rollout(env, *pi, 30, seed);
    EXPECT_GE(tr.meta.door_step - tr.meta.key_step, int(env.spec().delay));
  }
}

TEST(Rollout, OptimalPolicyAlwaysReturnsOne) {
  GridWorld env(GridWorldSpec{});
  auto pi = make_policy("optimal", env);
  for (std::uint64_t seed = 0; seed < 100; ++seed) EXPECT_EQ(rollout(env, *pi, 30, seed).total_return(), 1.0);
}

TEST(Rollout, SameSeedSameTrajectory) {
  GridWorld env(GridWorldSpec{});
  auto pi = make_policy("mixed", env);
  const Trajectory a = rollout(env, *pi, 30, 9), b = rollout(env, *pi, 30, 9);
  EXPECT_EQ(a.observations, b.observations);
  EXPECT_EQ(a.actions, b.actions);
}

class BadPolicy : public Policy {
 public:
  std::string tag() const override { return "bad"; }
  std::size_t act(const Env&, Rng&) override { return calls_++ == 3 ? 9 : 0; }

 private:
  int calls_ = 0;
};

TEST(Rollout, InvalidActionNamesStep) {
  GridWorld env(GridWorldSpec{});
  BadPolicy pi;
  try {
    rollout(env, pi, 10, 1);
    FAIL();
  } catch (const RangeError& e) {
    EXPECT_NE(std::string(e.what()).find("step 3"), std::string::npos) << e.what();
  }
}

TEST(Rollout, EpsilonGreedyBeatsRandomOnLatentMdp) {
  LatentMDPEnv env(make_latent_mdp(8, 4, 0.5), true);
  auto greedy = make_policy("eps0.1", env);
  RandomPolicy random;
  double g = 0, r = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    g += rollout(env, *greedy, env.episode_length(), seed).total_return() / 100;
    r += rollout(env, random, env.episode_length(), seed).total_return() / 100;
  }
  EXPECT_GT(g, r);
}

TEST(Rollout, UnknownPolicyIsConfigError) {
  GridWorld env(GridWorldSpec{});
  EXPECT_THROW(make_policy("eps-x", env), ConfigError);
  EXPECT_THROW(make_policy("clever", env), ConfigError);
}

// Distractor pixels carry no reward information: permutation test on the
// correlation between distractor mean intensity and reward.
TEST(GridWorldIndependence, DistractorsUncorrelatedWithReward) {
  GridWorld env(GridWorldSpec{});
  auto pi = make_policy("mixed", env);
  const auto [first, last] = distractor_pixel_rows(env.spec());
  const std::size_t w = env.spec().width();
  std::vector<double> x, y;
  for (std::uint64_t seed = 0; x.size() < 1000; ++seed) {
    Trajectory tr = rollout(env, *pi, 30, seed);
    for (std::size_t t = 0; t < tr.length() && x.size() < 1000; ++t) {
      auto f = tr.frame(t + 1);
      double m = 0;
      for (std::size_t i = first * w; i < last * w; ++i) m += f[i];
      x.push_back(m);
      y.push_back(tr.rewards[t]);
    }
  }
  auto corr = [](const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / b.size();
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      sab += (a[i] - ma) * (b[i] - mb);
      saa += (a[i] - ma) * (a[i] - ma);
      sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
  };
  ASSERT_GT(std::count(y.begin(), y.end(), 1.0), 0);
  const double observed = std::abs(corr(x, y));
  Rng rng(77);
  std::size_t extreme = 0;
  const std::size_t perms = 1000;
  std::vector<double> shuffled = y;
  for (std::size_t p = 0; p < perms; ++p) {
    for (std::size_t i = shuffled.size() - 1; i > 0; --i) std::swap(shuffled[i], shuffled[rng.below(i + 1)]);
    extreme += std::abs(corr(x, shuffled)) >= observed;
  }
  EXPECT_GT(double(extreme + 1) / double(perms + 1), 0.1);
}

}  // namespace
}  // namespace adacred
