// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "adacred/envs/gridworld.hpp"
#include "adacred/envs/rollout.hpp"
#include "adacred/errors.hpp"
#include "adacred/model/checkpoint.hpp"
#include "adacred/numerics/ops.hpp"
#include "adacred/training/evaluate.hpp"
#include "adacred/training/losses.hpp"
#include "adacred/training/trainer.hpp"

namespace adacred {
namespace {

ModelConfig small_config(std::size_t ctx = 4) {
  ModelConfig c;
  c.ctx = ctx;
  c.layers = 2;
  return c;
}

OfflineDataset keydoor_dataset(const std::string& policy, std::size_t episodes, std::uint64_t seed0 = 100) {
  GridWorld env(GridWorldSpec{});
  auto pi = make_policy(policy, env);
  OfflineDataset ds;
  for (std::size_t e = 0; e < episodes; ++e) ds.trajectories.push_back(rollout(env, *pi, 30, seed0 + e));
  ds.norm = compute_normalization(ds.trajectories);
  return ds;
}

TrainConfig fast_config(int stage, std::size_t steps) {
  TrainConfig t;
  t.stage = stage;
  t.steps = steps;
  t.batch = 16;
  t.adam.lr = 1e-3;
  t.adam.warmup_tokens = 640;
  t.adam.final_tokens = double(steps) * 16 * 4;
  t.seed = 3;
  return t;
}

double credit_checksum(const AdaCredModel& m) {
  double s = 0;
  for (std::size_t i = 0; i < m.store().params().size(); ++i) {
    if (!m.store().is_credit(i)) continue;
    for (Real v : m.store().params()[i].tensor.data()) s += std::abs(double(v)) * double(i + 1);
  }
  return s;
}

// ------------------------------------------------------------------ losses

TEST(ActionLoss, ConfidentCorrectLogitsGiveNearZero) {
  Tensor logits = Tensor::from({2, 3}, {50, 0, 0, 0, 0, 50});
  EXPECT_LT(action_loss(logits, {0, 2}, {1, 1}).item(), 1e-6);
}

TEST(ActionLoss, UniformLogitsGiveLogK) {
  EXPECT_NEAR(action_loss(Tensor::zeros({5, 4}), {0, 1, 2, 3, 0}, {1, 1, 1, 1, 1}).item(), std::log(4.0), 1e-6);
}

TEST(ActionLoss, MatchesScalarLoopOracle) {
  Rng rng(1);
  const std::size_t n = 20, k = 4;
  std::vector<Real> v(n * k);
  for (Real& x : v) x = Real(rng.uniform(-3, 3));
  std::vector<std::size_t> targets(n);
  std::vector<std::uint8_t> valid(n);
  for (std::size_t i = 0; i < n; ++i) {
    targets[i] = rng.below(k);
    valid[i] = i % 5 != 0;
  }
  double total = 0, count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!valid[i]) continue;
    double mx = -1e30, z = 0;
    for (std::size_t j = 0; j < k; ++j) mx = std::max(mx, double(v[i * k + j]));
    for (std::size_t j = 0; j < k; ++j) z += std::exp(double(v[i * k + j]) - mx);
    total += -(double(v[i * k + targets[i]]) - mx - std::log(z));
    ++count;
  }
  EXPECT_NEAR(action_loss(Tensor::from({n, k}, v), targets, valid).item(), total / count, 1e-6);
}

TEST(ActionLoss, AllPaddedIsContractError) {
  EXPECT_THROW(action_loss(Tensor::zeros({2, 3}), {0, 1}, {0, 0}), ContractError);
}

ActivationStats stat(double activ, double target, double total, double omega) {
  return {Tensor::scalar(Real(activ)), total, target, omega};
}

TEST(EfficiencyLoss, ExactTargetIsZero) { EXPECT_EQ(efficiency_loss({stat(75, 75, 100, 1)}).item(), 0.0); }

TEST(EfficiencyLoss, QuarterOverTarget) {
  EXPECT_NEAR(efficiency_loss({stat(100, 75, 100, 1)}).item(), 0.0625, 1e-7);
}

TEST(EfficiencyLoss, DoublingOmegaQuadruples) {
  const double one = efficiency_loss({stat(90, 75, 100, 0.5)}).item();
  const double two = efficiency_loss({stat(90, 75, 100, 1.0)}).item();
  EXPECT_NEAR(two, 4 * one, 1e-7);
}

TEST(EfficiencyLoss, MeanOverLayers) {
  EXPECT_NEAR(efficiency_loss({stat(100, 75, 100, 1), stat(75, 75, 100, 1)}).item(), 0.0625 / 2, 1e-7);
}

TEST(ActivationStatsTest, OmegaIsRelativeEmbedDim) {
  ModelConfig c = small_config();
  c.spatial_dim = 32;
  c.temporal_dim = 16;
  AdaCredModel m(c, 1);
  OfflineDataset ds = keydoor_dataset("optimal", 2);
  Rng rng(2);
  SequenceBatch b = sample_batch(ds, 4, c.ctx, 4, rng);
  ForwardResult r = m.forward(b, {});
  auto stats = activation_stats(r.masks, 0.5, 0.25);
  ASSERT_EQ(stats.size(), 4u);
  EXPECT_EQ(stats[0].omega, 1.0);
  EXPECT_EQ(stats[1].omega, 0.5);
  EXPECT_EQ(stats[0].target, 0.5 * stats[0].total);
  EXPECT_EQ(stats[1].target, 0.25 * stats[1].total);
  for (const auto& s : stats) {
    EXPECT_GE(s.activ.item(), 0.0);
    EXPECT_LE(s.activ.item(), s.total);
  }
}

// ----------------------------------------------------------------- trainer

TEST(TrainConfigTest, RejectsInvalidValues) {
  TrainConfig t;
  t.alpha = -1;
  EXPECT_THROW(t.validate(), ConfigError);
  t = TrainConfig{};
  t.keep_spatial = 0;
  EXPECT_THROW(t.validate(), ConfigError);
  t = TrainConfig{};
  t.stage = 3;
  EXPECT_THROW(t.validate(), ConfigError);
  t = TrainConfig{};
  t.checkpoint_interval = 5;
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(Stage1, LearnsScriptedPolicyAndFreezesCreditHeads) {
  const OfflineDataset ds = keydoor_dataset("optimal", 40);
  AdaCredModel m(small_config(), 4);
  m.set_normalization(ds.norm);
  const double before = credit_checksum(m);
  Trainer tr(m, ds, fast_config(1, 200));
  const MetricsRow first = tr.step();
  EXPECT_NEAR(first.l_action, std::log(4.0), 0.1);
  tr.run();
  EXPECT_EQ(credit_checksum(m), before);

  Rng rng(5);
  SequenceBatch b = sample_batch(ds, 256, 4, 4, rng);
  ForwardResult r = m.forward(b, {.mode = MaskMode::kForceOnes});
  double hit = 0, total = 0;
  for (std::size_t i = 0; i < b.batch * b.ctx; ++i) {
    if (!b.valid[i]) continue;
    std::size_t best = 0;
    for (std::size_t k = 1; k < 4; ++k) {
      if (r.logits.at(i * 4 + k) > r.logits.at(i * 4 + best)) best = k;
    }
    hit += best == b.targets[i];
    ++total;
  }
  EXPECT_GT(hit / total, 0.9);
}

TEST(Resume, ReproducesUninterruptedRun) {
  const OfflineDataset ds = keydoor_dataset("mixed", 10);
  AdaCredModel full(small_config(), 6);
  Trainer a(full, ds, fast_config(2, 8));
  a.run();

  AdaCredModel half(small_config(), 6);
  Trainer b(half, ds, fast_config(2, 8));
  for (int i = 0; i < 4; ++i) b.step();
  const auto bytes = encode_checkpoint(b.capture());

  CheckpointData data = decode_checkpoint(bytes);
  auto resumed = restore_model(data);
  Trainer c(*resumed, ds, fast_config(2, 8));
  c.restore(data);
  c.run();

  EXPECT_EQ(c.metrics().to_csv(), a.metrics().to_csv());
  for (std::size_t i = 0; i < full.store().params().size(); ++i) {
    const auto x = full.store().params()[i].tensor.data(), y = resumed->store().params()[i].tensor.data();
    ASSERT_TRUE(std::equal(x.begin(), x.end(), y.begin())) << full.store().params()[i].name;
  }
}

TEST(Resume, RejectsStageMismatch) {
  const OfflineDataset ds = keydoor_dataset("mixed", 4);
  AdaCredModel m(small_config(), 6);
  Trainer a(m, ds, fast_config(1, 2));
  a.step();
  Trainer b(m, ds, fast_config(2, 2));
  EXPECT_THROW(b.restore(a.capture()), Error);
}

TEST(Stage1, NonFiniteLossAbortsNamingCheckpoint) {
  const OfflineDataset ds = keydoor_dataset("mixed", 4);
  AdaCredModel m(small_config(), 7);
  const auto path = (std::filesystem::temp_directory_path() / "adacred_nan.adck").string();
  Trainer tr(m, ds, fast_config(1, 5));
  tr.step();
  tr.save(path);
  m.store().get("head.w").node()->value[0] = std::nanf("");
  try {
    tr.step();
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find(path), std::string::npos) << e.what();
  }
  std::filesystem::remove(path);
}

TEST(Stage2, TotalLossDecomposesExactly) {
  const OfflineDataset ds = keydoor_dataset("mixed", 10);
  AdaCredModel m(small_config(), 8);
  TrainConfig cfg = fast_config(2, 10);
  cfg.alpha = 3.5;
  Trainer tr(m, ds, cfg);
  tr.run();
  for (const MetricsRow& r : tr.metrics().rows()) {
    EXPECT_EQ(r.l_total, r.l_action + 3.5 * r.l_eff);
    ASSERT_EQ(r.keep.size(), 4u);
  }
}

TEST(Stage2, UpdatesCreditHeads) {
  const OfflineDataset ds = keydoor_dataset("mixed", 10);
  AdaCredModel m(small_config(), 9);
  const double before = credit_checksum(m);
  Trainer tr(m, ds, fast_config(2, 5));
  tr.run();
  EXPECT_NE(credit_checksum(m), before);
}

TEST(Stage2, FullKeepTargetDrivesMasksToOnes) {
  const OfflineDataset ds = keydoor_dataset("mixed", 20);
  AdaCredModel m(small_config(), 10);
  m.set_normalization(ds.norm);
  TrainConfig cfg = fast_config(2, 300);
  cfg.alpha = 10;
  cfg.keep_spatial = cfg.keep_temporal = 1.0;
  Trainer tr(m, ds, cfg);
  tr.run();
  const auto rows = tr.metrics().rows();
  auto window_keep = [&](std::size_t first) {
    double k = 0;
    for (std::size_t i = first; i < first + 20; ++i) {
      for (double v : rows[i].keep) k += v / (20.0 * 4);
    }
    return k;
  };
  const double early = window_keep(0), late = window_keep(rows.size() - 20);
  EXPECT_GT(late, early);
  EXPECT_GT(late, 0.95);
}

TEST(Imitation, TrainsOnZeroedRewards) {
  OfflineDataset ds = keydoor_dataset("optimal", 20);
  ds.set_imitation();
  AdaCredModel m(small_config(), 11);
  m.set_normalization(ds.norm);
  Trainer tr(m, ds, fast_config(1, 60));
  tr.run();
  const auto rows = tr.metrics().rows();
  EXPECT_LT(rows.back().l_action, rows.front().l_action);
}

TEST(Metrics, CsvHasFixedColumns) {
  MetricsLog log(2);
  MetricsRow r;
  r.step = 1;
  r.keep = {1, 0.5, 0.75, 1};
  r.eval_mean = 0.5;
  r.eval_std = 0.0;
  log.append(r);
  const std::string csv = log.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "step,l_total,l_action,l_eff,keep_spatial_0,keep_temporal_0,keep_spatial_1,keep_temporal_1,"
            "eval_return_mean,eval_return_std");
  log.clear();
  EXPECT_EQ(log.size(), 0u);
}

// -------------------------------------------------------------- evaluation

TEST(Evaluate, SameSeedsSameTraces) {
  GridWorld env(GridWorldSpec{});
  AdaCredModel m(small_config(), 12);
  EvalConfig cfg;
  cfg.seeds = 2;
  cfg.episodes = 3;
  const EvalResult a = evaluate(m, env, cfg), b = evaluate(m, env, cfg);
  EXPECT_EQ(a.actions, b.actions);
  EXPECT_EQ(a.returns, b.returns);
  EXPECT_EQ(a.returns.size(), 6u);
}

TEST(Evaluate, EpisodeSeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (std::size_t s = 0; s < 10; ++s) {
    for (std::size_t e = 0; e < 10; ++e) seen.insert(episode_seed(1000, s, e));
  }
  EXPECT_EQ(seen.size(), 100u);
}

TEST(Evaluate, ScriptedPolicyCheckpointIsOptimal) {
  const OfflineDataset ds = keydoor_dataset("optimal", 60);
  AdaCredModel m(small_config(), 13);
  m.set_normalization(ds.norm);
  Trainer tr(m, ds, fast_config(1, 400));
  tr.run();
  GridWorld env(GridWorldSpec{});
  EvalConfig cfg;
  cfg.mode = MaskMode::kForceOnes;
  cfg.rtg_init = ds.max_return();
  const EvalResult r = evaluate(m, env, cfg);
  EXPECT_EQ(r.mean, 1.0);
  EXPECT_EQ(r.std, 0.0);
}

TEST(Evaluate, UntrainedModelNearRandomBaseline) {
  GridWorld env(GridWorldSpec{});
  RandomPolicy random;
  const std::vector<double> base = policy_returns(env, random, 100, 5000);
  AdaCredModel m(small_config(), 14);
  EvalConfig cfg;
  cfg.seeds = 10;
  cfg.episodes = 10;
  const EvalResult r = evaluate(m, env, cfg);
  const double se = std::sqrt(std::pow(sample_std(base), 2) / 100 + std::pow(r.std, 2) / 100);
  EXPECT_LE(std::abs(r.mean - sample_mean(base)), 3 * se + 1e-12)
      << "model " << r.mean << " random " << sample_mean(base);
}

}  // namespace
}  // namespace adacred
