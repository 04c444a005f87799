// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <map>

#include "adacred/dataset/batch.hpp"
#include "adacred/dataset/dataset_io.hpp"
#include "adacred/envs/gridworld.hpp"
#include "adacred/envs/rollout.hpp"
#include "adacred/errors.hpp"

namespace adacred {
namespace {

Trajectory synthetic(std::size_t T, std::uint64_t seed, double gamma = 1.0) {
  Rng rng(seed);
  Trajectory tr;
  tr.obs_shape = {1, 2, 3};
  for (std::size_t i = 0; i < (T + 1) * 6; ++i) tr.observations.push_back(float(rng.normal()));
  for (std::size_t t = 0; t < T; ++t) {
    tr.actions.push_back(std::uint16_t(rng.below(4)));
    tr.rewards.push_back(rng.bernoulli(0.3) ? float(rng.uniform(-1, 2)) : 0.0f);
  }
  tr.returns_to_go = compute_return_to_go(tr.rewards, gamma);
  tr.meta = {"synthetic", seed, "random", -1, -1};
  return tr;
}

OfflineDataset synthetic_dataset(std::vector<std::size_t> lengths) {
  OfflineDataset ds;
  for (std::size_t i = 0; i < lengths.size(); ++i) ds.trajectories.push_back(synthetic(lengths[i], 10 + i));
  return ds;
}

TEST(ReturnToGo, SmallExample) {
  const std::vector<float> r{1, 0, 2};
  EXPECT_EQ(compute_return_to_go(r, 1.0), (std::vector<float>{3, 2, 2}));
}

TEST(ReturnToGo, ZeroRewards) {
  const std::vector<float> r(7, 0.0f);
  EXPECT_EQ(compute_return_to_go(r, 0.9), r);
}

TEST(ReturnToGo, MatchesQuadraticOracle) {
  Rng rng(3);
  std::vector<float> r(20);
  for (float& v : r) v = float(rng.uniform(-2, 2));
  const auto rtg = compute_return_to_go(r, 0.99);
  for (std::size_t t = 0; t < r.size(); ++t) {
    double s = 0;
    for (std::size_t k = t; k < r.size(); ++k) s += std::pow(0.99, double(k - t)) * r[k];
    EXPECT_NEAR(rtg[t], s, 1e-5);
  }
}

TEST(ReturnToGo, DiscountOutsideUnitIntervalThrows) {
  const std::vector<float> r{1};
  EXPECT_THROW(compute_return_to_go(r, 1.5), ParameterError);
  EXPECT_THROW(compute_return_to_go(r, -0.1), ParameterError);
}

TEST(TrajectoryTest, FirstReturnToGoIsEpisodeReturn) {
  const Trajectory tr = synthetic(15, 4);
  EXPECT_FLOAT_EQ(tr.returns_to_go.front(), float(tr.total_return()));
}

TEST(TrajectoryTest, LengthMismatchIsContractError) {
  Trajectory tr = synthetic(5, 1);
  tr.rewards.pop_back();
  EXPECT_THROW(tr.validate(), ContractError);
}

void expect_same(const OfflineDataset& a, const OfflineDataset& b) {
  ASSERT_EQ(a.trajectories.size(), b.trajectories.size());
  EXPECT_EQ(a.imitation, b.imitation);
  EXPECT_EQ(a.gamma, b.gamma);
  for (std::size_t i = 0; i < a.trajectories.size(); ++i) {
    const Trajectory &x = a.trajectories[i], &y = b.trajectories[i];
    EXPECT_EQ(x.obs_shape, y.obs_shape);
    ASSERT_EQ(x.observations.size(), y.observations.size());
    EXPECT_EQ(std::memcmp(x.observations.data(), y.observations.data(), x.observations.size() * sizeof(float)), 0);
    EXPECT_EQ(x.actions, y.actions);
    EXPECT_EQ(std::memcmp(x.rewards.data(), y.rewards.data(), x.rewards.size() * sizeof(float)), 0);
    EXPECT_EQ(x.returns_to_go, y.returns_to_go);
    EXPECT_EQ(x.meta.env_id, y.meta.env_id);
    EXPECT_EQ(x.meta.seed, y.meta.seed);
    EXPECT_EQ(x.meta.policy, y.meta.policy);
  }
}

TEST(DatasetIo, RoundTripIsBitExact) {
  const OfflineDataset ds = synthetic_dataset({4, 9, 6});
  const auto path = (std::filesystem::temp_directory_path() / "adacred_roundtrip.adcr").string();
  write_dataset(ds, path);
  expect_same(ds, read_dataset(path));
  std::filesystem::remove(path);
}

TEST(DatasetIo, BigEndianFilesAreByteSwappedOnRead) {
  const OfflineDataset ds = synthetic_dataset({3, 5});
  const auto little = encode_dataset(ds, false);
  const auto big = encode_dataset(ds, true);
  EXPECT_NE(little, big);
  EXPECT_EQ(big[6], 1);
  EXPECT_EQ(little[6], 0);
  expect_same(ds, decode_dataset(big));
}

TEST(DatasetIo, CorruptMagicNamesOffsetZero) {
  auto bytes = encode_dataset(synthetic_dataset({3}));
  bytes[1] = 'X';
  try {
    decode_dataset(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(DatasetIo, UnsupportedVersionRejected) {
  auto bytes = encode_dataset(synthetic_dataset({3}));
  bytes[4] = 9;
  try {
    decode_dataset(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }
}

TEST(DatasetIo, TruncationRejectedWithOffset) {
  auto bytes = encode_dataset(synthetic_dataset({3, 4}));
  bytes.resize(bytes.size() - 7);
  try {
    decode_dataset(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_LE(e.offset(), bytes.size());
  }
}

TEST(DatasetIo, FlippedPayloadByteFailsCrc) {
  auto bytes = encode_dataset(synthetic_dataset({3}));
  bytes[bytes.size() - 10] ^= 0x40;
  EXPECT_THROW(decode_dataset(bytes), FormatError);
}

TEST(DatasetIo, ImitationFlagSurvivesRoundTrip) {
  OfflineDataset ds = synthetic_dataset({5, 5});
  ds.set_imitation();
  const OfflineDataset back = decode_dataset(encode_dataset(ds));
  EXPECT_TRUE(back.imitation);
  for (const Trajectory& t : back.trajectories) {
    for (float r : t.rewards) EXPECT_EQ(r, 0.0f);
    for (float r : t.returns_to_go) EXPECT_EQ(r, 0.0f);
  }
}

TEST(DatasetIo, NormalizationIsPerChannel) {
  const OfflineDataset ds = decode_dataset(encode_dataset(synthetic_dataset({30, 40})));
  ASSERT_EQ(ds.norm.mean.size(), 1u);
  double s = 0, sq = 0, n = 0;
  for (const Trajectory& t : ds.trajectories) {
    for (float v : t.observations) {
      s += v;
      sq += double(v) * v;
      ++n;
    }
  }
  const double mean = s / n;
  EXPECT_NEAR(ds.norm.mean[0], mean, 1e-5);
  EXPECT_NEAR(ds.norm.std[0], std::sqrt(sq / n - mean * mean), 1e-4);
}

TEST(SampleBatch, SingleStepContext) {
  const OfflineDataset ds = synthetic_dataset({6, 8});
  Rng rng(1);
  const SequenceBatch b = sample_batch(ds, 32, 1, 4, rng);
  EXPECT_EQ(b.valid_count(), 32u);
  for (std::size_t i = 0; i < 32; ++i) {
    const Trajectory& tr = ds.trajectories[b.source[i]];
    const std::size_t t = std::size_t(b.start[i]);
    EXPECT_EQ(b.targets[i], tr.actions[t]);
    EXPECT_EQ(b.rtg[i], tr.returns_to_go[t]);
    EXPECT_EQ(b.prev_actions[i], t == 0 ? kNoAction : tr.actions[t - 1]);
  }
}

TEST(SampleBatch, FullLengthContextHasOneUnpaddedWindow) {
  const OfflineDataset ds = synthetic_dataset({10});
  Rng rng(2);
  std::map<long, int> unpadded;
  for (int k = 0; k < 50; ++k) {
    const SequenceBatch b = sample_batch(ds, 8, 10, 4, rng);
    for (std::size_t i = 0; i < 8; ++i) {
      if (b.start[i] >= 0) ++unpadded[b.start[i]];
    }
  }
  ASSERT_EQ(unpadded.size(), 1u);
  EXPECT_EQ(unpadded.begin()->first, 0);
}

TEST(SampleBatch, WindowsCopySourceSlicesAndMaskPadding) {
  const OfflineDataset ds = synthetic_dataset({7, 12, 9});
  Rng rng(3);
  const SequenceBatch b = sample_batch(ds, 64, 5, 4, rng);
  const std::size_t frame = b.frame_size();
  for (std::size_t i = 0; i < b.batch; ++i) {
    const Trajectory& tr = ds.trajectories[b.source[i]];
    for (std::size_t k = 0; k < b.ctx; ++k) {
      const std::size_t slot = i * b.ctx + k;
      const long t = b.start[i] + long(k);
      if (t < 0) {
        EXPECT_EQ(b.valid[slot], 0);
        continue;
      }
      ASSERT_EQ(b.valid[slot], 1);
      const auto f = tr.frame(std::size_t(t));
      for (std::size_t p = 0; p < frame; ++p) EXPECT_EQ(b.observations[slot * frame + p], f[p]);
      EXPECT_EQ(b.targets[slot], tr.actions[std::size_t(t)]);
    }
  }
}

TEST(SampleBatch, PreviousRewardToken) {
  const OfflineDataset ds = synthetic_dataset({8});
  Rng rng(4);
  const SequenceBatch b = sample_batch(ds, 16, 3, 4, rng, RewardToken::kPreviousReward);
  const Trajectory& tr = ds.trajectories[0];
  for (std::size_t i = 0; i < b.batch; ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      const long t = b.start[i] + long(k);
      if (t < 0) continue;
      EXPECT_EQ(b.rtg[i * 3 + k], t == 0 ? 0.0f : tr.rewards[std::size_t(t) - 1]);
    }
  }
}

TEST(SampleBatch, ImitationBatchesCarryZeroRewardTokens) {
  OfflineDataset ds = synthetic_dataset({8, 8});
  ds.set_imitation();
  Rng rng(5);
  for (RewardToken tok : {RewardToken::kReturnToGo, RewardToken::kPreviousReward}) {
    const SequenceBatch b = sample_batch(ds, 32, 4, 4, rng, tok);
    for (float v : b.rtg) EXPECT_EQ(v, 0.0f);
  }
}

TEST(SampleBatch, ContextLongerThanEveryTrajectoryThrows) {
  const OfflineDataset ds = synthetic_dataset({4, 5});
  Rng rng(6);
  EXPECT_THROW(sample_batch(ds, 4, 6, 4, rng), SamplingError);
  EXPECT_THROW(sample_batch(OfflineDataset{}, 4, 1, 4, rng), SamplingError);
}

TEST(SampleBatch, RereadAndResampleIsIdentical) {
  const OfflineDataset ds = synthetic_dataset({7, 11});
  const OfflineDataset back = decode_dataset(encode_dataset(ds));
  Rng r1(8), r2(8);
  const SequenceBatch a = sample_batch(ds, 16, 4, 4, r1), b = sample_batch(back, 16, 4, 4, r2);
  EXPECT_EQ(a.observations, b.observations);
  EXPECT_EQ(a.targets, b.targets);
  EXPECT_EQ(a.rtg, b.rtg);
  EXPECT_EQ(a.start, b.start);
}

TEST(SampleBatch, StartPositionsAreUniform) {
  const OfflineDataset ds = synthetic_dataset({5, 8, 12, 3});
  const std::size_t ctx = 4;
  ASSERT_EQ(window_count(ds, ctx), 25u);
  std::map<std::pair<std::size_t, long>, double> counts;
  Rng rng(9);
  const std::size_t draws = 100000, per_batch = 1000;
  for (std::size_t k = 0; k < draws / per_batch; ++k) {
    const SequenceBatch b = sample_batch(ds, per_batch, ctx, 4, rng);
    for (std::size_t i = 0; i < per_batch; ++i) counts[{b.source[i], b.start[i]}] += 1;
  }
  ASSERT_EQ(counts.size(), 25u);
  const double expected = double(draws) / 25.0;
  double chi2 = 0;
  for (const auto& [key, c] : counts) {
    EXPECT_NE(key.first, 3u);
    chi2 += (c - expected) * (c - expected) / expected;
  }
  const double p = 1.0 - boost::math::cdf(boost::math::chi_squared(24.0), chi2);
  EXPECT_GT(p, 0.01);
}

TEST(GridWorldDataset, OptimalDatasetReturnsAreOne) {
  GridWorld env(GridWorldSpec{});
  auto pi = make_policy("optimal", env);
  OfflineDataset ds;
  for (std::uint64_t s = 0; s < 5; ++s) ds.trajectories.push_back(rollout(env, *pi, 30, s));
  EXPECT_EQ(ds.max_return(), 1.0);
  EXPECT_EQ(ds.mean_return(), 1.0);
  const OfflineDataset back = decode_dataset(encode_dataset(ds));
  EXPECT_EQ(back.trajectories[2].meta.door_step, ds.trajectories[2].meta.door_step);
  EXPECT_EQ(back.trajectories[2].meta.key_step, ds.trajectories[2].meta.key_step);
}

}  // namespace
}  // namespace adacred
