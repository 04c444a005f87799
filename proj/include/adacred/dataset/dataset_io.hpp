// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Offline dataset and its binary container.
//
// Layout (all integers and floats in the byte order named by the header flag):
//   "ADCR" | u16 version=1 | u8 endianness (0 little, 1 big) | u32 count
//   | u8 flags (bit 0: imitation) | f32 gamma
//   per trajectory:
//     u32 T | u8 dtype (1 = f32) | u8 rank | u32 dims[rank]
//     | u16 len, env id bytes | u64 seed | u16 len, policy bytes
//     | i32 key step | i32 door step
//     | f32 frames[(T+1) * prod(dims)] | u16 actions[T] | f32 rewards[T]
//     | u32 CRC-32 of every preceding byte of this trajectory record
// Returns-to-go are not stored; they are recomputed from rewards and gamma.

#pragma once

#include <string>
#include <vector>

#include "adacred/dataset/trajectory.hpp"

namespace adacred {

struct NormalizationStats {
  std::vector<float> mean;  // per channel
  std::vector<float> std;

  bool empty() const { return mean.empty(); }
};

struct OfflineDataset {
  std::vector<Trajectory> trajectories;
  bool imitation = false;
  double gamma = 1.0;
  NormalizationStats norm;

  // Zeroes every reward and return-to-go and sets the flag.
  void set_imitation();
  // Recomputes returns-to-go from rewards and gamma (zeros in imitation mode).
  void refresh_returns();
  double max_return() const;
  double mean_return() const;
};

/// Per-channel statistics over the given trajectories (channel = axis 0 of
/// the observation shape; rank-1 observations are treated per feature).
NormalizationStats compute_normalization(const std::vector<Trajectory>& trajectories);

void write_dataset(const OfflineDataset& ds, const std::string& path, bool big_endian = false);
OfflineDataset read_dataset(const std::string& path);

std::vector<unsigned char> encode_dataset(const OfflineDataset& ds, bool big_endian = false);
OfflineDataset decode_dataset(const std::vector<unsigned char>& bytes);

}  // namespace adacred
