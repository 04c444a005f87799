// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "adacred/dataset/batch.hpp"

namespace adacred {

struct ModelConfig {
  std::size_t ctx = 10;
  std::size_t channels = 1;
  std::size_t image_h = 10;
  std::size_t image_w = 10;
  std::size_t patch = 2;
  std::size_t layers = 2;
  std::size_t spatial_heads = 2;
  std::size_t spatial_dim = 16;
  std::size_t temporal_heads = 2;
  std::size_t temporal_dim = 16;
  std::size_t mlp_ratio = 2;
  double dropout = 0.1;
  double keep_spatial = 0.75;
  double keep_temporal = 0.75;
  double tau = 1.0;
  std::size_t action_count = 4;
  // Pure-state conv encoder.
  std::size_t conv1_channels = 8;
  std::size_t conv2_channels = 16;
  std::size_t conv_kernel = 3;
  std::size_t conv_stride = 2;
  bool mask_h_tokens = true;
  RewardToken reward_token = RewardToken::kReturnToGo;
  double rtg_scale = 1.0;
  double credit_bias_init = 2.0;
  double init_std = 0.02;

  std::size_t patches() const { return (image_h / patch) * (image_w / patch); }
  std::size_t group_tokens() const { return patches() + 2; }
  std::size_t patch_dim() const { return channels * patch * patch; }
  std::size_t conv1_extent_h() const { return (image_h - conv_kernel) / conv_stride + 1; }
  std::size_t conv1_extent_w() const { return (image_w - conv_kernel) / conv_stride + 1; }
  std::size_t conv2_extent_h() const { return (conv1_extent_h() - conv_kernel) / conv_stride + 1; }
  std::size_t conv2_extent_w() const { return (conv1_extent_w() - conv_kernel) / conv_stride + 1; }
  Shape obs_shape() const { return {channels, image_h, image_w}; }

  // Throws ConfigError naming the offending field.
  void validate() const;
};

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

}  // namespace adacred
