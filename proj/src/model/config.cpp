// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/model/config.hpp"

#include <json.hpp>

#include "adacred/errors.hpp"

namespace adacred {

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("model config: " + what); };
  if (ctx == 0) fail("ctx must be positive");
  if (channels == 0 || image_h == 0 || image_w == 0) fail("image extents must be positive");
  if (patch == 0 || image_h % patch || image_w % patch) fail("image extents must be divisible by the patch size");
  if (layers == 0) fail("layers must be positive");
  if (spatial_heads == 0 || spatial_dim % spatial_heads) fail("spatial_dim must be divisible by spatial_heads");
  if (temporal_heads == 0 || temporal_dim % temporal_heads) fail("temporal_dim must be divisible by temporal_heads");
  if (mlp_ratio == 0) fail("mlp_ratio must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (!(keep_spatial > 0.0 && keep_spatial <= 1.0)) fail("keep_spatial must lie in (0, 1]");
  if (!(keep_temporal > 0.0 && keep_temporal <= 1.0)) fail("keep_temporal must lie in (0, 1]");
  if (!(tau > 0.0)) fail("tau must be positive");
  if (action_count == 0 || action_count > 0xFFFF) fail("action_count out of range");
  if (conv1_channels == 0 || conv2_channels == 0 || conv_kernel == 0 || conv_stride == 0) {
    fail("conv encoder sizes must be positive");
  }
  if (conv_kernel > image_h || conv_kernel > image_w || conv_kernel > conv1_extent_h() ||
      conv_kernel > conv1_extent_w()) {
    fail("conv encoder kernel does not fit the image");
  }
  if (!(rtg_scale > 0.0)) fail("rtg_scale must be positive");
}

std::string model_config_to_json(const ModelConfig& c) {
  nlohmann::json j = {
      {"ctx", c.ctx},
      {"channels", c.channels},
      {"image_h", c.image_h},
      {"image_w", c.image_w},
      {"patch", c.patch},
      {"layers", c.layers},
      {"spatial_heads", c.spatial_heads},
      {"spatial_dim", c.spatial_dim},
      {"temporal_heads", c.temporal_heads},
      {"temporal_dim", c.temporal_dim},
      {"mlp_ratio", c.mlp_ratio},
      {"dropout", c.dropout},
      {"keep_spatial", c.keep_spatial},
      {"keep_temporal", c.keep_temporal},
      {"tau", c.tau},
      {"action_count", c.action_count},
      {"conv1_channels", c.conv1_channels},
      {"conv2_channels", c.conv2_channels},
      {"conv_kernel", c.conv_kernel},
      {"conv_stride", c.conv_stride},
      {"mask_h_tokens", c.mask_h_tokens},
      {"reward_token", c.reward_token == RewardToken::kReturnToGo ? "rtg" : "reward"},
      {"rtg_scale", c.rtg_scale},
      {"credit_bias_init", c.credit_bias_init},
      {"init_std", c.init_std},
  };
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    ModelConfig c;
    c.ctx = j.at("ctx");
    c.channels = j.at("channels");
    c.image_h = j.at("image_h");
    c.image_w = j.at("image_w");
    c.patch = j.at("patch");
    c.layers = j.at("layers");
    c.spatial_heads = j.at("spatial_heads");
    c.spatial_dim = j.at("spatial_dim");
    c.temporal_heads = j.at("temporal_heads");
    c.temporal_dim = j.at("temporal_dim");
    c.mlp_ratio = j.at("mlp_ratio");
    c.dropout = j.at("dropout");
    c.keep_spatial = j.at("keep_spatial");
    c.keep_temporal = j.at("keep_temporal");
    c.tau = j.at("tau");
    c.action_count = j.at("action_count");
    c.conv1_channels = j.at("conv1_channels");
    c.conv2_channels = j.at("conv2_channels");
    c.conv_kernel = j.at("conv_kernel");
    c.conv_stride = j.at("conv_stride");
    c.mask_h_tokens = j.at("mask_h_tokens");
    const std::string token = j.at("reward_token");
    if (token != "rtg" && token != "reward") throw ConfigError("unknown reward_token '" + token + "'");
    c.reward_token = token == "rtg" ? RewardToken::kReturnToGo : RewardToken::kPreviousReward;
    c.rtg_scale = j.at("rtg_scale");
    c.credit_bias_init = j.at("credit_bias_init");
    c.init_std = j.at("init_std");
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model config JSON: ") + e.what(), 0);
  }
}

}  // namespace adacred
