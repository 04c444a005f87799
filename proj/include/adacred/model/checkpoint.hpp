// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint container:
//   "ADCK" | u16 version=1 | u8 bytes per real | u32 header length | header JSON
//   | u32 tensor count | per tensor: u16 name length, name, u8 rank, u32 dims,
//   raw little-endian reals | u32 CRC-32 of all preceding bytes

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "adacred/model/adacred_model.hpp"

namespace adacred {

struct NamedBlob {
  std::string name;
  Shape shape;
  std::vector<Real> values;
};

struct CheckpointData {
  std::string header = "{}";  // JSON object
  std::vector<NamedBlob> tensors;

  const NamedBlob& find(const std::string& name) const;
  bool contains(const std::string& name) const;
};

void write_checkpoint(const CheckpointData& data, const std::string& path);
CheckpointData read_checkpoint(const std::string& path);
std::vector<unsigned char> encode_checkpoint(const CheckpointData& data);
CheckpointData decode_checkpoint(const std::vector<unsigned char>& bytes);

/// Adds the model's parameters ("param/<name>"), config, normalization and
/// RNG state to `data` (header keys "model", "normalization", "model_rng").
void capture_model(const AdaCredModel& model, CheckpointData& data);
/// Rebuilds a model from captured data; bit-exact parameters.
std::unique_ptr<AdaCredModel> restore_model(const CheckpointData& data);
/// Copies captured parameter values into an existing model of equal config.
void load_parameters(AdaCredModel& model, const CheckpointData& data);

void save_model(const AdaCredModel& model, const std::string& path);
std::unique_ptr<AdaCredModel> load_model(const std::string& path);

}  // namespace adacred
