// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Spatial transformer over per-step observation/action/reward token groups,
// temporal causal transformer over interleaved pooled-group and pure-state
// tokens, per-layer credit heads gating tokens with binary masks, and a
// linear action decoder.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "adacred/dataset/batch.hpp"
#include "adacred/model/config.hpp"
#include "adacred/model/gumbel.hpp"
#include "adacred/model/layers.hpp"

namespace adacred {

enum class MaskMode {
  kNone,           // no gating at all: the unpruned network
  kForceOnes,      // gate with all-ones masks
  kDeterministic,  // threshold scores at 0.5
  kStochastic,     // Gumbel-sigmoid with straight-through gradients
};

/// Externally supplied binary masks (e.g. to hold masks fixed while inputs
/// change). Entries left empty fall back to the forward's MaskMode.
struct FixedMasks {
  std::vector<std::vector<Real>> spatial;   // per layer, [B*T*(n+2)]
  std::vector<std::vector<Real>> temporal;  // per layer, [B*2T]
};

/// Activation statistics of one masked layer.
struct LayerActivation {
  bool spatial = true;
  std::size_t layer = 0;
  Tensor activ;  // scalar; differentiable while masks are live
  double total = 0.0;
  std::size_t dim = 0;

  double ratio() const { return double(activ.item()) / total; }
};

struct MaskState {
  std::size_t batch = 0;
  std::size_t ctx = 0;
  std::size_t group_tokens = 0;
  std::vector<std::vector<Real>> spatial;          // per layer, [B*T*(n+2)]
  std::vector<std::vector<Real>> temporal;         // per layer, [B*2T]
  std::vector<std::vector<Real>> spatial_scores;   // per layer, [B*T*n] (empty when ungated)
  std::vector<std::vector<Real>> temporal_scores;  // per layer, [B*2T]
  std::vector<LayerActivation> stats;              // spatial 0, temporal 0, spatial 1, ...
};

struct ForwardOptions {
  MaskMode mode = MaskMode::kDeterministic;
  bool train = false;  // enables dropout
  const FixedMasks* fixed = nullptr;
};

struct ForwardResult {
  Tensor logits;                // [B*T, K]
  MaskState masks;
  std::vector<Tensor> pooled;   // g^l per layer, [B, T, Dt]
  std::vector<Tensor> h;        // h^0 .. h^L, [B, T, Dt]
};

struct SpatialOut {
  Tensor tokens;  // [M, n+2, Ds]
  Tensor mask;    // [M, n+2]
  Tensor scores;  // [M, n] (unset when ungated)
};

struct TemporalOut {
  Tensor y;       // [B, 2T, Dt]
  Tensor h;       // [B, T, Dt]
  Tensor mask;    // [B, 2T]
  Tensor scores;  // [B, 2T] (unset when ungated)
};

class AdaCredModel {
 public:
  AdaCredModel(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const ParamStore& store() const { return store_; }
  std::vector<NamedParam> trainable(bool include_credit) const;
  std::size_t parameter_count() const { return store_.count(); }

  void set_normalization(NormalizationStats stats);
  const NormalizationStats& normalization() const { return norm_; }

  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

  // Normalized observations of a batch as [B*T, C, H, W].
  Tensor observations(const SequenceBatch& batch) const;

  // Token group [action, reward, patch_1..patch_n] per row: [M, n+2, Ds].
  // prev_actions uses kNoAction for "no previous action".
  Tensor embed_oar(const std::vector<std::size_t>& prev_actions, const std::vector<float>& reward_tokens,
                   const Tensor& patches) const;

  SpatialOut spatial_layer_forward(std::size_t layer, const Tensor& tokens, MaskMode mode,
                                   const std::vector<Real>* fixed, const DropoutCtx& drop);

  // FC(concat(tokens)) + e_temporal[step] per row: [M, Dt].
  Tensor pool_group(std::size_t layer, const Tensor& tokens, const std::vector<std::size_t>& steps) const;

  // Conv(o) + e_temporal[step] per row: [M, Dt].
  Tensor conv_state_embed(const Tensor& images, const std::vector<std::size_t>& steps) const;

  // y_in [B, 2T, Dt] interleaved (g_1, h_1, g_2, h_2, ...); valid has B*T entries.
  TemporalOut temporal_layer_forward(std::size_t layer, const Tensor& y_in, const std::vector<std::uint8_t>& valid,
                                     MaskMode mode, const std::vector<Real>* fixed, const DropoutCtx& drop);

  Tensor decode_action(const Tensor& h) const;

  ForwardResult forward(const SequenceBatch& batch, const ForwardOptions& options);

 private:
  Tensor gate(const Tensor& scores, MaskMode mode);

  ModelConfig config_;
  ParamStore store_;
  Rng rng_;
  NormalizationStats norm_;

  Tensor action_table_;
  Linear rtg_embed_;
  Linear patch_embed_;
  Tensor spatial_pos_;
  Tensor temporal_pos_;
  Tensor conv1_k_, conv1_b_, conv2_k_, conv2_b_;
  Linear conv_fc_;
  std::vector<Block> spatial_blocks_;
  std::vector<CreditHead> spatial_credit_;
  std::vector<Linear> pool_fc_;
  std::vector<Block> temporal_blocks_;
  std::vector<CreditHead> temporal_credit_;
  Linear head_;
};

/// Interleaves g[B, T, D] and h[B, T, D] into [B, 2T, D].
Tensor interleave_tokens(const Tensor& g, const Tensor& h);

/// Additive temporal attention bias [B, H, 2T, 2T]: position i sees j <= i
/// when step(j) is valid, and always sees itself.
Tensor temporal_attention_bias(const std::vector<std::uint8_t>& valid, std::size_t batch, std::size_t ctx,
                               std::size_t heads);

}  // namespace adacred
