// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/model/adacred_model.hpp"

#include <cmath>

#include "adacred/errors.hpp"
#include "adacred/numerics/ops.hpp"

namespace adacred {

namespace {

constexpr Real kBlocked = Real(-1e9);

Tensor ones(Shape shape) { return Tensor::full(std::move(shape), Real(1)); }

Tensor fixed_mask(const std::vector<Real>& values, Shape shape) {
  if (values.size() != shape_numel(shape)) throw DimensionError("fixed mask has wrong size");
  for (Real v : values) {
    if (v != Real(0) && v != Real(1)) throw ContractError("fixed masks must be binary");
  }
  return Tensor::from(std::move(shape), values);
}

std::vector<std::size_t> range_indices(std::size_t first, std::size_t stop, std::size_t step = 1) {
  std::vector<std::size_t> out;
  for (std::size_t i = first; i < stop; i += step) out.push_back(i);
  return out;
}

}  // namespace

Tensor interleave_tokens(const Tensor& g, const Tensor& h) {
  if (g.rank() != 3 || g.shape() != h.shape()) throw DimensionError("interleave needs equal [B, T, D] inputs");
  const std::size_t b = g.dim(0), t = g.dim(1), d = g.dim(2);
  Tensor both = ops::concat({ops::reshape(g, {b, t, 1, d}), ops::reshape(h, {b, t, 1, d})}, 2);
  return ops::reshape(both, {b, 2 * t, d});
}

Tensor temporal_attention_bias(const std::vector<std::uint8_t>& valid, std::size_t batch, std::size_t ctx,
                               std::size_t heads) {
  if (valid.size() != batch * ctx) throw DimensionError("valid flags must have B*T entries");
  const std::size_t n = 2 * ctx;
  std::vector<Real> bias(batch * heads * n * n, kBlocked);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        if (!(valid[b * ctx + j / 2] || i == j)) continue;
        for (std::size_t hd = 0; hd < heads; ++hd) bias[((b * heads + hd) * n + i) * n + j] = Real(0);
      }
    }
  }
  return Tensor::from({batch, heads, n, n}, std::move(bias));
}

AdaCredModel::AdaCredModel(ModelConfig config, std::uint64_t seed) : config_(config), rng_(seed) {
  config_.validate();
  const ModelConfig& c = config_;
  const double std0 = c.init_std;
  Rng init(splitmix64(seed));
  action_table_ = store_.normal("embed.action", {c.action_count + 1, c.spatial_dim}, std0, init, false);
  rtg_embed_ = Linear::make(store_, "embed.rtg", 1, c.spatial_dim, std0, init);
  patch_embed_ = Linear::make(store_, "embed.patch", c.patch_dim(), c.spatial_dim, std0, init);
  spatial_pos_ = store_.normal("embed.spatial_pos", {c.patches(), c.spatial_dim}, std0, init, false);
  temporal_pos_ = store_.normal("embed.temporal_pos", {c.ctx, c.temporal_dim}, std0, init, false);
  const std::size_t k = c.conv_kernel;
  conv1_k_ = store_.normal("conv.k1", {c.conv1_channels, c.channels, k, k},
                           std::sqrt(2.0 / double(c.channels * k * k)), init, true);
  conv1_b_ = store_.constant("conv.b1", {c.conv1_channels}, Real(0));
  conv2_k_ = store_.normal("conv.k2", {c.conv2_channels, c.conv1_channels, k, k},
                           std::sqrt(2.0 / double(c.conv1_channels * k * k)), init, true);
  conv2_b_ = store_.constant("conv.b2", {c.conv2_channels}, Real(0));
  const std::size_t conv_out = c.conv2_channels * c.conv2_extent_h() * c.conv2_extent_w();
  conv_fc_ = Linear::make(store_, "conv.fc", conv_out, c.temporal_dim, std0, init);
  for (std::size_t l = 0; l < c.layers; ++l) {
    const std::string sp = "spatial." + std::to_string(l);
    spatial_blocks_.push_back(Block::make(store_, sp + ".block", c.spatial_dim, c.spatial_heads, c.mlp_ratio, std0, init));
    store_.set_credit_scope(true);
    spatial_credit_.push_back(CreditHead::make(store_, sp + ".credit", c.spatial_dim, std0, c.credit_bias_init, init));
    store_.set_credit_scope(false);
    pool_fc_.push_back(Linear::make(store_, "pool." + std::to_string(l), c.group_tokens() * c.spatial_dim,
                                    c.temporal_dim, std0, init));
    const std::string tp = "temporal." + std::to_string(l);
    temporal_blocks_.push_back(
        Block::make(store_, tp + ".block", c.temporal_dim, c.temporal_heads, c.mlp_ratio, std0, init));
    store_.set_credit_scope(true);
    temporal_credit_.push_back(
        CreditHead::make(store_, tp + ".credit", c.temporal_dim, std0, c.credit_bias_init, init));
    store_.set_credit_scope(false);
  }
  head_ = Linear::make(store_, "head", c.temporal_dim, c.action_count, std0, init);
  norm_.mean.assign(c.channels, 0.0f);
  norm_.std.assign(c.channels, 1.0f);
}

std::vector<NamedParam> AdaCredModel::trainable(bool include_credit) const {
  std::vector<NamedParam> out;
  for (std::size_t i = 0; i < store_.params().size(); ++i) {
    if (include_credit || !store_.is_credit(i)) out.push_back(store_.params()[i]);
  }
  return out;
}

void AdaCredModel::set_normalization(NormalizationStats stats) {
  if (stats.mean.size() != config_.channels || stats.std.size() != config_.channels) {
    throw DimensionError("normalization statistics must have one entry per channel");
  }
  for (float s : stats.std) {
    if (!(s > 0.0f)) throw ParameterError("normalization std must be positive");
  }
  norm_ = std::move(stats);
}

Tensor AdaCredModel::observations(const SequenceBatch& batch) const {
  if (batch.obs_shape != config_.obs_shape()) {
    throw DimensionError("batch observation shape " + shape_str(batch.obs_shape) + " differs from model " +
                         shape_str(config_.obs_shape()));
  }
  const std::size_t m = batch.batch * batch.ctx;
  const std::size_t per_channel = config_.image_h * config_.image_w;
  std::vector<Real> values(batch.observations.size());
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < config_.channels; ++c) {
      const std::size_t base = (r * config_.channels + c) * per_channel;
      const Real mu = norm_.mean[c], inv = Real(1) / Real(norm_.std[c]);
      for (std::size_t k = 0; k < per_channel; ++k) values[base + k] = (Real(batch.observations[base + k]) - mu) * inv;
    }
  }
  return Tensor::from({m, config_.channels, config_.image_h, config_.image_w}, std::move(values));
}

Tensor AdaCredModel::embed_oar(const std::vector<std::size_t>& prev_actions, const std::vector<float>& reward_tokens,
                               const Tensor& patches) const {
  const std::size_t m = prev_actions.size();
  if (reward_tokens.size() != m || patches.rank() != 3 || patches.dim(0) != m ||
      patches.dim(1) != config_.patches() || patches.dim(2) != config_.patch_dim()) {
    throw DimensionError("embed_oar: inconsistent action/reward/patch inputs");
  }
  std::vector<std::size_t> ids(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (prev_actions[i] == kNoAction) {
      ids[i] = config_.action_count;
    } else if (prev_actions[i] >= config_.action_count) {
      throw RangeError("action id " + std::to_string(prev_actions[i]) + " >= action count " +
                       std::to_string(config_.action_count));
    } else {
      ids[i] = prev_actions[i];
    }
  }
  const std::size_t d = config_.spatial_dim;
  Tensor a = ops::reshape(ops::embedding(action_table_, ids), {m, 1, d});
  std::vector<Real> scaled(m);
  for (std::size_t i = 0; i < m; ++i) scaled[i] = Real(double(reward_tokens[i]) / config_.rtg_scale);
  Tensor r = ops::reshape(rtg_embed_(Tensor::from({m, 1}, std::move(scaled))), {m, 1, d});
  Tensor p = ops::add(patch_embed_(patches), spatial_pos_);
  return ops::concat({a, r, p}, 1);
}

Tensor AdaCredModel::gate(const Tensor& scores, MaskMode mode) {
  switch (mode) {
    case MaskMode::kStochastic:
      return gumbel_sigmoid(scores, config_.tau, GumbelMode::kTrain, &rng_);
    case MaskMode::kDeterministic:
      return gumbel_sigmoid(scores, config_.tau, GumbelMode::kEval, nullptr);
    default:
      return ones(scores.shape());
  }
}

SpatialOut AdaCredModel::spatial_layer_forward(std::size_t layer, const Tensor& tokens, MaskMode mode,
                                               const std::vector<Real>* fixed, const DropoutCtx& drop) {
  if (layer >= config_.layers) throw RangeError("spatial layer index out of range");
  const std::size_t n = config_.group_tokens();
  if (tokens.rank() != 3 || tokens.dim(1) != n || tokens.dim(2) != config_.spatial_dim) {
    throw DimensionError("spatial layer expects [M, n+2, Ds], got " + shape_str(tokens.shape()));
  }
  const std::size_t m = tokens.dim(0);
  SpatialOut out;
  const Block& block = spatial_blocks_[layer];
  if (fixed) {
    out.mask = fixed_mask(*fixed, {m, n});
  } else if (mode == MaskMode::kNone) {
    out.mask = ones({m, n});
    out.tokens = block(tokens, nullptr, drop);
    return out;
  } else if (mode == MaskMode::kForceOnes) {
    out.mask = ones({m, n});
  } else {
    Tensor patch_tokens = ops::index_select(tokens, 1, range_indices(2, n));
    out.scores = spatial_credit_[layer](patch_tokens);
    out.mask = ops::concat({ones({m, 2}), gate(out.scores, mode)}, 1);
  }
  out.tokens = block(ops::gate_rows(tokens, out.mask), nullptr, drop);
  return out;
}

Tensor AdaCredModel::pool_group(std::size_t layer, const Tensor& tokens, const std::vector<std::size_t>& steps) const {
  if (layer >= config_.layers) throw RangeError("pool layer index out of range");
  if (tokens.rank() != 3 || tokens.dim(1) != config_.group_tokens() || tokens.dim(0) != steps.size()) {
    throw DimensionError("pool_group expects [M, n+2, Ds] with one step index per row");
  }
  for (std::size_t t : steps) {
    if (t >= config_.ctx) throw RangeError("step " + std::to_string(t) + " >= context length");
  }
  const std::size_t m = tokens.dim(0);
  Tensor flat = ops::reshape(tokens, {m, config_.group_tokens() * config_.spatial_dim});
  return ops::add(pool_fc_[layer](flat), ops::index_select(temporal_pos_, 0, steps));
}

Tensor AdaCredModel::conv_state_embed(const Tensor& images, const std::vector<std::size_t>& steps) const {
  if (images.rank() != 4 || images.dim(1) != config_.channels || images.dim(2) != config_.image_h ||
      images.dim(3) != config_.image_w) {
    throw DimensionError("conv encoder expects [M, C, H, W] matching the config, got " + shape_str(images.shape()));
  }
  if (images.dim(0) != steps.size()) throw DimensionError("conv encoder needs one step index per image");
  for (std::size_t t : steps) {
    if (t >= config_.ctx) throw RangeError("step " + std::to_string(t) + " >= context length");
  }
  const std::size_t m = images.dim(0);
  Tensor x = ops::gelu(ops::conv2d(images, conv1_k_, &conv1_b_, config_.conv_stride));
  x = ops::gelu(ops::conv2d(x, conv2_k_, &conv2_b_, config_.conv_stride));
  x = ops::reshape(x, {m, x.numel() / m});
  return ops::add(conv_fc_(x), ops::index_select(temporal_pos_, 0, steps));
}

TemporalOut AdaCredModel::temporal_layer_forward(std::size_t layer, const Tensor& y_in,
                                                 const std::vector<std::uint8_t>& valid, MaskMode mode,
                                                 const std::vector<Real>* fixed, const DropoutCtx& drop) {
  if (layer >= config_.layers) throw RangeError("temporal layer index out of range");
  if (y_in.rank() != 3 || y_in.dim(2) != config_.temporal_dim) {
    throw DimensionError("temporal layer expects [B, 2T, Dt], got " + shape_str(y_in.shape()));
  }
  if (y_in.dim(1) % 2) throw ContractError("temporal input must interleave g and h tokens (even length)");
  const std::size_t b = y_in.dim(0), n = y_in.dim(1), t = n / 2;
  TemporalOut out;
  const Tensor bias = temporal_attention_bias(valid, b, t, config_.temporal_heads);
  const Block& block = temporal_blocks_[layer];
  Tensor gated = y_in;
  if (fixed) {
    out.mask = fixed_mask(*fixed, {b, n});
    gated = ops::gate_rows(y_in, out.mask);
  } else if (mode == MaskMode::kNone) {
    out.mask = ones({b, n});
  } else if (mode == MaskMode::kForceOnes) {
    out.mask = ones({b, n});
    gated = ops::gate_rows(y_in, out.mask);
  } else {
    out.scores = temporal_credit_[layer](y_in);
    if (config_.mask_h_tokens) {
      out.mask = gate(out.scores, mode);
    } else {
      Tensor g_scores = ops::index_select(ops::reshape(out.scores, {b, t, 2}), 2, {0});
      out.mask = ops::reshape(ops::concat({gate(g_scores, mode), ones({b, t, 1})}, 2), {b, n});
    }
    gated = ops::gate_rows(y_in, out.mask);
  }
  out.y = block(gated, &bias, drop);
  out.h = ops::index_select(out.y, 1, range_indices(1, n, 2));
  return out;
}

Tensor AdaCredModel::decode_action(const Tensor& h) const {
  if (h.rank() < 1 || h.shape().back() != config_.temporal_dim) {
    throw DimensionError("decoder expects [..., Dt], got " + shape_str(h.shape()));
  }
  return head_(h);
}

ForwardResult AdaCredModel::forward(const SequenceBatch& batch, const ForwardOptions& options) {
  const ModelConfig& c = config_;
  if (batch.ctx != c.ctx) {
    throw DimensionError("batch context " + std::to_string(batch.ctx) + " differs from model context " +
                         std::to_string(c.ctx));
  }
  const std::size_t bsz = batch.batch, t = batch.ctx, m = bsz * t;
  const std::size_t n = c.group_tokens();
  if (options.fixed) {
    if ((!options.fixed->spatial.empty() && options.fixed->spatial.size() != c.layers) ||
        (!options.fixed->temporal.empty() && options.fixed->temporal.size() != c.layers)) {
      throw DimensionError("fixed masks need one entry per layer");
    }
  }
  DropoutCtx drop;
  if (options.train) {
    drop.p = c.dropout;
    drop.rng = &rng_;
  }
  std::vector<std::size_t> steps(m);
  for (std::size_t i = 0; i < m; ++i) steps[i] = i % t;
  std::size_t valid_steps = 0;
  std::vector<Real> spatial_w(m * n), temporal_w(bsz * 2 * t);
  for (std::size_t i = 0; i < m; ++i) {
    const Real v = batch.valid[i] ? Real(1) : Real(0);
    valid_steps += batch.valid[i] ? 1 : 0;
    std::fill_n(spatial_w.begin() + i * n, n, v);
    temporal_w[2 * i] = v;
    temporal_w[2 * i + 1] = v;
  }

  ForwardResult res;
  MaskState& ms = res.masks;
  ms.batch = bsz;
  ms.ctx = t;
  ms.group_tokens = n;

  const Tensor images = observations(batch);
  Tensor tokens = embed_oar(batch.prev_actions, batch.rtg, patchify(images, c.patch));
  Tensor h = ops::reshape(conv_state_embed(images, steps), {bsz, t, c.temporal_dim});
  res.h.push_back(h);
  for (std::size_t l = 0; l < c.layers; ++l) {
    const std::vector<Real>* fs =
        options.fixed && !options.fixed->spatial.empty() ? &options.fixed->spatial[l] : nullptr;
    SpatialOut sp = spatial_layer_forward(l, tokens, options.mode, fs, drop);
    tokens = sp.tokens;
    Tensor g = ops::reshape(pool_group(l, tokens, steps), {bsz, t, c.temporal_dim});
    res.pooled.push_back(g);

    const std::vector<Real>* ft =
        options.fixed && !options.fixed->temporal.empty() ? &options.fixed->temporal[l] : nullptr;
    TemporalOut tp = temporal_layer_forward(l, interleave_tokens(g, h), batch.valid, options.mode, ft, drop);
    h = tp.h;
    res.h.push_back(h);

    ms.spatial.emplace_back(sp.mask.data().begin(), sp.mask.data().end());
    ms.temporal.emplace_back(tp.mask.data().begin(), tp.mask.data().end());
    ms.spatial_scores.push_back(sp.scores.numel() > 1 || sp.scores.rank() > 0
                                    ? std::vector<Real>(sp.scores.data().begin(), sp.scores.data().end())
                                    : std::vector<Real>());
    ms.temporal_scores.push_back(tp.scores.numel() > 1 || tp.scores.rank() > 0
                                     ? std::vector<Real>(tp.scores.data().begin(), tp.scores.data().end())
                                     : std::vector<Real>());
    LayerActivation sa;
    sa.spatial = true;
    sa.layer = l;
    sa.activ = ops::dot_const(sp.mask, spatial_w);
    sa.total = double(n * valid_steps);
    sa.dim = c.spatial_dim;
    ms.stats.push_back(sa);
    LayerActivation ta;
    ta.spatial = false;
    ta.layer = l;
    ta.activ = ops::dot_const(tp.mask, temporal_w);
    ta.total = double(2 * valid_steps);
    ta.dim = c.temporal_dim;
    ms.stats.push_back(ta);
  }
  res.logits = decode_action(ops::reshape(h, {m, c.temporal_dim}));
  return res;
}

}  // namespace adacred
