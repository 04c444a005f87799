// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Parameter registry and the transformer building blocks.

#pragma once

#include <string>
#include <vector>

#include "adacred/numerics/optim.hpp"
#include "adacred/numerics/rng.hpp"
#include "adacred/numerics/tensor.hpp"

namespace adacred {

/// Ordered collection of named trainable tensors.
class ParamStore {
 public:
  Tensor normal(const std::string& name, Shape shape, double stddev, Rng& rng, bool decay);
  Tensor constant(const std::string& name, Shape shape, Real value);

  // Parameters created from now on belong to the credit heads.
  void set_credit_scope(bool credit) { credit_scope_ = credit; }

  const std::vector<NamedParam>& params() const { return params_; }
  bool is_credit(std::size_t i) const { return credit_[i]; }
  const Tensor& get(const std::string& name) const;
  std::size_t count() const;

 private:
  Tensor add(const std::string& name, Tensor t, bool decay);

  std::vector<NamedParam> params_;
  std::vector<bool> credit_;
  bool credit_scope_ = false;
};

struct DropoutCtx {
  double p = 0.0;
  Rng* rng = nullptr;
};

Tensor apply_dropout(const Tensor& x, const DropoutCtx& ctx);

struct Linear {
  Tensor w;  // [in, out]
  Tensor b;  // [out]
  bool has_bias = true;

  static Linear make(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, double stddev,
                     Rng& rng, bool bias = true);
  Tensor operator()(const Tensor& x) const;
};

struct LayerNorm {
  Tensor gain;
  Tensor bias;

  static LayerNorm make(ParamStore& store, const std::string& name, std::size_t dim);
  Tensor operator()(const Tensor& x) const;
};

/// Multi-head self-attention over x[M, N, D]. `bias`, when given, is an
/// additive [M, H, N, N] score offset (large negative entries block keys).
struct Attention {
  Linear qkv;
  Linear proj;
  std::size_t heads = 1;

  static Attention make(ParamStore& store, const std::string& name, std::size_t dim, std::size_t heads,
                        double stddev, Rng& rng);
  Tensor operator()(const Tensor& x, const Tensor* bias, const DropoutCtx& drop) const;
};

struct Mlp {
  Linear fc1;
  Linear fc2;

  static Mlp make(ParamStore& store, const std::string& name, std::size_t dim, std::size_t hidden, double stddev,
                  Rng& rng);
  Tensor operator()(const Tensor& x, const DropoutCtx& drop) const;
};

/// Pre-norm transformer block: x + Attn(LN(x)), then + MLP(LN(.)).
struct Block {
  LayerNorm ln1;
  Attention attn;
  LayerNorm ln2;
  Mlp mlp;

  static Block make(ParamStore& store, const std::string& name, std::size_t dim, std::size_t heads,
                    std::size_t mlp_ratio, double stddev, Rng& rng);
  Tensor operator()(const Tensor& x, const Tensor* bias, const DropoutCtx& drop) const;
};

/// Token scoring map D -> max(1, D/4) -> 1 with a sigmoid output.
struct CreditHead {
  LayerNorm ln;
  Linear fc1;
  Linear fc2;

  static CreditHead make(ParamStore& store, const std::string& name, std::size_t dim, double stddev,
                         double bias_init, Rng& rng);
  // x[..., D] -> scores[...] in [0, 1]
  Tensor operator()(const Tensor& x) const;
};

/// images[M, C, H, W] -> [M, (H/p)(W/p), C p p], patches in row-major order.
Tensor patchify(const Tensor& images, std::size_t patch);
/// Inverse of patchify for a single image: [n, C p p] -> [C, H, W].
Tensor unpatchify(const Tensor& patches, std::size_t channels, std::size_t h, std::size_t w, std::size_t patch);

}  // namespace adacred
