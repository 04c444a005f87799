// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/model/layers.hpp"

#include <cmath>

#include "adacred/errors.hpp"
#include "adacred/numerics/ops.hpp"

namespace adacred {

Tensor ParamStore::add(const std::string& name, Tensor t, bool decay) {
  for (const NamedParam& p : params_) {
    if (p.name == name) throw ContractError("duplicate parameter name '" + name + "'");
  }
  t.set_requires_grad(true);
  params_.push_back({name, t, decay});
  credit_.push_back(credit_scope_);
  return t;
}

Tensor ParamStore::normal(const std::string& name, Shape shape, double stddev, Rng& rng, bool decay) {
  std::vector<Real> values(shape_numel(shape));
  for (Real& v : values) v = Real(stddev * rng.normal());
  return add(name, Tensor::from(std::move(shape), std::move(values)), decay);
}

Tensor ParamStore::constant(const std::string& name, Shape shape, Real value) {
  return add(name, Tensor::full(std::move(shape), value), false);
}

const Tensor& ParamStore::get(const std::string& name) const {
  for (const NamedParam& p : params_) {
    if (p.name == name) return p.tensor;
  }
  throw LookupError("no parameter named '" + name + "'");
}

std::size_t ParamStore::count() const {
  std::size_t n = 0;
  for (const NamedParam& p : params_) n += p.tensor.numel();
  return n;
}

Tensor apply_dropout(const Tensor& x, const DropoutCtx& ctx) {
  if (ctx.p <= 0.0) return x;
  if (!ctx.rng) throw ContractError("dropout needs an RNG");
  return ops::dropout(x, ctx.p, *ctx.rng);
}

Linear Linear::make(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, double stddev,
                    Rng& rng, bool bias) {
  Linear l;
  l.w = store.normal(name + ".w", {in, out}, stddev, rng, true);
  l.has_bias = bias;
  if (bias) l.b = store.constant(name + ".b", {out}, Real(0));
  return l;
}

Tensor Linear::operator()(const Tensor& x) const { return ops::linear(x, w, has_bias ? &b : nullptr); }

LayerNorm LayerNorm::make(ParamStore& store, const std::string& name, std::size_t dim) {
  LayerNorm ln;
  ln.gain = store.constant(name + ".gain", {dim}, Real(1));
  ln.bias = store.constant(name + ".bias", {dim}, Real(0));
  return ln;
}

Tensor LayerNorm::operator()(const Tensor& x) const { return ops::layer_norm(x, gain, bias); }

Attention Attention::make(ParamStore& store, const std::string& name, std::size_t dim, std::size_t heads,
                          double stddev, Rng& rng) {
  if (heads == 0 || dim % heads) throw ConfigError("embed dim must be divisible by head count");
  Attention a;
  a.qkv = Linear::make(store, name + ".qkv", dim, 3 * dim, stddev, rng);
  a.proj = Linear::make(store, name + ".proj", dim, dim, stddev, rng);
  a.heads = heads;
  return a;
}

Tensor Attention::operator()(const Tensor& x, const Tensor* bias, const DropoutCtx& drop) const {
  if (x.rank() != 3) throw DimensionError("attention input must be [M, N, D]");
  const std::size_t m = x.dim(0), n = x.dim(1), d = x.dim(2);
  const std::size_t dh = d / heads;
  // [M, N, 3, H, dh] -> [3, M, H, N, dh]
  Tensor qkv5 = ops::reshape(qkv(x), {m, n, 3, heads, dh});
  Tensor split = ops::permute(qkv5, {2, 0, 3, 1, 4});
  auto part = [&](std::size_t k) { return ops::reshape(ops::index_select(split, 0, {k}), {m, heads, n, dh}); };
  Tensor q = part(0), k = part(1), v = part(2);
  Tensor scores = ops::scale(ops::bmm(q, k, true), Real(1.0 / std::sqrt(double(dh))));
  if (bias) scores = ops::add(scores, *bias);
  Tensor attn = ops::softmax(scores, 3);
  Tensor out = ops::bmm(attn, v);  // [M, H, N, dh]
  out = ops::reshape(ops::permute(out, {0, 2, 1, 3}), {m, n, d});
  return apply_dropout(proj(out), drop);
}

Mlp Mlp::make(ParamStore& store, const std::string& name, std::size_t dim, std::size_t hidden, double stddev,
              Rng& rng) {
  Mlp mlp;
  mlp.fc1 = Linear::make(store, name + ".fc1", dim, hidden, stddev, rng);
  mlp.fc2 = Linear::make(store, name + ".fc2", hidden, dim, stddev, rng);
  return mlp;
}

Tensor Mlp::operator()(const Tensor& x, const DropoutCtx& drop) const {
  return apply_dropout(fc2(ops::gelu(fc1(x))), drop);
}

Block Block::make(ParamStore& store, const std::string& name, std::size_t dim, std::size_t heads,
                  std::size_t mlp_ratio, double stddev, Rng& rng) {
  Block b;
  b.ln1 = LayerNorm::make(store, name + ".ln1", dim);
  b.attn = Attention::make(store, name + ".attn", dim, heads, stddev, rng);
  b.ln2 = LayerNorm::make(store, name + ".ln2", dim);
  b.mlp = Mlp::make(store, name + ".mlp", dim, dim * mlp_ratio, stddev, rng);
  return b;
}

Tensor Block::operator()(const Tensor& x, const Tensor* bias, const DropoutCtx& drop) const {
  Tensor h = ops::add(x, attn(ln1(x), bias, drop));
  return ops::add(h, mlp(ln2(h), drop));
}

CreditHead CreditHead::make(ParamStore& store, const std::string& name, std::size_t dim, double stddev,
                            double bias_init, Rng& rng) {
  CreditHead c;
  c.ln = LayerNorm::make(store, name + ".ln", dim);
  const std::size_t hidden = std::max<std::size_t>(1, dim / 4);
  c.fc1 = Linear::make(store, name + ".fc1", dim, hidden, 1.0 / std::sqrt(double(dim)), rng);
  c.fc2 = Linear::make(store, name + ".fc2", hidden, 1, stddev, rng);
  c.fc2.b.mutable_data()[0] = Real(bias_init);
  return c;
}

Tensor CreditHead::operator()(const Tensor& x) const {
  Tensor s = ops::sigmoid(fc2(ops::gelu(fc1(ln(x)))));
  Shape shape(x.shape().begin(), x.shape().end() - 1);
  return ops::reshape(s, shape);
}

Tensor patchify(const Tensor& images, std::size_t patch) {
  if (images.rank() != 4) throw DimensionError("patchify expects [M, C, H, W]");
  const std::size_t m = images.dim(0), c = images.dim(1), h = images.dim(2), w = images.dim(3);
  if (patch == 0 || h % patch || w % patch) {
    throw DimensionError("image " + std::to_string(h) + "x" + std::to_string(w) + " not divisible by patch " +
                         std::to_string(patch));
  }
  const std::size_t gh = h / patch, gw = w / patch;
  Tensor x = ops::reshape(images, {m, c, gh, patch, gw, patch});
  x = ops::permute(x, {0, 2, 4, 1, 3, 5});
  return ops::reshape(x, {m, gh * gw, c * patch * patch});
}

Tensor unpatchify(const Tensor& patches, std::size_t channels, std::size_t h, std::size_t w, std::size_t patch) {
  const std::size_t gh = h / patch, gw = w / patch;
  if (patches.rank() != 2 || patches.dim(0) != gh * gw || patches.dim(1) != channels * patch * patch) {
    throw DimensionError("unpatchify: patch tensor does not match the image geometry");
  }
  Tensor x = ops::reshape(patches, {gh, gw, channels, patch, patch});
  x = ops::permute(x, {2, 0, 3, 1, 4});
  return ops::reshape(x, {channels, h, w});
}

}  // namespace adacred
