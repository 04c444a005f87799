// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable primitives. Every op validates shapes and throws
// DimensionError on mismatch.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "adacred/numerics/rng.hpp"
#include "adacred/numerics/tensor.hpp"

namespace adacred::ops {

// Elementwise. `b` may equal a's shape or a trailing suffix of it, in which
// case it is broadcast over the leading axes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, Real factor);
Tensor add_scalar(const Tensor& a, Real value);
Tensor square(const Tensor& a);

Tensor gelu(const Tensor& x);  // tanh approximation
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);

// a[m,k] x b[k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
// x[..., k] x w[k,n] (+ bias[n]) -> [..., n]
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor* bias);
// Batched over equal leading axes: a[..., m,k] x b[..., k,n] -> [..., m,n].
// With transpose_b, b is [..., n,k].
Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b = false);

Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& order);
// Concatenate along `axis`; all other extents must agree.
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
// Gather `indices` along `axis` (indices may repeat).
Tensor index_select(const Tensor& x, std::size_t axis, const std::vector<std::size_t>& indices);

Tensor softmax(const Tensor& x, std::size_t axis);
// Normalizes over the last axis with variance epsilon `eps`, then applies
// gain[d] and bias[d].
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, Real eps = Real(1e-5));

// Valid cross-correlation. img [C,H,W] or [N,C,H,W]; kernels [C',C,k,k];
// bias [C'] (optional). Output extent floor((H-k)/stride)+1.
Tensor conv2d(const Tensor& img, const Tensor& kernels, const Tensor* bias, std::size_t stride);

Tensor sum(const Tensor& x);   // -> scalar
Tensor mean(const Tensor& x);  // -> scalar
// Weighted sum against a constant weight vector of the same numel -> scalar.
Tensor dot_const(const Tensor& x, std::span<const Real> weights);

// table[V,D], ids -> [ids.size(), D]
Tensor embedding(const Tensor& table, const std::vector<std::size_t>& ids);

// x[..., D] scaled row-wise by m[...] (m has x's shape minus the last axis).
Tensor gate_rows(const Tensor& x, const Tensor& m);

// Weighted mean of per-row cross-entropy. logits [N,K]; weights (0 excludes a row).
Tensor cross_entropy(const Tensor& logits, const std::vector<std::size_t>& targets,
                     std::span<const Real> weights);

// Inverted dropout; identity when p == 0.
Tensor dropout(const Tensor& x, double p, Rng& rng);

}  // namespace adacred::ops
