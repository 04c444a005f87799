// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Central-difference gradient oracle shared by the unit and acceptance tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "adacred/numerics/ops.hpp"
#include "adacred/numerics/rng.hpp"
#include "adacred/numerics/tensor.hpp"

namespace adacred::testing {

struct GradCheck {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

// |analytic - numeric| / max(|analytic|, |numeric|, floor)
inline double rel_err(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares reverse-mode gradients of the scalar `loss_fn(inputs)` against
/// central differences for every element of every input.
inline GradCheck check_gradients(const std::function<Tensor(const std::vector<Tensor>&)>& loss_fn,
                                 std::vector<Tensor> inputs, double eps, double floor) {
  for (Tensor& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  {
    Tape tape;
    Tensor loss;
    {
      TapeScope scope(tape);
      loss = loss_fn(inputs);
    }
    backward(loss, tape);
  }
  GradCheck out;
  for (Tensor& t : inputs) {
    const std::vector<Real> analytic(t.grad().begin(), t.grad().end());
    for (std::size_t k = 0; k < t.numel(); ++k) {
      const Real saved = t.data()[k];
      t.mutable_data()[k] = Real(saved + eps);
      const double plus = loss_fn(inputs).item();
      t.mutable_data()[k] = Real(saved - eps);
      const double minus = loss_fn(inputs).item();
      t.mutable_data()[k] = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      out.max_rel_err = std::max(out.max_rel_err, rel_err(analytic[k], numeric, floor));
      ++out.checked;
    }
  }
  return out;
}

/// Fixed random projection turning any tensor into a scalar loss.
inline Tensor project(const Tensor& y, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Real> w(y.numel());
  for (Real& v : w) v = Real(rng.uniform(-1.0, 1.0));
  return ops::dot_const(y, w);
}

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<Real> v(shape_numel(shape));
  for (Real& x : v) x = Real(rng.uniform(lo, hi));
  return Tensor::from(std::move(shape), std::move(v));
}

}  // namespace adacred::testing
