// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/model/gumbel.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "adacred/errors.hpp"

namespace adacred {

Tensor gumbel_sigmoid(const Tensor& scores, double tau, GumbelMode mode, Rng* rng) {
  if (!(tau > 0.0)) throw ParameterError("Gumbel temperature must be positive");
  auto sv = scores.data();
  for (Real s : sv) {
    if (!(s >= Real(0) && s <= Real(1))) throw RangeError("Gumbel-sigmoid scores must lie in [0, 1]");
  }
  std::vector<Real> hard(sv.size());
  if (mode == GumbelMode::kEval) {
    for (std::size_t i = 0; i < sv.size(); ++i) hard[i] = sv[i] >= Real(0.5) ? Real(1) : Real(0);
    return Tensor::from(scores.shape(), std::move(hard));
  }
  if (!rng) throw ContractError("training-mode Gumbel-sigmoid needs an RNG");
  constexpr double kClamp = 1e-6;
  // d(soft)/d(score), evaluated at the sampled noise
  auto slope = std::make_shared<std::vector<Real>>(sv.size());
  for (std::size_t i = 0; i < sv.size(); ++i) {
    const double s = std::clamp(double(sv[i]), kClamp, 1.0 - kClamp);
    const double u = rng->uniform_open();
    const double noise = std::log(u) - std::log1p(-u);
    const double logit = std::log(s) - std::log1p(-s);
    const double soft = 1.0 / (1.0 + std::exp(-(logit + noise) / tau));
    hard[i] = soft >= 0.5 ? Real(1) : Real(0);
    (*slope)[i] = Real(soft * (1.0 - soft) / (tau * s * (1.0 - s)));
  }
  return make_op_result(scores.shape(), std::move(hard), {scores}, [slope](detail::Node& self) {
    detail::Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    in.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) in.grad[i] += self.grad[i] * (*slope)[i];
  });
}

}  // namespace adacred
