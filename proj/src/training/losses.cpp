// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/training/losses.hpp"

#include <algorithm>

#include "adacred/errors.hpp"
#include "adacred/numerics/ops.hpp"

namespace adacred {

Tensor action_loss(const Tensor& logits, const std::vector<std::size_t>& targets,
                   const std::vector<std::uint8_t>& valid) {
  if (logits.rank() != 2 || targets.size() != logits.dim(0) || valid.size() != logits.dim(0)) {
    throw DimensionError("action_loss: logits [N, K] need N targets and N valid flags");
  }
  std::vector<Real> weights(valid.size());
  bool any = false;
  for (std::size_t i = 0; i < valid.size(); ++i) {
    weights[i] = valid[i] ? Real(1) : Real(0);
    any = any || valid[i];
  }
  if (!any) throw ContractError("action_loss: every position is padding");
  return ops::cross_entropy(logits, targets, weights);
}

std::vector<ActivationStats> activation_stats(const MaskState& masks, double keep_spatial, double keep_temporal) {
  std::size_t max_dim = 0;
  for (const LayerActivation& a : masks.stats) max_dim = std::max(max_dim, a.dim);
  std::vector<ActivationStats> out;
  for (const LayerActivation& a : masks.stats) {
    if (!(a.total > 0)) throw ContractError("activation statistics need a positive token total");
    ActivationStats s;
    s.activ = a.activ;
    s.total = a.total;
    s.target = (a.spatial ? keep_spatial : keep_temporal) * a.total;
    s.omega = double(a.dim) / double(max_dim);
    out.push_back(s);
  }
  return out;
}

Tensor efficiency_loss(const std::vector<ActivationStats>& stats) {
  if (stats.empty()) throw ContractError("efficiency_loss: no layers");
  std::vector<Tensor> terms;
  for (const ActivationStats& s : stats) {
    if (!(s.total > 0)) throw ContractError("efficiency_loss: T_total must be positive");
    const double k = s.omega / s.total;
    Tensor diff = ops::add_scalar(ops::scale(s.activ, Real(k)), Real(-k * s.target));
    terms.push_back(ops::reshape(ops::square(diff), {1}));
  }
  return ops::mean(ops::concat(terms, 0));
}

}  // namespace adacred
