// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "adacred/model/adacred_model.hpp"

namespace adacred {

/// Mean cross-entropy over steps with valid != 0. Throws ContractError when
/// every step is padding.
Tensor action_loss(const Tensor& logits, const std::vector<std::size_t>& targets,
                   const std::vector<std::uint8_t>& valid);

struct ActivationStats {
  Tensor activ;       // scalar T_activ (differentiable while masks are live)
  double total = 0;   // T_total
  double target = 0;  // T_target
  double omega = 1;   // embedding-dimension weight
};

/// Per-layer statistics with targets keep * T_total and omega = dim / max dim.
std::vector<ActivationStats> activation_stats(const MaskState& masks, double keep_spatial, double keep_temporal);

/// Mean over layers of (omega * (T_activ - T_target) / T_total)^2.
Tensor efficiency_loss(const std::vector<ActivationStats>& stats);

}  // namespace adacred
