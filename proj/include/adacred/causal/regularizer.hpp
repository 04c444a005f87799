// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Edge-minimality penalty lambda * (sum of mask l1 norms + |theta|_1), added
// to a loss that is minimized.

#pragma once

#include <span>

#include "adacred/envs/latent_mdp.hpp"

namespace adacred {

double reg_penalty(const StructuralMasks& masks, std::span<const double> theta, double lambda);

/// Relaxed variant: mask entries are real-valued (for example regression
/// coefficients) and enter through their absolute values.
double reg_penalty(std::span<const double> relaxed_masks, std::span<const double> theta, double lambda);

}  // namespace adacred
