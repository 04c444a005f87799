// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "adacred/numerics/rng.hpp"
#include "adacred/numerics/tensor.hpp"

namespace adacred {

enum class GumbelMode { kTrain, kEval };

/// Binary mask from keep probabilities in [0, 1].
///
/// kTrain: logistic noise is added to logit(s), the result passes through a
/// sigmoid at temperature tau and is hard-thresholded at 0.5. The forward
/// value is the hard 0/1 mask; the backward pass uses the soft sigmoid's
/// derivative (straight-through). kEval: s >= 0.5 gives 1, no gradient.
Tensor gumbel_sigmoid(const Tensor& scores, double tau, GumbelMode mode, Rng* rng);

}  // namespace adacred
