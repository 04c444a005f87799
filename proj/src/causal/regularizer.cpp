// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/causal/regularizer.hpp"

#include <cmath>

#include "adacred/errors.hpp"

namespace adacred {

namespace {

double l1(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0)) throw ParameterError("lambda_reg must be >= 0");
}

}  // namespace

double reg_penalty(const StructuralMasks& masks, std::span<const double> theta, double lambda) {
  check_lambda(lambda);
  masks.validate();
  double ones = masks.c_ar;
  for (const auto* v : {&masks.c_gg, &masks.c_ag, &masks.c_rg, &masks.c_go, &masks.c_gr}) {
    for (std::uint8_t c : *v) ones += c;
  }
  return lambda * (ones + l1(theta));
}

double reg_penalty(std::span<const double> relaxed_masks, std::span<const double> theta, double lambda) {
  check_lambda(lambda);
  return lambda * (l1(relaxed_masks) + l1(theta));
}

}  // namespace adacred
