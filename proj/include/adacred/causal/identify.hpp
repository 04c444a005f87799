// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Structure identification from observed latent rollouts in the
// linear-Gaussian regime. Each next-state dimension is regressed on
// [1, g_t, action dummies, r_{t-1}] and the reward on [1, g_t, action dummies];
// single coefficients are tested through the Fisher z of the partial
// correlation, action groups through an F test. Observation masks are not
// identifiable from latent rollouts and are left empty.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adacred/envs/latent_mdp.hpp"

namespace adacred {

/// Flattened transitions (g_t, a_t, r_{t-1}) -> (g_{t+1}, r_t). Matrices are
/// row-major n x d.
struct TransitionTable {
  std::size_t d = 0;
  std::size_t action_count = 0;
  std::vector<double> g;
  std::vector<std::size_t> a;
  std::vector<double> r_prev;
  std::vector<double> g_next;
  std::vector<double> r;

  std::size_t size() const { return a.size(); }
};

TransitionTable flatten_rollouts(const LatentRollouts& rollouts, std::size_t action_count);

/// Permutes the targets (g_{t+1}, r_t) across rows, destroying every
/// dependence on the regressors.
TransitionTable permute_targets(const TransitionTable& table, std::uint64_t seed);

struct IdentifyOptions {
  double alpha = 0.01;
  bool bonferroni = true;
  double exact_tolerance = 1e-8;  // coefficient threshold on noise-free data
};

struct EdgeTest {
  std::string mask;  // c_gg, c_ag, c_rg, c_gr or c_ar
  std::size_t target = 0;
  std::size_t source = 0;
  double statistic = 0.0;
  double p_value = 1.0;
  bool edge = false;
};

struct IdentifyResult {
  StructuralMasks masks;
  std::vector<EdgeTest> tests;
  double threshold = 0.0;  // per-test significance level after correction
  std::size_t samples = 0;
};

IdentifyResult identify_structure(const TransitionTable& table, const IdentifyOptions& options = {});
IdentifyResult identify_structure(const LatentRollouts& rollouts, std::size_t action_count,
                                  const IdentifyOptions& options = {});

struct EdgeScore {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
};

/// Scores the identifiable entries (c_gg, c_ag, c_rg, c_gr, c_ar). With no
/// true and no estimated edges the score is a perfect 1.
EdgeScore edge_f1(const StructuralMasks& estimate, const StructuralMasks& truth);

struct RelaxedResult {
  StructuralMasks masks;
  std::vector<double> coefficients;  // standardized, concatenated per equation
  double penalty = 0.0;              // J_reg at the solution
};

/// Lasso-relaxed identification: per-equation least squares on standardized
/// regressors plus J_reg on the relaxed mask entries, solved by coordinate
/// descent. An edge is any coefficient with |beta| > support_tolerance. With
/// lambda = 0 this is plain least squares.
RelaxedResult relaxed_structure(const TransitionTable& table, double lambda, double support_tolerance = 1e-8);

}  // namespace adacred
