// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "adacred/envs/latent_mdp.hpp"

namespace adacred {

struct CompactPartition {
  std::vector<std::size_t> compact;
  std::vector<std::size_t> non_compact;

  bool is_compact(std::size_t dim) const;
};

/// A dimension is compact when it feeds the observation, the reward or a
/// different latent dimension at the next step. Self-loops alone do not count.
CompactPartition compact_partition(const StructuralMasks& masks);

struct SufficientSet {
  std::vector<std::size_t> dims;  // ascending
  bool degenerate = false;        // reward unreachable from every dimension
};

/// Dimensions with c_gr = 1 plus every dimension with a directed latent path
/// into one of them.
SufficientSet minimal_sufficient_set(const StructuralMasks& masks);

}  // namespace adacred
