// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/causal/structure.hpp"

#include <algorithm>

namespace adacred {

bool CompactPartition::is_compact(std::size_t dim) const {
  return std::find(compact.begin(), compact.end(), dim) != compact.end();
}

CompactPartition compact_partition(const StructuralMasks& masks) {
  masks.validate();
  CompactPartition out;
  for (std::size_t i = 0; i < masks.d; ++i) {
    bool feeds = masks.c_go[i] || masks.c_gr[i];
    for (std::size_t j = 0; j < masks.d && !feeds; ++j) feeds = j != i && masks.gg(j, i);
    (feeds ? out.compact : out.non_compact).push_back(i);
  }
  return out;
}

SufficientSet minimal_sufficient_set(const StructuralMasks& masks) {
  masks.validate();
  const std::size_t d = masks.d;
  std::vector<char> in(d, 0);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < d; ++i) {
    if (masks.c_gr[i]) {
      in[i] = 1;
      stack.push_back(i);
    }
  }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < d; ++j) {
      if (masks.gg(i, j) && !in[j]) {
        in[j] = 1;
        stack.push_back(j);
      }
    }
  }
  SufficientSet out;
  for (std::size_t i = 0; i < d; ++i) {
    if (in[i]) out.dims.push_back(i);
  }
  out.degenerate = out.dims.empty();
  return out;
}

}  // namespace adacred
