// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "adacred/envs/latent_mdp.hpp"

namespace adacred {

/// Directed acyclic graph over named nodes.
class CausalGraph {
 public:
  std::size_t add_node(const std::string& name);
  // Throws LookupError for unknown endpoints and ContractError when the
  // edge would close a cycle.
  void add_edge(const std::string& from, const std::string& to);
  void add_edge(std::size_t from, std::size_t to);

  std::size_t node(const std::string& name) const;
  bool has_node(const std::string& name) const { return index_.count(name) != 0; }
  bool has_edge(std::size_t from, std::size_t to) const;
  std::size_t size() const { return names_.size(); }
  std::size_t edge_count() const;
  const std::string& name(std::size_t id) const { return names_.at(id); }
  const std::vector<std::size_t>& parents(std::size_t id) const { return parents_.at(id); }
  const std::vector<std::size_t>& children(std::size_t id) const { return children_.at(id); }

  // True when `to` is reachable from `from` along directed edges.
  bool reaches(std::size_t from, std::size_t to) const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
};

/// Node names used by unroll_masks.
std::string latent_node(std::size_t dim, std::size_t slice);
std::string action_node(std::size_t slice);
std::string reward_node(std::size_t slice);
std::string observation_node(std::size_t slice);

/// Unrolls the structural template over `slices` time steps:
///   g_t -> g_{t+1}, a_t -> g_{t+1}, r_t -> g_{t+1}, g_t -> o_t,
///   g_{t-1} -> r_t, a_{t-1} -> r_t.
/// Slice 0 carries g_0, a_0, o_0 and r_0 (which has no parents).
CausalGraph unroll_masks(const StructuralMasks& masks, std::size_t slices = 2);

/// d-separation of X and Y given Z (Bayes-ball reachability).
bool d_separated(const CausalGraph& graph, const std::vector<std::size_t>& x, const std::vector<std::size_t>& y,
                 const std::vector<std::size_t>& z);
bool d_separated(const CausalGraph& graph, const std::vector<std::string>& x, const std::vector<std::string>& y,
                 const std::vector<std::string>& z);

}  // namespace adacred
