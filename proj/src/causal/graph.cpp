// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/causal/graph.hpp"

#include <algorithm>
#include <deque>

#include "adacred/errors.hpp"

namespace adacred {

std::size_t CausalGraph::add_node(const std::string& name) {
  if (index_.count(name)) throw ParameterError("duplicate node '" + name + "'");
  const std::size_t id = names_.size();
  names_.push_back(name);
  index_.emplace(name, id);
  parents_.emplace_back();
  children_.emplace_back();
  return id;
}

std::size_t CausalGraph::node(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw LookupError("unknown node '" + name + "'");
  return it->second;
}

void CausalGraph::add_edge(const std::string& from, const std::string& to) { add_edge(node(from), node(to)); }

void CausalGraph::add_edge(std::size_t from, std::size_t to) {
  if (from >= size() || to >= size()) throw LookupError("edge endpoint out of range");
  if (from == to || reaches(to, from)) {
    throw ContractError("edge " + names_[from] + " -> " + names_[to] + " would create a cycle");
  }
  if (has_edge(from, to)) return;
  children_[from].push_back(to);
  parents_[to].push_back(from);
}

bool CausalGraph::has_edge(std::size_t from, std::size_t to) const {
  const auto& c = children_.at(from);
  return std::find(c.begin(), c.end(), to) != c.end();
}

std::size_t CausalGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& c : children_) n += c.size();
  return n;
}

bool CausalGraph::reaches(std::size_t from, std::size_t to) const {
  std::vector<char> seen(size(), 0);
  std::vector<std::size_t> stack{from};
  seen[from] = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    if (v == to) return true;
    for (std::size_t c : children_[v]) {
      if (!seen[c]) {
        seen[c] = 1;
        stack.push_back(c);
      }
    }
  }
  return false;
}

std::string latent_node(std::size_t dim, std::size_t slice) {
  return "g" + std::to_string(dim) + "@" + std::to_string(slice);
}
std::string action_node(std::size_t slice) { return "a@" + std::to_string(slice); }
std::string reward_node(std::size_t slice) { return "r@" + std::to_string(slice); }
std::string observation_node(std::size_t slice) { return "o@" + std::to_string(slice); }

CausalGraph unroll_masks(const StructuralMasks& masks, std::size_t slices) {
  masks.validate();
  if (slices == 0) throw ParameterError("unrolled graph needs at least one slice");
  const std::size_t d = masks.d;
  CausalGraph g;
  for (std::size_t t = 0; t < slices; ++t) {
    for (std::size_t i = 0; i < d; ++i) g.add_node(latent_node(i, t));
    g.add_node(action_node(t));
    g.add_node(reward_node(t));
    g.add_node(observation_node(t));
  }
  for (std::size_t t = 0; t < slices; ++t) {
    for (std::size_t i = 0; i < d; ++i) {
      if (masks.c_go[i]) g.add_edge(latent_node(i, t), observation_node(t));
    }
    if (t == 0) continue;
    for (std::size_t i = 0; i < d; ++i) {
      const std::string target = latent_node(i, t);
      for (std::size_t j = 0; j < d; ++j) {
        if (masks.gg(i, j)) g.add_edge(latent_node(j, t - 1), target);
      }
      if (masks.c_ag[i]) g.add_edge(action_node(t - 1), target);
      if (masks.c_rg[i]) g.add_edge(reward_node(t - 1), target);
      if (masks.c_gr[i]) g.add_edge(latent_node(i, t - 1), reward_node(t));
    }
    if (masks.c_ar) g.add_edge(action_node(t - 1), reward_node(t));
  }
  return g;
}

bool d_separated(const CausalGraph& graph, const std::vector<std::size_t>& x, const std::vector<std::size_t>& y,
                 const std::vector<std::size_t>& z) {
  const std::size_t n = graph.size();
  std::vector<char> in_z(n, 0), in_x(n, 0);
  for (std::size_t v : z) {
    if (v >= n) throw LookupError("conditioning node out of range");
    in_z[v] = 1;
  }
  for (std::size_t v : x) {
    if (v >= n) throw LookupError("source node out of range");
    if (in_z[v]) throw ContractError("node sets must be disjoint");
    in_x[v] = 1;
  }
  for (std::size_t v : y) {
    if (v >= n) throw LookupError("target node out of range");
    if (in_z[v] || in_x[v]) throw ContractError("node sets must be disjoint");
  }

  // Nodes that are in Z or have a descendant in Z open colliders.
  std::vector<char> anc_z(n, 0);
  std::vector<std::size_t> stack(z.begin(), z.end());
  for (std::size_t v : z) anc_z[v] = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t p : graph.parents(v)) {
      if (!anc_z[p]) {
        anc_z[p] = 1;
        stack.push_back(p);
      }
    }
  }

  // State: (node, arrived from a child i.e. travelling upward).
  std::vector<char> visited_up(n, 0), visited_down(n, 0), reachable(n, 0);
  std::deque<std::pair<std::size_t, bool>> queue;
  for (std::size_t v : x) queue.emplace_back(v, true);
  while (!queue.empty()) {
    auto [v, up] = queue.front();
    queue.pop_front();
    if (up ? visited_up[v] : visited_down[v]) continue;
    (up ? visited_up : visited_down)[v] = 1;
    if (!in_z[v]) reachable[v] = 1;
    if (up) {
      if (in_z[v]) continue;
      for (std::size_t p : graph.parents(v)) queue.emplace_back(p, true);
      for (std::size_t c : graph.children(v)) queue.emplace_back(c, false);
    } else {
      if (!in_z[v]) {
        for (std::size_t c : graph.children(v)) queue.emplace_back(c, false);
      }
      if (anc_z[v]) {
        for (std::size_t p : graph.parents(v)) queue.emplace_back(p, true);
      }
    }
  }
  for (std::size_t v : y) {
    if (reachable[v]) return false;
  }
  return true;
}

bool d_separated(const CausalGraph& graph, const std::vector<std::string>& x, const std::vector<std::string>& y,
                 const std::vector<std::string>& z) {
  auto ids = [&](const std::vector<std::string>& names) {
    std::vector<std::size_t> out;
    for (const auto& s : names) out.push_back(graph.node(s));
    return out;
  };
  return d_separated(graph, ids(x), ids(y), ids(z));
}

}  // namespace adacred
