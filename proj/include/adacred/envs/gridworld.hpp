// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Pixel key-door gridworld. The agent must visit the key cell, then the door
// cell; the door pays +1 once and the episode becomes absorbing. Rows below
// the playable area hold animated noise unrelated to the task.

#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "adacred/envs/env.hpp"

namespace adacred {

enum GridAction : std::size_t { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

struct GridWorldSpec {
  std::size_t cols = 5;
  std::size_t rows = 4;  // playable rows
  std::size_t distractor_rows = 1;
  std::size_t cell_px = 2;
  std::size_t episode_length = 30;
  std::size_t delay = 5;  // minimum key-to-door distance in steps
  bool distractors = true;
  std::size_t key_x = 0, key_y = 0;
  std::size_t door_x = 4, door_y = 3;
  std::size_t frame_stack = 1;
  std::size_t frame_skip = 1;
  float agent_value = 1.0f;
  float key_value = 0.6f;
  float door_value = 0.3f;

  std::size_t height() const { return (rows + distractor_rows) * cell_px; }
  std::size_t width() const { return cols * cell_px; }
  void validate() const;
};

struct GridState {
  std::size_t agent_x = 0, agent_y = 0;
  bool has_key = false;
  bool done = false;
  std::size_t t = 0;
  std::uint64_t distractor_seed = 0;
};

/// One 1 x H x W frame. Throws StateError when positions are out of bounds.
std::vector<float> render_gridworld(const GridWorldSpec& spec, const GridState& state);

/// Pixel rows [first, last) that carry distractor noise.
std::pair<std::size_t, std::size_t> distractor_pixel_rows(const GridWorldSpec& spec);

class GridWorld : public Env {
 public:
  explicit GridWorld(GridWorldSpec spec);

  std::string id() const override { return "keydoor"; }
  std::size_t action_count() const override { return 4; }
  Shape observation_shape() const override;
  std::size_t episode_length() const override { return spec_.episode_length; }
  std::vector<float> reset(std::uint64_t seed) override;
  StepResult step(std::size_t action) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<GridWorld>(*this); }

  const GridWorldSpec& spec() const { return spec_; }
  const GridState& state() const { return state_; }
  int key_step() const { return key_step_; }
  int door_step() const { return door_step_; }

 private:
  std::vector<float> stacked() const;

  GridWorldSpec spec_;
  GridState state_;
  std::deque<std::vector<float>> frames_;
  int key_step_ = -1;
  int door_step_ = -1;
};

/// Shortest-path scripted policy: vertical moves first, then horizontal.
class KeyDoorOptimalPolicy : public Policy {
 public:
  std::string tag() const override { return "optimal"; }
  std::size_t act(const Env& env, Rng& rng) override;
};

}  // namespace adacred
