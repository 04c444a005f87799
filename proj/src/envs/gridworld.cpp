// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/envs/gridworld.hpp"

#include <cstdlib>

#include "adacred/errors.hpp"

namespace adacred {

void GridWorldSpec::validate() const {
  if (cols == 0 || rows == 0 || cell_px == 0) throw ParameterError("gridworld extents must be positive");
  if (episode_length == 0) throw ParameterError("episode length must be positive");
  if (frame_stack == 0 || frame_skip == 0) throw ParameterError("frame stack/skip must be positive");
  if (key_x >= cols || key_y >= rows || door_x >= cols || door_y >= rows) {
    throw ParameterError("key/door outside the playable area");
  }
  const std::size_t dist = std::size_t(std::abs(long(key_x) - long(door_x)) + std::abs(long(key_y) - long(door_y)));
  if (dist == 0) throw ParameterError("key and door must occupy different cells");
  if (dist < delay) {
    throw ParameterError("key-to-door distance " + std::to_string(dist) + " is shorter than the delay " +
                         std::to_string(delay));
  }
  if (cols * rows < 3) throw ParameterError("gridworld needs a free start cell");
}

std::pair<std::size_t, std::size_t> distractor_pixel_rows(const GridWorldSpec& spec) {
  return {spec.rows * spec.cell_px, spec.height()};
}

std::vector<float> render_gridworld(const GridWorldSpec& spec, const GridState& state) {
  if (state.agent_x >= spec.cols || state.agent_y >= spec.rows) {
    throw StateError("agent position (" + std::to_string(state.agent_x) + "," + std::to_string(state.agent_y) +
                     ") outside the grid");
  }
  const std::size_t h = spec.height(), w = spec.width(), px = spec.cell_px;
  std::vector<float> img(h * w, 0.0f);
  auto fill = [&](std::size_t cx, std::size_t cy, float v) {
    for (std::size_t y = cy * px; y < (cy + 1) * px; ++y) {
      for (std::size_t x = cx * px; x < (cx + 1) * px; ++x) img[y * w + x] = v;
    }
  };
  fill(spec.door_x, spec.door_y, spec.door_value);
  if (!state.has_key) fill(spec.key_x, spec.key_y, spec.key_value);
  fill(state.agent_x, state.agent_y, spec.agent_value);
  if (spec.distractors) {
    const auto [first, last] = distractor_pixel_rows(spec);
    const std::uint64_t frame_key = splitmix64(state.distractor_seed ^ splitmix64(state.t + 1));
    for (std::size_t y = first; y < last; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const std::uint64_t bits = splitmix64(frame_key + y * w + x);
        img[y * w + x] = float(bits >> 40) * 0x1.0p-24f;
      }
    }
  }
  return img;
}

GridWorld::GridWorld(GridWorldSpec spec) : spec_(spec) { spec_.validate(); }

Shape GridWorld::observation_shape() const { return {spec_.frame_stack, spec_.height(), spec_.width()}; }

std::vector<float> GridWorld::stacked() const {
  std::vector<float> out;
  out.reserve(spec_.frame_stack * spec_.height() * spec_.width());
  for (const auto& f : frames_) out.insert(out.end(), f.begin(), f.end());
  return out;
}

std::vector<float> GridWorld::reset(std::uint64_t seed) {
  Rng rng(seed);
  state_ = GridState{};
  do {
    state_.agent_x = rng.below(spec_.cols);
    state_.agent_y = rng.below(spec_.rows);
  } while ((state_.agent_x == spec_.key_x && state_.agent_y == spec_.key_y) ||
           (state_.agent_x == spec_.door_x && state_.agent_y == spec_.door_y));
  state_.distractor_seed = rng.next_u64();
  key_step_ = -1;
  door_step_ = -1;
  frames_.clear();
  const std::vector<float> first = render_gridworld(spec_, state_);
  for (std::size_t i = 0; i < spec_.frame_stack; ++i) frames_.push_back(first);
  return stacked();
}

StepResult GridWorld::step(std::size_t action) {
  if (action >= 4) throw RangeError("gridworld action " + std::to_string(action) + " out of range");
  const int decision = int(state_.t / spec_.frame_skip);
  StepResult out;
  for (std::size_t k = 0; k < spec_.frame_skip; ++k) {
    if (!state_.done) {
      switch (action) {
        case kUp:
          if (state_.agent_y > 0) --state_.agent_y;
          break;
        case kDown:
          if (state_.agent_y + 1 < spec_.rows) ++state_.agent_y;
          break;
        case kLeft:
          if (state_.agent_x > 0) --state_.agent_x;
          break;
        default:
          if (state_.agent_x + 1 < spec_.cols) ++state_.agent_x;
          break;
      }
      if (!state_.has_key && state_.agent_x == spec_.key_x && state_.agent_y == spec_.key_y) {
        state_.has_key = true;
        key_step_ = decision;
      } else if (state_.has_key && state_.agent_x == spec_.door_x && state_.agent_y == spec_.door_y) {
        state_.done = true;
        door_step_ = decision;
        out.reward += 1.0;
      }
    }
    ++state_.t;
  }
  out.done = state_.done;
  frames_.pop_front();
  frames_.push_back(render_gridworld(spec_, state_));
  out.observation = stacked();
  return out;
}

std::size_t KeyDoorOptimalPolicy::act(const Env& env, Rng&) {
  const auto* grid = dynamic_cast<const GridWorld*>(&env);
  if (!grid) throw ContractError("key-door policy needs a gridworld environment");
  const GridState& s = grid->state();
  const GridWorldSpec& spec = grid->spec();
  if (s.done) return kUp;
  const std::size_t tx = s.has_key ? spec.door_x : spec.key_x;
  const std::size_t ty = s.has_key ? spec.door_y : spec.key_y;
  if (s.agent_y > ty) return kUp;
  if (s.agent_y < ty) return kDown;
  if (s.agent_x > tx) return kLeft;
  return kRight;
}

}  // namespace adacred
