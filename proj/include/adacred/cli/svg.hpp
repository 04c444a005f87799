// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Plain SVG writers. The only run-dependent field is the timestamp inside
// <metadata>; everything else is a pure function of the inputs.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace adacred::cli {

struct Bar {
  std::string label;
  double mean = 0.0;
  double std = 0.0;
  bool present = true;
};

std::string bar_chart_svg(const std::string& title, const std::vector<Bar>& bars, const std::string& timestamp);

struct MaskView {
  std::size_t steps = 0;
  std::size_t height = 0;  // frame pixels
  std::size_t width = 0;
  std::size_t patch = 1;
  std::vector<std::vector<float>> frames;  // per step, first channel, row-major, in [0, 1]
  // spatial[layer][step][patch]: 1 kept, 0 dropped
  std::vector<std::vector<std::vector<std::uint8_t>>> spatial;
  // temporal[layer][position] over the interleaved (g, h) sequence
  std::vector<std::vector<std::uint8_t>> temporal;
  std::vector<std::pair<std::size_t, std::string>> events;  // (step, label)
};

std::string mask_svg(const MaskView& view, const std::string& timestamp);

}  // namespace adacred::cli
