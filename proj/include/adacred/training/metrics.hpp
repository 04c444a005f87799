// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace adacred {

struct MetricsRow {
  std::size_t step = 0;
  double l_total = 0.0;
  double l_action = 0.0;
  double l_eff = 0.0;
  std::vector<double> keep;  // spatial 0, temporal 0, spatial 1, ...
  std::optional<double> eval_mean;
  std::optional<double> eval_std;
};

/// Append-only metrics table with a fixed CSV rendering.
class MetricsLog {
 public:
  explicit MetricsLog(std::size_t layers = 0) : layers_(layers) {}

  void append(MetricsRow row);
  void clear();
  std::vector<MetricsRow> rows() const;
  std::size_t size() const;

  std::string header() const;
  static std::string format_row(const MetricsRow& row);
  std::string to_csv() const;
  void write(const std::string& path) const;

 private:
  std::size_t layers_;
  mutable std::mutex mu_;
  std::vector<MetricsRow> rows_;
};

std::string format_real(double v);

}  // namespace adacred
