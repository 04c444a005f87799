// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/training/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "adacred/errors.hpp"

namespace adacred {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void MetricsLog::append(MetricsRow row) {
  std::lock_guard<std::mutex> lock(mu_);
  if (layers_ && row.keep.size() != 2 * layers_) throw DimensionError("metrics row has wrong keep-ratio count");
  rows_.push_back(std::move(row));
}

void MetricsLog::clear() {
  std::lock_guard<std::mutex> lock(mu_);
  rows_.clear();
}

std::vector<MetricsRow> MetricsLog::rows() const {
  std::lock_guard<std::mutex> lock(mu_);
  return rows_;
}

std::size_t MetricsLog::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return rows_.size();
}

std::string MetricsLog::header() const {
  std::string h = "step,l_total,l_action,l_eff";
  for (std::size_t l = 0; l < layers_; ++l) {
    h += ",keep_spatial_" + std::to_string(l) + ",keep_temporal_" + std::to_string(l);
  }
  return h + ",eval_return_mean,eval_return_std";
}

std::string MetricsLog::format_row(const MetricsRow& row) {
  std::string line = std::to_string(row.step) + "," + format_real(row.l_total) + "," + format_real(row.l_action) +
                     "," + format_real(row.l_eff);
  for (double k : row.keep) line += "," + format_real(k);
  line += "," + (row.eval_mean ? format_real(*row.eval_mean) : std::string());
  line += "," + (row.eval_std ? format_real(*row.eval_std) : std::string());
  return line;
}

std::string MetricsLog::to_csv() const {
  std::ostringstream out;
  out << header() << '\n';
  for (const MetricsRow& r : rows()) out << format_row(r) << '\n';
  return out.str();
}

void MetricsLog::write(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << to_csv();
}

}  // namespace adacred
