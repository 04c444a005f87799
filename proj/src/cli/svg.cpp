// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace adacred::cli {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void open_svg(std::ostringstream& os, double w, double h, const std::string& timestamp) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
     << "\" viewBox=\"0 0 " << num(w) << ' ' << num(h) << "\">\n";
  os << "<metadata>generated " << escape(timestamp) << "</metadata>\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

}  // namespace

std::string bar_chart_svg(const std::string& title, const std::vector<Bar>& bars, const std::string& timestamp) {
  const double bar_w = 60, gap = 30, left = 50, top = 40, plot_h = 220;
  const double width = left + double(bars.size()) * (bar_w + gap) + gap;
  const double height = top + plot_h + 60;
  double vmax = 0.0;
  for (const Bar& b : bars) {
    if (b.present) vmax = std::max(vmax, b.mean + b.std);
  }
  if (vmax <= 0.0) vmax = 1.0;
  std::ostringstream os;
  open_svg(os, width, height, timestamp);
  os << "<text x=\"" << num(width / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
     << "</text>\n";
  const double base = top + plot_h;
  os << "<line x1=\"" << num(left) << "\" y1=\"" << num(base) << "\" x2=\"" << num(width - gap / 2) << "\" y2=\""
     << num(base) << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << num(left - 5) << "\" y=\"" << num(top + 4) << "\" text-anchor=\"end\" font-size=\"10\">"
     << num(vmax) << "</text>\n";
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const Bar& b = bars[i];
    const double x = left + gap + double(i) * (bar_w + gap);
    if (b.present) {
      const double h = std::max(0.0, b.mean) / vmax * plot_h;
      os << "<rect x=\"" << num(x) << "\" y=\"" << num(base - h) << "\" width=\"" << num(bar_w) << "\" height=\""
         << num(h) << "\" fill=\"#4c78a8\"/>\n";
      const double lo = base - std::max(0.0, b.mean - b.std) / vmax * plot_h;
      const double hi = base - (b.mean + b.std) / vmax * plot_h;
      os << "<line x1=\"" << num(x + bar_w / 2) << "\" y1=\"" << num(lo) << "\" x2=\"" << num(x + bar_w / 2)
         << "\" y2=\"" << num(hi) << "\" stroke=\"black\"/>\n";
      os << "<text x=\"" << num(x + bar_w / 2) << "\" y=\"" << num(base - h - 4)
         << "\" text-anchor=\"middle\" font-size=\"10\">" << num(b.mean) << "</text>\n";
    } else {
      os << "<text x=\"" << num(x + bar_w / 2) << "\" y=\"" << num(base - 6)
         << "\" text-anchor=\"middle\" font-size=\"10\" fill=\"gray\">absent</text>\n";
    }
    os << "<text x=\"" << num(x + bar_w / 2) << "\" y=\"" << num(base + 16)
       << "\" text-anchor=\"middle\" font-size=\"11\">" << escape(b.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string mask_svg(const MaskView& v, const std::string& timestamp) {
  const double px = 6, pad = 8, label_w = 90;
  const double frame_w = double(v.width) * px, frame_h = double(v.height) * px;
  const double col_w = frame_w + pad;
  const std::size_t layers = v.spatial.size();
  const double strip_h = 14;
  const double width = label_w + double(v.steps) * col_w + pad;
  const double height = 30 + double(layers) * (frame_h + pad) + double(v.temporal.size()) * (strip_h + 4) + 40;
  const std::size_t per_row = v.patch ? v.width / v.patch : 0;
  std::ostringstream os;
  open_svg(os, width, height, timestamp);
  for (std::size_t t = 0; t < v.steps; ++t) {
    os << "<text x=\"" << num(label_w + double(t) * col_w + frame_w / 2)
       << "\" y=\"14\" text-anchor=\"middle\" font-size=\"10\">t=" << t << "</text>\n";
  }
  for (const auto& [step, label] : v.events) {
    if (step >= v.steps) continue;
    os << "<text x=\"" << num(label_w + double(step) * col_w + frame_w / 2)
       << "\" y=\"26\" text-anchor=\"middle\" font-size=\"9\" fill=\"#d62728\">" << escape(label) << "</text>\n";
  }
  double y = 30;
  for (std::size_t l = 0; l < layers; ++l) {
    os << "<text x=\"4\" y=\"" << num(y + frame_h / 2) << "\" font-size=\"10\">spatial " << l << "</text>\n";
    for (std::size_t t = 0; t < v.steps; ++t) {
      const double x0 = label_w + double(t) * col_w;
      const auto& frame = v.frames.at(t);
      for (std::size_t r = 0; r < v.height; ++r) {
        for (std::size_t c = 0; c < v.width; ++c) {
          const int g = int(std::lround(255.0 * std::clamp(double(frame[r * v.width + c]), 0.0, 1.0)));
          os << "<rect x=\"" << num(x0 + double(c) * px) << "\" y=\"" << num(y + double(r) * px) << "\" width=\""
             << num(px) << "\" height=\"" << num(px) << "\" fill=\"rgb(" << g << ',' << g << ',' << g << ")\"/>\n";
        }
      }
      const auto& keep = v.spatial[l].at(t);
      for (std::size_t p = 0; p < keep.size() && per_row; ++p) {
        if (keep[p]) continue;
        const double pxs = double(v.patch) * px;
        os << "<rect x=\"" << num(x0 + double(p % per_row) * pxs) << "\" y=\"" << num(y + double(p / per_row) * pxs)
           << "\" width=\"" << num(pxs) << "\" height=\"" << num(pxs)
           << "\" fill=\"black\" fill-opacity=\"0.7\" class=\"dropped\"/>\n";
      }
    }
    y += frame_h + pad;
  }
  for (std::size_t l = 0; l < v.temporal.size(); ++l) {
    os << "<text x=\"4\" y=\"" << num(y + 10) << "\" font-size=\"10\">temporal " << l << "</text>\n";
    const auto& strip = v.temporal[l];
    for (std::size_t i = 0; i < strip.size(); ++i) {
      const double x = label_w + double(i / 2) * col_w + (i % 2 ? frame_w / 2 : 0.0);
      os << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(frame_w / 2 - 1) << "\" height=\""
         << num(strip_h) << "\" fill=\"" << (strip[i] ? "#2ca02c" : "#bbbbbb") << "\"/>\n";
    }
    y += strip_h + 4;
  }
  os << "<text x=\"4\" y=\"" << num(y + 20)
     << "\" font-size=\"9\">temporal strips: left half g (pooled group), right half h (state); green kept</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace adacred::cli
