// Copyright 2026 The deskpose Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "deskpose/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "deskpose/error.hpp"

namespace deskpose {

namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 64, kRight = 24, kTop = 40, kBottom = 48;

const char* kColors[] = {"#2563eb", "#dc2626", "#059669", "#d97706", "#7c3aed", "#0891b2"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

std::string fmt_tick(double v) {
  std::ostringstream os;
  if (v != 0 && (std::fabs(v) >= 1e5 || std::fabs(v) < 1e-3)) {
    os.precision(1);
    os << std::scientific << v;
  } else {
    os.precision(4);
    os << v;
  }
  return os.str();
}

struct Frame {
  double x_lo, x_hi, y_lo, y_hi;
  bool log_y;
  double px(double x) const {
    return kLeft + (x - x_lo) / (x_hi - x_lo) * (kWidth - kLeft - kRight);
  }
  double py(double y) const {
    const double v = log_y ? std::log10(y) : y;
    return kHeight - kBottom - (v - y_lo) / (y_hi - y_lo) * (kHeight - kTop - kBottom);
  }
};

void open_svg(std::ostringstream& svg, const std::string& title) {
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << escape(title) << "</text>\n";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write plot '" + path + "'");
  out << content;
}

}  // namespace

void write_line_plot(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<PlotSeries>& series, bool log_y) {
  DKP_CHECK(!series.empty(), "plot needs at least one series");
  double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
  for (const PlotSeries& s : series)
    for (const auto& p : s.points) {
      double y = p[1];
      if (log_y) {
        DKP_CHECK(y > 0, "log-scale plot needs positive values");
        y = std::log10(y);
      }
      x_lo = std::min(x_lo, p[0]);
      x_hi = std::max(x_hi, p[0]);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  if (x_hi <= x_lo) x_hi = x_lo + 1;
  if (y_hi <= y_lo) y_hi = y_lo + 1;
  const double pad = 0.05 * (y_hi - y_lo);
  Frame f{x_lo, x_hi, y_lo - pad, y_hi + pad, log_y};

  std::ostringstream svg;
  open_svg(svg, title);
  // Axes and ticks.
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\""
      << kWidth - kLeft - kRight << "\" height=\"" << kHeight - kTop - kBottom
      << "\" fill=\"none\" stroke=\"#888\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double ty = f.y_lo + (f.y_hi - f.y_lo) * i / 4.0;
    const double yy = f.py(log_y ? std::pow(10.0, ty) : ty);
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << yy << "\" x2=\"" << kWidth - kRight
        << "\" y2=\"" << yy << "\" stroke=\"#ddd\"/>\n"
        << "<text x=\"" << kLeft - 6 << "\" y=\"" << yy + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt_tick(log_y ? std::pow(10.0, ty) : ty) << "</text>\n";
    const double tx = f.x_lo + (f.x_hi - f.x_lo) * i / 4.0;
    svg << "<text x=\"" << f.px(tx) << "\" y=\"" << kHeight - kBottom + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt_tick(tx) << "</text>\n";
  }
  svg << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << escape(x_label) << "</text>\n"
      << "<text x=\"16\" y=\"" << (kTop + kHeight - kBottom) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << (kTop + kHeight - kBottom) / 2 << ")\">"
      << escape(y_label) << "</text>\n";

  for (size_t si = 0; si < series.size(); ++si) {
    const char* color = kColors[si % 6];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : series[si].points) svg << f.px(p[0]) << "," << f.py(p[1]) << " ";
    svg << "\"/>\n";
    svg << "<text x=\"" << kWidth - kRight - 8 << "\" y=\"" << kTop + 16 + 16 * si
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
        << color << "\">" << escape(series[si].label) << "</text>\n";
  }
  svg << "</svg>\n";
  write_file(path, svg.str());
}

void write_bar_plot(const std::string& path, const std::string& title,
                    const std::string& y_label, const std::vector<std::string>& labels,
                    const std::vector<double>& values) {
  DKP_CHECK(!values.empty() && labels.size() == values.size(), "bar plot inputs mismatch");
  double y_hi = 0;
  for (double v : values) y_hi = std::max(y_hi, v);
  if (y_hi <= 0) y_hi = 1;
  Frame f{0, 1, 0, y_hi * 1.05, false};

  std::ostringstream svg;
  open_svg(svg, title);
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\""
      << kWidth - kLeft - kRight << "\" height=\"" << kHeight - kTop - kBottom
      << "\" fill=\"none\" stroke=\"#888\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double ty = f.y_hi * i / 4.0;
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << f.py(ty) << "\" x2=\"" << kWidth - kRight
        << "\" y2=\"" << f.py(ty) << "\" stroke=\"#ddd\"/>\n"
        << "<text x=\"" << kLeft - 6 << "\" y=\"" << f.py(ty) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt_tick(ty) << "</text>\n";
  }
  svg << "<text x=\"16\" y=\"" << (kTop + kHeight - kBottom) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << (kTop + kHeight - kBottom) / 2 << ")\">"
      << escape(y_label) << "</text>\n";

  const double span = kWidth - kLeft - kRight;
  const double slot = span / static_cast<double>(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    const double x = kLeft + slot * (static_cast<double>(i) + 0.2);
    const double y = f.py(values[i]);
    svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << slot * 0.6
        << "\" height=\"" << (kHeight - kBottom) - y << "\" fill=\"" << kColors[0]
        << "\"/>\n"
        << "<text x=\"" << x + slot * 0.3 << "\" y=\"" << kHeight - kBottom + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
        << escape(labels[i]) << "</text>\n";
  }
  svg << "</svg>\n";
  write_file(path, svg.str());
}

}  // namespace deskpose
