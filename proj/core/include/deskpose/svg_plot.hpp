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

#pragma once

#include <array>
#include <string>
#include <vector>

namespace deskpose {

// Minimal static SVG emitter for the metric and benchmark plots. No
// dependencies; fixed 720x440 canvas with auto-scaled axes.

struct PlotSeries {
  std::string label;
  std::vector<std::array<double, 2>> points;  // (x, y)
};

void write_line_plot(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<PlotSeries>& series, bool log_y = false);

void write_bar_plot(const std::string& path, const std::string& title,
                    const std::string& y_label, const std::vector<std::string>& labels,
                    const std::vector<double>& values);

}  // namespace deskpose
