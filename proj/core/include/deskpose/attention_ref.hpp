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
#include <cstdint>
#include <vector>

namespace deskpose {

// Plain-double deformable attention, used as the numerical oracle for the
// autodiff implementation and as the benchmark kernel. Two variants share
// every query-side computation and differ only in where the value
// projection runs:
//   emsda_ref     projects each sampled feature vector (M*L*S projections),
//   msda_oracle   projects every position of every level, then samples.
// With no bias on the value/output projections the two are algebraically
// identical; outputs agree to floating-point roundoff.

struct RefLevel {
  size_t h = 0, w = 0;
  std::vector<double> feat;  // [h*w x channels], rows y-major
};

struct RefPyramid {
  size_t channels = 0;
  std::vector<RefLevel> levels;
  size_t positions() const {
    size_t n = 0;
    for (const RefLevel& l : levels) n += l.h * l.w;
    return n;
  }
};

struct EmsdaRefParams {
  size_t heads = 0, levels = 0, points = 0, width = 0;
  // Layouts match the autodiff side: value/output [C x C] row-major with
  // head i owning value-column block i; offset/logit columns ordered
  // (head, level, point), x/y innermost for offsets.
  std::vector<double> w_value;
  std::vector<double> w_output;
  std::vector<double> w_offset, b_offset;
  std::vector<double> w_attn, b_attn;
  size_t head_dim() const { return width / heads; }
};

// Accumulated floating-point operation counts (multiply-accumulate = 2).
struct FlopCount {
  uint64_t query_maps = 0;   // offset/logit affines and the softmax
  uint64_t sampling = 0;     // bilinear interpolation arithmetic
  uint64_t value_proj = 0;   // the W^v_i projections
  uint64_t mixing = 0;       // attention-weighted accumulation
  uint64_t output_proj = 0;  // final W^o
  uint64_t total() const { return query_maps + sampling + value_proj + mixing + output_proj; }
};

// query: [C]; ref: normalized [0,1]^2. Returns [C].
std::vector<double> emsda_ref(const std::vector<double>& query,
                              const std::array<double, 2>& ref, const RefPyramid& pyr,
                              const EmsdaRefParams& p, FlopCount* flops = nullptr);

std::vector<double> msda_oracle(const std::vector<double>& query,
                                const std::array<double, 2>& ref, const RefPyramid& pyr,
                                const EmsdaRefParams& p, FlopCount* flops = nullptr);

// Closed-form operation counts for one query; the instrumented counters
// must reproduce these exactly.
FlopCount emsda_analytic_flops(const EmsdaRefParams& p, const RefPyramid& pyr);
FlopCount msda_analytic_flops(const EmsdaRefParams& p, const RefPyramid& pyr);

}  // namespace deskpose
