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

// Wall-time comparison of the sample-then-project attention against the
// project-then-sample baseline on a few pyramid sizes. The analytic FLOP
// totals ride along as counters so rate differences can be read off the
// report directly.

#include <array>
#include <cstddef>
#include <vector>

#include <benchmark/benchmark.h>

#include "deskpose/attention_ref.hpp"
#include "deskpose/rng.hpp"

namespace {

using namespace deskpose;

struct Setup {
  RefPyramid pyr;
  EmsdaRefParams p;
  std::vector<double> query;
  std::array<double, 2> ref = {0.4, 0.6};
};

// Pyramid presets indexed by benchmark argument: base level size doubles
// while head/point counts stay fixed.
Setup make_setup(int64_t preset) {
  const std::vector<std::vector<std::array<size_t, 2>>> shapes = {
      {{16, 12}, {8, 6}},
      {{32, 24}, {16, 12}},
      {{64, 48}, {32, 24}},
      {{128, 96}, {64, 48}},
  };
  Setup s;
  Rng rng(0x9E3779B97F4A7C15ull + (uint64_t)preset);
  s.pyr.channels = 64;
  for (auto [h, w] : shapes[(size_t)preset]) {
    RefLevel lvl;
    lvl.h = h;
    lvl.w = w;
    lvl.feat.resize(h * w * s.pyr.channels);
    for (double& v : lvl.feat) v = rng.uniform(-1, 1);
    s.pyr.levels.push_back(std::move(lvl));
  }
  s.p.heads = 8;
  s.p.levels = s.pyr.levels.size();
  s.p.points = 4;
  s.p.width = s.pyr.channels;
  const size_t c = s.p.width, mls = s.p.heads * s.p.levels * s.p.points;
  auto fill = [&](std::vector<double>& v, size_t n, double amp) {
    v.resize(n);
    for (double& x : v) x = rng.uniform(-amp, amp);
  };
  fill(s.p.w_value, c * c, 0.125);
  fill(s.p.w_output, c * c, 0.125);
  fill(s.p.w_offset, c * mls * 2, 0.1);
  fill(s.p.b_offset, mls * 2, 2.0);
  fill(s.p.w_attn, c * mls, 0.5);
  fill(s.p.b_attn, mls, 0.5);
  s.query.resize(c);
  for (double& x : s.query) x = rng.uniform(-1, 1);
  return s;
}

void BM_emsda(benchmark::State& state) {
  Setup s = make_setup(state.range(0));
  for (auto _ : state) {
    std::vector<double> out = emsda_ref(s.query, s.ref, s.pyr, s.p, nullptr);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["flops"] = (double)emsda_analytic_flops(s.p, s.pyr).total();
  state.counters["positions"] = (double)s.pyr.positions();
}

void BM_msda(benchmark::State& state) {
  Setup s = make_setup(state.range(0));
  for (auto _ : state) {
    std::vector<double> out = msda_oracle(s.query, s.ref, s.pyr, s.p, nullptr);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["flops"] = (double)msda_analytic_flops(s.p, s.pyr).total();
  state.counters["positions"] = (double)s.pyr.positions();
}

BENCHMARK(BM_emsda)->DenseRange(0, 3);
BENCHMARK(BM_msda)->DenseRange(0, 3);

}  // namespace

BENCHMARK_MAIN();
