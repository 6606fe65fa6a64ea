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

#include <cstdint>
#include <string>
#include <vector>

namespace deskpose {

struct GradCase {
  std::string name;
  double max_rel_err = 0.0;
  size_t entries = 0;
  bool pass = false;
};

struct GradSuiteResult {
  std::vector<GradCase> cases;
  double worst = 0.0;
  bool all_pass = false;
};

// Finite-difference validation of every primitive gradient rule plus the
// assembled pipelines: the coarse proposal negative log likelihood, a tiny
// two-layer deformable decoder with the full residual objective, the flow
// density, and chained reference refinements. Deterministic per seed.
GradSuiteResult run_gradcheck_suite(uint64_t seed, double eps = 1e-5, double tol = 1e-4);

}  // namespace deskpose
