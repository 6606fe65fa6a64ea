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

#include <functional>
#include <vector>

#include "deskpose/graph.hpp"

namespace deskpose {

// Builds a scalar loss from leaf tensors created out of the given arrays.
// Must be deterministic: same inputs, same loss, bit for bit.
using ScalarFn = std::function<Tensor(Graph&, const std::vector<Tensor>&)>;

struct GradCheckReport {
  double max_rel_err = 0.0;  // max |analytic - numeric| / max(1, |analytic|)
  size_t entries = 0;        // input entries compared
  double loss = 0.0;         // loss at the unperturbed point
};

// Central finite differences against reverse-mode gradients for every entry
// of every input. Evaluates f twice at the base point first and throws
// OracleError if the two losses are not bit-identical (a non-deterministic f
// would silently invalidate the comparison).
GradCheckReport finite_diff_check(const ScalarFn& f, const std::vector<Array>& inputs,
                                  double eps = 1e-5);

GradCheckReport finite_diff_check(const ScalarFn& f, const Array& input, double eps = 1e-5);

}  // namespace deskpose
