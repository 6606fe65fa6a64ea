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

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "deskpose/error.hpp"
#include "deskpose/rng.hpp"

namespace deskpose {

using Shape = std::vector<size_t>;

inline size_t numel_of(const Shape& s) {
  size_t n = 1;
  for (size_t d : s) n *= d;
  return n;
}

// Dense row-major array of 64-bit reals. This is the storage type for model
// weights and other data that live outside an autodiff graph.
struct Array {
  Shape shape;
  std::vector<double> data;

  Array() = default;
  explicit Array(Shape s) : shape(std::move(s)), data(numel_of(shape), 0.0) {}
  Array(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    DKP_CHECK(numel_of(shape) == data.size(), "array shape/data mismatch");
  }

  static Array zeros(Shape s) { return Array(std::move(s)); }

  static Array full(Shape s, double v) {
    Array a(std::move(s));
    std::fill(a.data.begin(), a.data.end(), v);
    return a;
  }

  static Array scalar(double v) { return Array({1}, {v}); }

  static Array uniform(Shape s, Rng& rng, double lo, double hi) {
    Array a(std::move(s));
    for (double& x : a.data) x = rng.uniform(lo, hi);
    return a;
  }

  size_t numel() const { return data.size(); }
  size_t rank() const { return shape.size(); }

  double& at(size_t i) { return data[i]; }
  double at(size_t i) const { return data[i]; }

  // 2-D accessors; shape must be [rows x cols].
  double& at2(size_t r, size_t c) { return data[r * shape[1] + c]; }
  double at2(size_t r, size_t c) const { return data[r * shape[1] + c]; }
};

}  // namespace deskpose
