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

#include <cmath>
#include <cstdint>

namespace deskpose {

// splitmix64. Every random decision in the project flows through an explicit
// instance of this generator; there is no global RNG state anywhere.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  // Derives a decorrelated stream, e.g. one per dataset scene.
  static Rng stream(uint64_t seed, uint64_t index) { return Rng(seed ^ index); }

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Laplace(0, b) via inverse CDF; uses only log, so the stream stays
  // reproducible for a fixed seed.
  double laplace(double b) {
    double u = next_double() - 0.5;
    double s = u < 0.0 ? -1.0 : 1.0;
    return -b * s * std::log(1.0 - 2.0 * std::fabs(u));
  }

  uint64_t next_below(uint64_t n) { return next_u64() % n; }

 private:
  uint64_t state_;
};

// Stateless position hash for procedural textures: same inputs, same bits,
// on every platform.
inline uint64_t hash_mix(uint64_t a, uint64_t b) {
  uint64_t z = a * 0x9E3779B97F4A7C15ULL + b;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline double hash_unit(uint64_t a, uint64_t b) {
  return static_cast<double>(hash_mix(a, b) >> 11) * 0x1.0p-53;
}

}  // namespace deskpose
