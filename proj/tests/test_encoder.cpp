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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "deskpose/backbone.hpp"
#include "deskpose/error.hpp"
#include "deskpose/keypoint_encoder.hpp"
#include "deskpose/rng.hpp"

using namespace deskpose;

TEST_CASE("sincos_embed matches the closed form") {
  const size_t width = 12;  // 6 channels per axis
  const Array coords({2, 2}, {0.0, 1.0, 0.31, 0.77});
  const Array e = sincos_embed(coords, width);
  REQUIRE(e.shape == Shape{2, width});
  const size_t half = width / 2;
  for (size_t k = 0; k < 2; ++k)
    for (size_t axis = 0; axis < 2; ++axis)
      for (size_t t = 0; t < half; ++t) {
        const double freq = std::pow(10000.0, -2.0 * (double)(t / 2) / (double)half);
        const double arg = coords.at2(k, axis) * freq;
        const double want = t % 2 == 0 ? std::sin(arg) : std::cos(arg);
        CHECK(e.at2(k, axis * half + t) == doctest::Approx(want).epsilon(1e-12));
      }
  // Coordinate zero embeds as interleaved sin(0)/cos(0).
  CHECK(e.at2(0, 0) == 0.0);
  CHECK(e.at2(0, 1) == 1.0);
}

TEST_CASE("init_queries anchors references at the proposal") {
  Graph g;
  Rng rng(21);
  const size_t k = 5, c = 16;
  CoarseProposal prop;
  prop.mu = sigmoid(g.leaf(Array::uniform({k, 2}, rng, -1, 1)));
  prop.b = sigmoid(g.leaf(Array::uniform({k, 2}, rng, -1, 1)));
  Tensor class_embed = g.leaf(Array::uniform({k, c}, rng, -1, 1));
  KeypointQuerySet qs = init_queries(prop, class_embed);
  CHECK(qs.num_real == k);
  CHECK(qs.num_noisy == 0);
  CHECK(qs.references.value() == prop.mu.value());
  // queries = class_embed + positional table of the proposal values.
  const Array table = sincos_embed(Array({k, 2}, prop.mu.value()), c);
  for (size_t i = 0; i < k * c; ++i)
    CHECK(qs.queries.value()[i] ==
          doctest::Approx(class_embed.value()[i] + table.data[i]).epsilon(1e-12));
}

TEST_CASE("noisy references are train-only, in range, deterministic") {
  Rng a = Rng::stream(77, 1), b = Rng::stream(77, 1);
  const Array r1 = sample_noisy_references(6, a, true);
  const Array r2 = sample_noisy_references(6, b, true);
  CHECK(r1.data == r2.data);
  REQUIRE(r1.shape == Shape{6, 2});
  for (double v : r1.data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  Rng c = Rng::stream(77, 2);
  CHECK_THROWS_AS(sample_noisy_references(6, c, false), ContractError);
}

TEST_CASE("append_noisy_group doubles the rows and keeps the real block") {
  Graph g;
  Rng rng(4);
  const size_t k = 4, c = 8;
  CoarseProposal prop;
  prop.mu = sigmoid(g.leaf(Array::uniform({k, 2}, rng, -1, 1)));
  prop.b = sigmoid(g.leaf(Array::uniform({k, 2}, rng, -1, 1)));
  Tensor class_embed = g.leaf(Array::uniform({k, c}, rng, -1, 1));
  KeypointQuerySet base = init_queries(prop, class_embed);
  Rng noise = Rng::stream(9, 0);
  const Array refs = sample_noisy_references(k, noise, true);
  KeypointQuerySet both = append_noisy_group(base, class_embed, refs);
  CHECK(both.num_real == k);
  CHECK(both.num_noisy == k);
  CHECK(both.rows() == 2 * k);
  CHECK(both.queries.shape() == Shape{2 * k, c});
  // Real rows are bit-identical to the base group.
  for (size_t i = 0; i < k * c; ++i)
    CHECK(both.queries.value()[i] == base.queries.value()[i]);
  for (size_t i = 0; i < k * 2; ++i) {
    CHECK(both.references.value()[i] == base.references.value()[i]);
    CHECK(both.references.value()[k * 2 + i] == refs.data[i]);
  }
}
