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

#include "deskpose/backbone.hpp"
#include "deskpose/graph.hpp"
#include "deskpose/rng.hpp"

namespace deskpose {

struct KeypointQuerySet {
  Tensor queries;     // [K' x C]
  Tensor references;  // [K' x 2] in [0,1]^2
  size_t num_real = 0;   // rows [0, num_real) are proposal-anchored
  size_t num_noisy = 0;  // rows [num_real, num_real+num_noisy) are the noisy group
  size_t rows() const { return num_real + num_noisy; }
};

// Fixed sine-cosine table for normalized coordinates. Channel t of axis a is
// sin (t even) or cos (t odd) of coord_a * T^(-2*floor(t/2)/(C/2)) with
// temperature T = 10000; the C/2 x-channels come first, then the y-channels.
// The table is a pure function of the coordinate values (it does not
// participate in differentiation).
Array sincos_embed(const Array& coords, size_t width);  // [K x 2] -> [K x width]

// queries = class_embed + sincos_embed(value of proposal.mu); references are
// the proposal locations themselves (still differentiable as tensors).
KeypointQuerySet init_queries(const CoarseProposal& proposal, Tensor class_embed);

// Training-only second query group at uniform random reference points.
// Throws ContractError when called with training == false.
Array sample_noisy_references(size_t num_keypoints, Rng& rng, bool training);

// Appends a noisy group sharing the same class embeddings.
KeypointQuerySet append_noisy_group(const KeypointQuerySet& base, Tensor class_embed,
                                    const Array& noisy_refs);

}  // namespace deskpose
