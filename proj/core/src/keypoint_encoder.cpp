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

#include "deskpose/keypoint_encoder.hpp"

#include <cmath>

#include "deskpose/error.hpp"

namespace deskpose {

Array sincos_embed(const Array& coords, size_t width) {
  if (width % 4 != 0) throw ConfigError("sincos embedding width must be divisible by 4");
  DKP_CHECK(coords.rank() == 2 && coords.shape[1] == 2, "coords must be [K x 2]");
  const size_t K = coords.shape[0];
  const size_t per_axis = width / 2;
  constexpr double kTemperature = 10000.0;
  Array out({K, width});
  for (size_t k = 0; k < K; ++k)
    for (size_t axis = 0; axis < 2; ++axis) {
      const double v = coords.at2(k, axis);
      for (size_t t = 0; t < per_axis; ++t) {
        const double freq =
            std::pow(kTemperature, -2.0 * static_cast<double>(t / 2) /
                                       static_cast<double>(per_axis));
        const double arg = v * freq;
        out.at2(k, axis * per_axis + t) = (t % 2 == 0) ? std::sin(arg) : std::cos(arg);
      }
    }
  return out;
}

KeypointQuerySet init_queries(const CoarseProposal& proposal, Tensor class_embed) {
  Graph* g = class_embed.graph();
  const size_t K = proposal.mu.shape()[0];
  DKP_CHECK(class_embed.shape()[0] == K, "class embedding rows != K");
  const size_t C = class_embed.shape()[1];
  Array pos = sincos_embed(g->value_of(proposal.mu), C);
  KeypointQuerySet qs;
  qs.queries = add(class_embed, g->leaf(pos));
  qs.references = proposal.mu;
  qs.num_real = K;
  qs.num_noisy = 0;
  return qs;
}

Array sample_noisy_references(size_t num_keypoints, Rng& rng, bool training) {
  if (!training)
    throw ContractError("noisy reference points are a training-only construction");
  Array refs({num_keypoints, 2});
  for (double& v : refs.data) v = rng.next_double();
  return refs;
}

KeypointQuerySet append_noisy_group(const KeypointQuerySet& base, Tensor class_embed,
                                    const Array& noisy_refs) {
  Graph* g = class_embed.graph();
  const size_t K = class_embed.shape()[0];
  DKP_CHECK(noisy_refs.shape == Shape({K, 2}), "noisy reference shape != [K x 2]");
  const size_t C = class_embed.shape()[1];
  Tensor noisy_q = add(class_embed, g->leaf(sincos_embed(noisy_refs, C)));
  KeypointQuerySet qs;
  qs.queries = concat({base.queries, noisy_q}, 0);
  qs.references = concat({base.references, g->leaf(noisy_refs)}, 0);
  qs.num_real = base.num_real;
  qs.num_noisy = K;
  return qs;
}

}  // namespace deskpose
