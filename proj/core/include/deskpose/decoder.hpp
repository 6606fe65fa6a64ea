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
#include <vector>

#include "deskpose/backbone.hpp"
#include "deskpose/graph.hpp"
#include "deskpose/keypoint_encoder.hpp"
#include "deskpose/likelihood.hpp"

namespace deskpose {

struct DecoderConfig {
  size_t layers = 3;      // N_d
  size_t heads = 8;       // M
  size_t points = 4;      // S sampling points per level
  size_t levels = 2;      // L
  size_t width = 32;      // C
  size_t ffn_hidden = 64;
  bool aux_supervision = true;  // retain every layer's head output for the loss

  size_t head_dim() const { return width / heads; }
  void validate() const;  // ConfigError on violation
};

struct SelfAttnWeights {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;  // all [C x C] / [C]
};

// Affine maps hang off the query; the value/output projections realize the
// per-head mixing. Offset and attention-logit columns are laid out
// (head, level, point) row-major, with x/y innermost for offsets, so the
// per-(head,level) blocks used below stay contiguous.
struct EmsdaWeights {
  Tensor w_value;            // [C x C]; head i owns column block i
  Tensor w_output;           // [C x C]
  Tensor w_offset, b_offset; // [C x M*L*S*2], [M*L*S*2]; offsets in level-grid units
  Tensor w_attn, b_attn;     // [C x M*L*S], [M*L*S]
};

struct DecoderLayerWeights {
  SelfAttnWeights self_attn;
  EmsdaWeights emsda;
  NormWeights ln1, ln2, ln3;
  Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;  // [C x F], [F], [F x C], [C]
  Tensor refine_w, refine_b;              // [C x 2], [2]
  Tensor head_w, head_b;                  // [C x 4], [4]
};

struct DecoderWeights {
  std::vector<DecoderLayerWeights> layers;
};

struct EmsdaDetail {
  // Post-softmax attention, [K'*M x L*S]; row k*M+i is query k, head i.
  Tensor attention;
};

// Bilinear lookup of rows of a feature level at positions given in level
// grid coordinates (node-aligned: integer coordinates hit grid points).
// Out-of-grid area contributes zeros. Differentiable w.r.t. the feature map
// and the positions; the corner indices are data-dependent and frozen at
// record time. pos: [R x 2] -> [R x channels].
Tensor bilinear_sample(const FeatureLevel& level, Tensor pos);

// Maps normalized [0,1]^2 references to level grid coordinates,
// u * (W_l - 1, H_l - 1).
Tensor to_level_coords(Tensor refs, const FeatureLevel& level);

// Deformable cross-attention of Eq.-1 shape. queries: [R x C], refs:
// [R x 2] normalized. Samples each head's offset points per level, projects
// the samples through the head's value block, mixes by the per-head softmax
// over the joint (level, point) axis, and concatenates heads through the
// output projection. No biases on the value/output projections, which keeps
// the sampled-then-projected form exactly equal to project-then-sample.
Tensor emsda(Tensor queries, Tensor refs, const FeaturePyramid& pyr,
             const EmsdaWeights& w, const DecoderConfig& cfg,
             EmsdaDetail* detail = nullptr);

// Standard multi-head self-attention over the query rows.
Tensor self_attention(Tensor queries, const SelfAttnWeights& w, size_t heads);

// sigmoid(logit(clamp(refs)) + affine(queries)): an in-[0,1] residual update.
Tensor refine_reference(Tensor queries, Tensor refs, Tensor w, Tensor b);

struct DecoderLayerOutput {
  Tensor queries;     // [K' x C] after the layer
  Tensor references;  // [K' x 2] after refinement
  LaplacePred pred;   // this layer's output head
};

struct DecoderOutput {
  std::vector<DecoderLayerOutput> layers;  // one entry per decoder layer
  const DecoderLayerOutput& final_layer() const { return layers.back(); }
};

// Post-norm transformer stack: self-attention, EMSDA, FFN (each residual +
// layer norm), then reference refinement and this layer's output head.
DecoderOutput decoder_forward(const KeypointQuerySet& qs, const FeaturePyramid& pyr,
                              const DecoderConfig& cfg, const DecoderWeights& w,
                              std::vector<EmsdaDetail>* details = nullptr);

}  // namespace deskpose
