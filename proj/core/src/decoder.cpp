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

#include "deskpose/decoder.hpp"

#include <cmath>

#include "deskpose/error.hpp"

namespace deskpose {

void DecoderConfig::validate() const {
  if (layers == 0) throw ConfigError("decoder needs at least one layer");
  if (heads == 0 || points == 0 || levels == 0) throw ConfigError("decoder M, S, L must be positive");
  if (width == 0 || width % heads != 0)
    throw ConfigError("decoder width must be a positive multiple of the head count");
  if (ffn_hidden == 0) throw ConfigError("decoder FFN hidden width must be positive");
}

Tensor bilinear_sample(const FeatureLevel& level, Tensor pos) {
  DKP_CHECK(pos.rank() == 2 && pos.shape()[1] == 2, "positions must be [R x 2]");
  Graph* g = pos.graph();
  const size_t rows = pos.shape()[0];
  const int64_t hh = static_cast<int64_t>(level.h);
  const int64_t ww = static_cast<int64_t>(level.w);

  // Corner indices come from the recorded position values; the fractional
  // weights stay symbolic so gradients flow into pos.
  const std::vector<double>& pv = pos.value();
  std::vector<int64_t> i00(rows), i10(rows), i01(rows), i11(rows);
  Array x0v({rows, 1}), y0v({rows, 1});
  for (size_t r = 0; r < rows; ++r) {
    const double px = pv[2 * r], py = pv[2 * r + 1];
    const int64_t x0 = static_cast<int64_t>(std::floor(px));
    const int64_t y0 = static_cast<int64_t>(std::floor(py));
    x0v.data[r] = static_cast<double>(x0);
    y0v.data[r] = static_cast<double>(y0);
    auto at = [&](int64_t yy, int64_t xx) -> int64_t {
      return (yy >= 0 && yy < hh && xx >= 0 && xx < ww) ? yy * ww + xx : -1;
    };
    i00[r] = at(y0, x0);
    i10[r] = at(y0, x0 + 1);
    i01[r] = at(y0 + 1, x0);
    i11[r] = at(y0 + 1, x0 + 1);
  }

  Tensor fx = sub(slice(pos, 1, 0, 1), g->leaf(x0v));  // [R x 1]
  Tensor fy = sub(slice(pos, 1, 1, 1), g->leaf(y0v));
  Tensor one = g->scalar(1.0);
  Tensor gx = sub(one, fx);
  Tensor gy = sub(one, fy);

  Tensor out = mul(gather_rows(level.feat, std::move(i00)), mul(gx, gy));
  out = add(out, mul(gather_rows(level.feat, std::move(i10)), mul(fx, gy)));
  out = add(out, mul(gather_rows(level.feat, std::move(i01)), mul(gx, fy)));
  out = add(out, mul(gather_rows(level.feat, std::move(i11)), mul(fx, fy)));
  return out;
}

Tensor to_level_coords(Tensor refs, const FeatureLevel& level) {
  Graph* g = refs.graph();
  Array ext({2}, {static_cast<double>(level.w - 1), static_cast<double>(level.h - 1)});
  return mul(refs, g->leaf(ext));
}

Tensor emsda(Tensor queries, Tensor refs, const FeaturePyramid& pyr,
             const EmsdaWeights& w, const DecoderConfig& cfg, EmsdaDetail* detail) {
  const size_t R = queries.shape()[0];
  const size_t C = cfg.width, M = cfg.heads, L = cfg.levels, S = cfg.points;
  const size_t d = cfg.head_dim();
  DKP_CHECK(queries.shape()[1] == C, "query width mismatch");
  DKP_CHECK(refs.shape() == Shape({R, 2}), "reference shape mismatch");
  DKP_CHECK(pyr.levels.size() == L, "pyramid level count mismatch");
  for (const FeatureLevel& lv : pyr.levels)
    DKP_CHECK(lv.feat.shape()[1] == C, "pyramid level width must equal decoder width");

  Tensor offsets = linear(queries, w.w_offset, w.b_offset);     // [R x M*L*S*2]
  Tensor logits = linear(queries, w.w_attn, w.b_attn);          // [R x M*L*S]
  Tensor attn = softmax(reshape(logits, {R * M, L * S}));       // per (query, head)
  if (detail) detail->attention = attn;

  // Row r*S+s of the sampling block belongs to query r; this index table
  // replicates per-query rows S times.
  std::vector<int64_t> rep_idx(R * S);
  for (size_t r = 0; r < R; ++r)
    for (size_t s = 0; s < S; ++s) rep_idx[r * S + s] = static_cast<int64_t>(r);
  std::vector<int64_t> head_rows(R);

  std::vector<Tensor> heads(M);
  for (size_t l = 0; l < L; ++l) {
    Tensor grid_ref = to_level_coords(refs, pyr.levels[l]);  // [R x 2]
    Tensor grid_rep = gather_rows(grid_ref, rep_idx);        // [R*S x 2]
    for (size_t i = 0; i < M; ++i) {
      Tensor off_il = slice(offsets, 1, ((i * L + l) * S) * 2, S * 2);  // [R x S*2]
      Tensor pos = add(grid_rep, reshape(off_il, {R * S, 2}));
      Tensor sampled = bilinear_sample(pyr.levels[l], pos);             // [R*S x C]
      Tensor proj = matmul(sampled, slice(w.w_value, 1, i * d, d));     // [R*S x d]

      for (size_t r = 0; r < R; ++r) head_rows[r] = static_cast<int64_t>(r * M + i);
      Tensor a_il = slice(gather_rows(attn, head_rows), 1, l * S, S);   // [R x S]
      Tensor weighted = mul(proj, reshape(a_il, {R * S, 1}));
      Tensor summed = reduce_sum(reshape(weighted, {R, S, d}), 1, false);  // [R x d]
      heads[i] = heads[i].valid() ? add(heads[i], summed) : summed;
    }
  }
  return matmul(concat(heads, 1), w.w_output);
}

Tensor self_attention(Tensor queries, const SelfAttnWeights& w, size_t heads) {
  const size_t C = queries.shape()[1];
  DKP_CHECK(C % heads == 0, "width must be divisible by head count");
  const size_t d = C / heads;
  Tensor q = linear(queries, w.wq, w.bq);
  Tensor k = linear(queries, w.wk, w.bk);
  Tensor v = linear(queries, w.wv, w.bv);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<Tensor> outs;
  outs.reserve(heads);
  for (size_t i = 0; i < heads; ++i) {
    Tensor qi = slice(q, 1, i * d, d);
    Tensor ki = slice(k, 1, i * d, d);
    Tensor vi = slice(v, 1, i * d, d);
    Tensor scores = scale(matmul(qi, transpose(ki)), inv_sqrt_d);
    outs.push_back(matmul(softmax(scores), vi));
  }
  return linear(concat(outs, 1), w.wo, w.bo);
}

Tensor refine_reference(Tensor queries, Tensor refs, Tensor w, Tensor b) {
  Tensor anchored = logit(clamp(refs, 1e-6, 1.0 - 1e-6));
  return sigmoid(add(anchored, linear(queries, w, b)));
}

namespace {

LaplacePred output_head(Tensor queries, Tensor head_w, Tensor head_b) {
  Tensor raw = linear(queries, head_w, head_b);  // [R x 4]
  LaplacePred p;
  p.mu = sigmoid(slice(raw, 1, 0, 2));
  p.b = clamp_min(sigmoid(slice(raw, 1, 2, 2)), 1e-6);
  return p;
}

}  // namespace

DecoderOutput decoder_forward(const KeypointQuerySet& qs, const FeaturePyramid& pyr,
                              const DecoderConfig& cfg, const DecoderWeights& w,
                              std::vector<EmsdaDetail>* details) {
  cfg.validate();
  if (pyr.levels.size() != cfg.levels)
    throw ConfigError("pyramid level count does not match decoder config");
  for (const FeatureLevel& lv : pyr.levels)
    if (lv.feat.shape()[1] != cfg.width)
      throw ConfigError("pyramid level width does not match decoder width");
  DKP_CHECK(w.layers.size() == cfg.layers, "decoder weights/config layer mismatch");

  DecoderOutput out;
  Tensor queries = qs.queries;
  Tensor refs = qs.references;
  for (size_t n = 0; n < cfg.layers; ++n) {
    const DecoderLayerWeights& lw = w.layers[n];
    Tensor h = layer_norm(add(queries, self_attention(queries, lw.self_attn, cfg.heads)),
                          lw.ln1.gamma, lw.ln1.beta);
    EmsdaDetail detail;
    Tensor cross = emsda(h, refs, pyr, lw.emsda, cfg, details ? &detail : nullptr);
    if (details) details->push_back(detail);
    h = layer_norm(add(h, cross), lw.ln2.gamma, lw.ln2.beta);
    Tensor ffn = linear(tanh(linear(h, lw.ffn_w1, lw.ffn_b1)), lw.ffn_w2, lw.ffn_b2);
    h = layer_norm(add(h, ffn), lw.ln3.gamma, lw.ln3.beta);
    refs = refine_reference(h, refs, lw.refine_w, lw.refine_b);

    DecoderLayerOutput layer_out;
    layer_out.queries = h;
    layer_out.references = refs;
    layer_out.pred = output_head(h, lw.head_w, lw.head_b);
    out.layers.push_back(layer_out);
    queries = h;
  }
  return out;
}

}  // namespace deskpose
