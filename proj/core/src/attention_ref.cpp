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

#include "deskpose/attention_ref.hpp"

#include <algorithm>
#include <cmath>

#include "deskpose/error.hpp"

namespace deskpose {

namespace {

struct QueryMaps {
  std::vector<double> offsets;  // [M*L*S*2]
  std::vector<double> attn;     // [M*L*S], softmax over (l,s) per head
  std::vector<std::array<double, 2>> phi;  // level-grid reference per level
};

void affine_map(const std::vector<double>& q, const std::vector<double>& w,
                const std::vector<double>& b, std::vector<double>& out, FlopCount* f) {
  const size_t c = q.size();
  const size_t n = b.size();
  out = b;
  for (size_t j = 0; j < c; ++j) {
    const double qj = q[j];
    const double* wrow = w.data() + j * n;
    for (size_t o = 0; o < n; ++o) out[o] += qj * wrow[o];
  }
  if (f) f->query_maps += n * (2 * c + 1);
}

QueryMaps compute_query_maps(const std::vector<double>& query,
                             const std::array<double, 2>& ref, const RefPyramid& pyr,
                             const EmsdaRefParams& p, FlopCount* f) {
  QueryMaps m;
  affine_map(query, p.w_offset, p.b_offset, m.offsets, f);
  affine_map(query, p.w_attn, p.b_attn, m.attn, f);
  const size_t ls = p.levels * p.points;
  for (size_t i = 0; i < p.heads; ++i) {
    double* a = m.attn.data() + i * ls;
    double mx = a[0];
    for (size_t j = 1; j < ls; ++j) mx = std::max(mx, a[j]);
    double sum = 0.0;
    for (size_t j = 0; j < ls; ++j) {
      a[j] = std::exp(a[j] - mx);
      sum += a[j];
    }
    for (size_t j = 0; j < ls; ++j) a[j] /= sum;
    if (f) f->query_maps += ls + (ls - 1) + ls;
  }
  m.phi.resize(pyr.levels.size());
  for (size_t l = 0; l < pyr.levels.size(); ++l) {
    m.phi[l] = {ref[0] * static_cast<double>(pyr.levels[l].w - 1),
                ref[1] * static_cast<double>(pyr.levels[l].h - 1)};
    if (f) f->query_maps += 2;
  }
  return m;
}

// Bilinear read of nch channels at column col0 from a [h*w x roww] map,
// accumulating into out. Out-of-grid corners contribute zeros. Counting
// charges interpolation only along axes of extent > 1: node-aligned
// positions on a size-1 axis land exactly on the grid (the fractional
// weight is identically zero), so an efficient kernel does no lerp there.
// A 1x1 level is therefore a plain read, which is what makes the
// degenerate single-point pyramid cost the two variants equally.
void sample_into(const std::vector<double>& feat, size_t h, size_t w, size_t roww,
                 size_t col0, size_t nch, double px, double py, double* out,
                 FlopCount* f) {
  const double fx0 = std::floor(px), fy0 = std::floor(py);
  const int64_t x0 = static_cast<int64_t>(fx0), y0 = static_cast<int64_t>(fy0);
  const double fx = px - fx0, fy = py - fy0;
  const double gx = 1.0 - fx, gy = 1.0 - fy;
  const double w00 = gx * gy, w10 = fx * gy, w01 = gx * fy, w11 = fx * fy;
  auto row = [&](int64_t yy, int64_t xx) -> const double* {
    if (yy < 0 || yy >= static_cast<int64_t>(h) || xx < 0 || xx >= static_cast<int64_t>(w))
      return nullptr;
    return feat.data() + (static_cast<size_t>(yy) * w + static_cast<size_t>(xx)) * roww + col0;
  };
  const double* r00 = row(y0, x0);
  const double* r10 = row(y0, x0 + 1);
  const double* r01 = row(y0 + 1, x0);
  const double* r11 = row(y0 + 1, x0 + 1);
  for (size_t c = 0; c < nch; ++c) {
    const double v00 = r00 ? r00[c] : 0.0;
    const double v10 = r10 ? r10[c] : 0.0;
    const double v01 = r01 ? r01[c] : 0.0;
    const double v11 = r11 ? r11[c] : 0.0;
    out[c] = w00 * v00 + w10 * v10 + w01 * v01 + w11 * v11;
  }
  if (f) {
    const int axes = (h > 1 ? 1 : 0) + (w > 1 ? 1 : 0);
    f->sampling += axes == 2 ? 8 + 7 * nch : axes == 1 ? 4 + 3 * nch : 0;
  }
}

// Per-sample counting twin of sample_into's charge, for the closed forms.
uint64_t sample_flops(size_t h, size_t w, size_t nch) {
  const int axes = (h > 1 ? 1 : 0) + (w > 1 ? 1 : 0);
  return axes == 2 ? 8 + 7 * nch : axes == 1 ? 4 + 3 * nch : 0;
}

void check_params(const RefPyramid& pyr, const EmsdaRefParams& p) {
  DKP_CHECK(p.heads >= 1 && p.levels >= 1 && p.points >= 1, "M, L, S must be positive");
  DKP_CHECK(p.width >= 1 && p.width % p.heads == 0, "width must be a multiple of heads");
  DKP_CHECK(pyr.levels.size() == p.levels, "pyramid level count mismatch");
  DKP_CHECK(pyr.channels == p.width, "pyramid channels must equal width");
  const size_t mls = p.heads * p.levels * p.points;
  DKP_CHECK(p.w_offset.size() == p.width * mls * 2 && p.b_offset.size() == mls * 2,
            "offset map shape mismatch");
  DKP_CHECK(p.w_attn.size() == p.width * mls && p.b_attn.size() == mls,
            "attention map shape mismatch");
  DKP_CHECK(p.w_value.size() == p.width * p.width && p.w_output.size() == p.width * p.width,
            "projection shape mismatch");
}

}  // namespace

std::vector<double> emsda_ref(const std::vector<double>& query,
                              const std::array<double, 2>& ref, const RefPyramid& pyr,
                              const EmsdaRefParams& p, FlopCount* flops) {
  check_params(pyr, p);
  DKP_CHECK(query.size() == p.width, "query width mismatch");
  const size_t C = p.width, M = p.heads, L = p.levels, S = p.points, d = p.head_dim();
  QueryMaps m = compute_query_maps(query, ref, pyr, p, flops);

  std::vector<double> concat_heads(C, 0.0);
  std::vector<double> sampled(C), proj(d);
  for (size_t i = 0; i < M; ++i) {
    double* head = concat_heads.data() + i * d;
    for (size_t l = 0; l < L; ++l) {
      const RefLevel& lv = pyr.levels[l];
      for (size_t s = 0; s < S; ++s) {
        const size_t base = (i * L + l) * S + s;
        const double px = m.phi[l][0] + m.offsets[base * 2];
        const double py = m.phi[l][1] + m.offsets[base * 2 + 1];
        if (flops) flops->sampling += 2;
        sample_into(lv.feat, lv.h, lv.w, C, 0, C, px, py, sampled.data(), flops);
        // project the raw sample through head i's value block
        for (size_t cd = 0; cd < d; ++cd) {
          double acc = 0.0;
          for (size_t c = 0; c < C; ++c) acc += sampled[c] * p.w_value[c * C + i * d + cd];
          proj[cd] = acc;
        }
        if (flops) flops->value_proj += 2 * C * d;
        const double a = m.attn[base];
        for (size_t cd = 0; cd < d; ++cd) head[cd] += a * proj[cd];
        if (flops) flops->mixing += 2 * d;
      }
    }
  }

  std::vector<double> out(C, 0.0);
  for (size_t j = 0; j < C; ++j) {
    const double hj = concat_heads[j];
    const double* wrow = p.w_output.data() + j * C;
    for (size_t c = 0; c < C; ++c) out[c] += hj * wrow[c];
  }
  if (flops) flops->output_proj += 2 * C * C;
  return out;
}

std::vector<double> msda_oracle(const std::vector<double>& query,
                                const std::array<double, 2>& ref, const RefPyramid& pyr,
                                const EmsdaRefParams& p, FlopCount* flops) {
  check_params(pyr, p);
  DKP_CHECK(query.size() == p.width, "query width mismatch");
  const size_t C = p.width, M = p.heads, L = p.levels, S = p.points, d = p.head_dim();
  QueryMaps m = compute_query_maps(query, ref, pyr, p, flops);

  // Project every position of every level first (the whole-map linear layer).
  std::vector<std::vector<double>> projected(L);
  for (size_t l = 0; l < L; ++l) {
    const RefLevel& lv = pyr.levels[l];
    const size_t n = lv.h * lv.w;
    projected[l].assign(n * C, 0.0);
    for (size_t pos = 0; pos < n; ++pos) {
      const double* src = lv.feat.data() + pos * C;
      double* dst = projected[l].data() + pos * C;
      for (size_t i = 0; i < M; ++i) {
        for (size_t cd = 0; cd < d; ++cd) {
          double acc = 0.0;
          for (size_t c = 0; c < C; ++c) acc += src[c] * p.w_value[c * C + i * d + cd];
          dst[i * d + cd] = acc;
        }
        if (flops) flops->value_proj += 2 * C * d;
      }
    }
  }

  std::vector<double> concat_heads(C, 0.0);
  std::vector<double> sampled(d);
  for (size_t i = 0; i < M; ++i) {
    double* head = concat_heads.data() + i * d;
    for (size_t l = 0; l < L; ++l) {
      const RefLevel& lv = pyr.levels[l];
      for (size_t s = 0; s < S; ++s) {
        const size_t base = (i * L + l) * S + s;
        const double px = m.phi[l][0] + m.offsets[base * 2];
        const double py = m.phi[l][1] + m.offsets[base * 2 + 1];
        if (flops) flops->sampling += 2;
        sample_into(projected[l], lv.h, lv.w, C, i * d, d, px, py, sampled.data(), flops);
        const double a = m.attn[base];
        for (size_t cd = 0; cd < d; ++cd) head[cd] += a * sampled[cd];
        if (flops) flops->mixing += 2 * d;
      }
    }
  }

  std::vector<double> out(C, 0.0);
  for (size_t j = 0; j < C; ++j) {
    const double hj = concat_heads[j];
    const double* wrow = p.w_output.data() + j * C;
    for (size_t c = 0; c < C; ++c) out[c] += hj * wrow[c];
  }
  if (flops) flops->output_proj += 2 * C * C;
  return out;
}

namespace {

FlopCount shared_analytic(const EmsdaRefParams& p, const RefPyramid& pyr) {
  FlopCount f;
  const size_t C = p.width, mls = p.heads * p.levels * p.points;
  const size_t ls = p.levels * p.points;
  f.query_maps = (mls * 2) * (2 * C + 1) + mls * (2 * C + 1) +
                 p.heads * (ls + (ls - 1) + ls) + 2 * pyr.levels.size();
  f.mixing = mls * 2 * p.head_dim();
  f.output_proj = 2 * C * C;
  return f;
}

}  // namespace

FlopCount emsda_analytic_flops(const EmsdaRefParams& p, const RefPyramid& pyr) {
  FlopCount f = shared_analytic(p, pyr);
  const size_t ms = p.heads * p.points;
  f.sampling = 0;
  for (const RefLevel& lv : pyr.levels)
    f.sampling += ms * (2 + sample_flops(lv.h, lv.w, p.width));
  f.value_proj = p.heads * p.levels * p.points * 2 * p.width * p.head_dim();
  return f;
}

FlopCount msda_analytic_flops(const EmsdaRefParams& p, const RefPyramid& pyr) {
  FlopCount f = shared_analytic(p, pyr);
  const size_t ms = p.heads * p.points;
  f.sampling = 0;
  for (const RefLevel& lv : pyr.levels)
    f.sampling += ms * (2 + sample_flops(lv.h, lv.w, p.head_dim()));
  f.value_proj = pyr.positions() * p.heads * 2 * p.width * p.head_dim();
  return f;
}

}  // namespace deskpose
