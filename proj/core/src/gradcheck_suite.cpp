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

#include "deskpose/gradcheck_suite.hpp"

#include <cmath>

#include "deskpose/decoder.hpp"
#include "deskpose/grad_check.hpp"
#include "deskpose/graph.hpp"
#include "deskpose/likelihood.hpp"
#include "deskpose/rng.hpp"

namespace deskpose {

namespace {

// Projects a tensor to a scalar through a fixed pseudo-random constant, so
// every output entry influences the loss with a distinct weight.
Tensor project(Graph& g, Tensor t, uint64_t key) {
  const Shape& s = g.value_of(t).shape;
  Array w(s);
  for (size_t i = 0; i < w.data.size(); ++i)
    w.data[i] = 0.25 + hash_unit(key, i);
  return reduce_sum(mul(t, g.constant(w)));
}

struct Suite {
  uint64_t seed;
  double eps, tol;
  GradSuiteResult result;

  Rng rng_for(const std::string& name) {
    uint64_t h = 0x5EEDULL;
    for (char c : name) h = hash_mix(h, static_cast<uint64_t>(c));
    return Rng::stream(seed, h);
  }

  void run(const std::string& name, const ScalarFn& f, const std::vector<Array>& inputs) {
    GradCheckReport rep = finite_diff_check(f, inputs, eps);
    GradCase c;
    c.name = name;
    c.max_rel_err = rep.max_rel_err;
    c.entries = rep.entries;
    c.pass = rep.max_rel_err < tol;
    result.worst = std::max(result.worst, rep.max_rel_err);
    result.cases.push_back(c);
  }
};

}  // namespace

GradSuiteResult run_gradcheck_suite(uint64_t seed, double eps, double tol) {
  Suite s{seed, eps, tol, {}};

  // --- primitives ---
  {
    Rng r = s.rng_for("binary");
    Array a = Array::uniform({3, 4}, r, -2, 2);
    Array b = Array::uniform({3, 4}, r, 0.5, 2.5);  // positive: shared with div
    Array row = Array::uniform({4}, r, 0.5, 1.5);   // broadcast operand
    s.run("add", [](Graph&, const std::vector<Tensor>& in) {
      return reduce_sum(mul(add(in[0], in[1]), in[0]));
    }, {a, b});
    s.run("sub", [](Graph&, const std::vector<Tensor>& in) {
      return reduce_sum(mul(sub(in[0], in[1]), in[1]));
    }, {a, b});
    s.run("mul", [](Graph&, const std::vector<Tensor>& in) {
      return reduce_sum(mul(in[0], in[1]));
    }, {a, b});
    s.run("div", [](Graph&, const std::vector<Tensor>& in) {
      return reduce_sum(divide(in[0], in[1]));
    }, {a, b});
    s.run("add_broadcast", [](Graph&, const std::vector<Tensor>& in) {
      return reduce_sum(mul(add(in[0], in[1]), in[0]));
    }, {a, row});
    s.run("mul_broadcast", [](Graph&, const std::vector<Tensor>& in) {
      return reduce_sum(mul(in[0], in[1]));
    }, {a, row});
  }
  {
    Rng r = s.rng_for("matmul");
    Array a = Array::uniform({3, 5}, r, -1, 1);
    Array b = Array::uniform({5, 2}, r, -1, 1);
    s.run("matmul", [](Graph& g, const std::vector<Tensor>& in) {
      return project(g, matmul(in[0], in[1]), 11);
    }, {a, b});
    s.run("transpose", [](Graph& g, const std::vector<Tensor>& in) {
      return project(g, matmul(transpose(in[0]), in[0]), 12);
    }, {a});
  }
  {
    Rng r = s.rng_for("unary");
    Array x = Array::uniform({2, 6}, r, -1.5, 1.5);
    Array pos = Array::uniform({2, 6}, r, 0.3, 3.0);
    // Keep |x| away from the kink and the clamp threshold away from values.
    s.run("exp", [](Graph& g, const std::vector<Tensor>& in) {
      return project(g, exp(in[0]), 21);
    }, {x});
    s.run("log", [](Graph& g, const std::vector<Tensor>& in) {
      return project(g, log(in[0]), 22);
    }, {pos});
    s.run("tanh", [](Graph& g, const std::vector<Tensor>& in) {
      return project(g, tanh(in[0]), 23);
    }, {x});
    s.run("sigmoid", [](Graph& g, const std::vector<Tensor>& in) {
      return project(g, sigmoid(in[0]), 24);
    }, {x});
    s.run("sqrt", [](Graph& g, const std::vector<Tensor>& in) {
      return project(g, sqrt(in[0]), 25);
    }, {pos});
    Array away(x.shape);
    for (size_t i = 0; i < away.data.size(); ++i)
      away.data[i] = x.data[i] + (x.data[i] >= 0 ? 0.2 : -0.2);
    s.run("abs", [](Graph& g, const std::vector<Tensor>& in) {
      return project(g, abs(in[0]), 26);
    }, {away});
    s.run("clamp_min", [](Graph& g, const std::vector<Tensor>& in) {
      return project(g, clamp_min(in[0], 0.1), 27);
    }, {away});
  }
  {
    Rng r = s.rng_for("softmax");
    Array x = Array::uniform({3, 5}, r, -2, 2);
    s.run("softmax", [](Graph& g, const std::vector<Tensor>& in) {
      return project(g, softmax(in[0]), 31);
    }, {x});
  }
  {
    Rng r = s.rng_for("shape");
    Array a = Array::uniform({3, 4}, r, -1, 1);
    Array b = Array::uniform({2, 4}, r, -1, 1);
    s.run("concat", [](Graph& g, const std::vector<Tensor>& in) {
      return project(g, concat({in[0], in[1], in[0]}, 0), 41);
    }, {a, b});
    s.run("slice", [](Graph& g, const std::vector<Tensor>& in) {
      return project(g, slice(in[0], 1, 1, 2), 42);
    }, {a});
    s.run("reshape", [](Graph& g, const std::vector<Tensor>& in) {
      return project(g, reshape(in[0], {2, 6}), 43);
    }, {a});
    s.run("reduce_sum_full", [](Graph&, const std::vector<Tensor>& in) {
      return reduce_sum(mul(in[0], in[0]));
    }, {a});
    s.run("reduce_sum_axis", [](Graph& g, const std::vector<Tensor>& in) {
      return project(g, reduce_sum(in[0], 0, false), 44);
    }, {a});
    s.run("reduce_mean_full", [](Graph&, const std::vector<Tensor>& in) {
      return reduce_mean(mul(in[0], exp(in[0])));
    }, {a});
    s.run("reduce_mean_axis", [](Graph& g, const std::vector<Tensor>& in) {
      return project(g, reduce_mean(in[0], 1, true), 45);
    }, {a});
    s.run("gather_rows", [](Graph& g, const std::vector<Tensor>& in) {
      return project(g, gather_rows(in[0], {2, 0, 0, -1, 1}), 46);
    }, {a});
  }
  {
    Rng r = s.rng_for("composite");
    Array x = Array::uniform({4, 6}, r, -1, 1);
    Array gmm = Array::uniform({6}, r, 0.5, 1.5);
    Array bta = Array::uniform({6}, r, -0.5, 0.5);
    Array w = Array::uniform({6, 3}, r, -0.7, 0.7);
    Array bb = Array::uniform({3}, r, -0.3, 0.3);
    Array p = Array::uniform({4, 2}, r, 0.15, 0.85);
    s.run("layer_norm", [](Graph& g, const std::vector<Tensor>& in) {
      return project(g, layer_norm(in[0], in[1], in[2]), 51);
    }, {x, gmm, bta});
    s.run("linear", [](Graph& g, const std::vector<Tensor>& in) {
      return project(g, linear(in[0], in[1], in[2]), 52);
    }, {x, w, bb});
    s.run("logit", [](Graph& g, const std::vector<Tensor>& in) {
      return project(g, logit(in[0]), 53);
    }, {p});
    s.run("clamp", [](Graph& g, const std::vector<Tensor>& in) {
      return project(g, clamp(in[0], 0.3, 0.7), 54);
    }, {p});
  }

  // --- coarse pipeline: pooled feature -> proposal -> Eq.-2-style NLL ---
  {
    Rng r = s.rng_for("coarse");
    const size_t k = 4, c = 6;
    Array pooled = Array::uniform({1, c}, r, -1, 1);
    Array hw = Array::uniform({c, k * 4}, r, -0.6, 0.6);
    Array hb = Array::uniform({k * 4}, r, -0.4, 0.4);
    Array gt = Array::uniform({k, 2}, r, 0.1, 0.9);
    s.run("coarse_nll", [k, gt](Graph&, const std::vector<Tensor>& in) {
      CoarseProposal prop = coarse_proposal(in[0], in[1], in[2], k);
      FlowWeights none;
      FlowConfig fc;
      return rle_loss({prop.mu, prop.b}, gt, none, fc, LikelihoodMode::kLaplaceOnly);
    }, {pooled, hw, hb});
  }

  // --- flow density w.r.t. both the points and every coupling weight ---
  {
    Rng r = s.rng_for("flow");
    FlowConfig fc;
    fc.layers = 2;
    fc.hidden = 3;
    Array x = Array::uniform({5, 2}, r, -1.5, 1.5);
    std::vector<Array> inputs = {x};
    for (size_t j = 0; j < fc.layers; ++j)
      for (int t = 0; t < 2; ++t) {
        inputs.push_back(Array::uniform({1, fc.hidden}, r, -0.8, 0.8));
        inputs.push_back(Array::uniform({fc.hidden}, r, -0.5, 0.5));
        inputs.push_back(Array::uniform({fc.hidden, 1}, r, -0.8, 0.8));
        inputs.push_back(Array::uniform({1}, r, -0.3, 0.3));
      }
    s.run("flow_log_prob", [fc](Graph& g, const std::vector<Tensor>& in) {
      FlowWeights w;
      size_t p = 1;
      w.layers.resize(fc.layers);
      for (size_t j = 0; j < fc.layers; ++j) {
        CouplingWeights& cw = w.layers[j];
        cw.s_w1 = in[p++]; cw.s_b1 = in[p++]; cw.s_w2 = in[p++]; cw.s_b2 = in[p++];
        cw.t_w1 = in[p++]; cw.t_b1 = in[p++]; cw.t_w2 = in[p++]; cw.t_b2 = in[p++];
      }
      return project(g, flow_log_prob(in[0], w, fc), 61);
    }, inputs);
  }

  // --- two chained reference refinements ---
  {
    Rng r = s.rng_for("refine");
    const size_t k = 3, c = 5;
    Array q = Array::uniform({k, c}, r, -1, 1);
    Array refs = Array::uniform({k, 2}, r, 0.2, 0.8);
    Array w1 = Array::uniform({c, 2}, r, -0.5, 0.5);
    Array b1 = Array::uniform({2}, r, -0.2, 0.2);
    Array w2 = Array::uniform({c, 2}, r, -0.5, 0.5);
    Array b2 = Array::uniform({2}, r, -0.2, 0.2);
    s.run("refine_chain", [](Graph& g, const std::vector<Tensor>& in) {
      Tensor r1 = refine_reference(in[0], in[1], in[2], in[3]);
      Tensor r2 = refine_reference(in[0], r1, in[4], in[5]);
      return project(g, r2, 71);
    }, {q, refs, w1, b1, w2, b2});
  }

  // --- tiny deformable decoder, full residual objective (Eq.-3 shape) ---
  {
    Rng r = s.rng_for("decoder");
    DecoderConfig dc;
    dc.layers = 2;
    dc.heads = 2;
    dc.points = 2;
    dc.levels = 2;
    dc.width = 16;
    dc.ffn_hidden = 20;
    FlowConfig fc;
    fc.layers = 2;
    fc.hidden = 3;
    const size_t k = 3;
    const size_t h0 = 5, w0 = 6, h1 = 3, w1 = 3;

    std::vector<Array> inputs;
    inputs.push_back(Array::uniform({h0 * w0, dc.width}, r, -0.8, 0.8));  // level 0
    inputs.push_back(Array::uniform({h1 * w1, dc.width}, r, -0.8, 0.8));  // level 1
    inputs.push_back(Array::uniform({k, dc.width}, r, -0.8, 0.8));        // queries
    // Reference points away from grid-cell boundaries so the frozen
    // bilinear corners stay fixed under the finite-difference probes.
    Array refs({k, 2});
    for (size_t i = 0; i < k; ++i) {
      refs.data[2 * i] = 0.23 + 0.11 * static_cast<double>(i);
      refs.data[2 * i + 1] = 0.31 + 0.13 * static_cast<double>(i);
    }
    inputs.push_back(refs);
    auto push_layer = [&](size_t seed_off) {
      Rng lr = Rng::stream(r.next_u64(), seed_off);
      const size_t c = dc.width;
      const size_t mls = dc.heads * dc.levels * dc.points;
      for (int i = 0; i < 4; ++i) inputs.push_back(Array::uniform({c, c}, lr, -0.4, 0.4));
      for (int i = 0; i < 4; ++i) inputs.push_back(Array::uniform({c}, lr, -0.2, 0.2));
      inputs.push_back(Array::uniform({c, c}, lr, -0.4, 0.4));      // w_value
      inputs.push_back(Array::uniform({c, c}, lr, -0.4, 0.4));      // w_output
      inputs.push_back(Array::uniform({c, mls * 2}, lr, -0.1, 0.1));  // w_offset
      inputs.push_back(Array::uniform({mls * 2}, lr, -0.6, 0.6));     // b_offset
      inputs.push_back(Array::uniform({c, mls}, lr, -0.3, 0.3));      // w_attn
      inputs.push_back(Array::uniform({mls}, lr, -0.3, 0.3));         // b_attn
      for (int i = 0; i < 3; ++i) {
        inputs.push_back(Array::uniform({c}, lr, 0.7, 1.3));  // gamma
        inputs.push_back(Array::uniform({c}, lr, -0.2, 0.2)); // beta
      }
      inputs.push_back(Array::uniform({c, dc.ffn_hidden}, lr, -0.4, 0.4));
      inputs.push_back(Array::uniform({dc.ffn_hidden}, lr, -0.2, 0.2));
      inputs.push_back(Array::uniform({dc.ffn_hidden, c}, lr, -0.4, 0.4));
      inputs.push_back(Array::uniform({c}, lr, -0.2, 0.2));
      inputs.push_back(Array::uniform({c, 2}, lr, -0.3, 0.3));  // refine.w
      inputs.push_back(Array::uniform({2}, lr, -0.1, 0.1));     // refine.b
      inputs.push_back(Array::uniform({c, 4}, lr, -0.4, 0.4));  // head.w
      Array hb({4});
      hb.data[2] = -1.5;
      hb.data[3] = -1.5;
      inputs.push_back(hb);
    };
    push_layer(1);
    push_layer(2);
    for (size_t j = 0; j < fc.layers; ++j)
      for (int t = 0; t < 2; ++t) {
        inputs.push_back(Array::uniform({1, fc.hidden}, r, -0.8, 0.8));
        inputs.push_back(Array::uniform({fc.hidden}, r, -0.5, 0.5));
        inputs.push_back(Array::uniform({fc.hidden, 1}, r, -0.8, 0.8));
        inputs.push_back(Array::uniform({1}, r, -0.3, 0.3));
      }
    Array gt = Array::uniform({k, 2}, r, 0.2, 0.8);

    s.run("decoder_residual_nll", [dc, fc, k, h0, w0, h1, w1, gt](
                                      Graph&, const std::vector<Tensor>& in) {
      size_t p = 0;
      FeaturePyramid pyr;
      pyr.levels.push_back({in[p], h0, w0, dc.width, 4});
      ++p;
      pyr.levels.push_back({in[p], h1, w1, dc.width, 8});
      ++p;
      KeypointQuerySet qs;
      qs.queries = in[p++];
      qs.references = in[p++];
      qs.num_real = k;
      DecoderWeights dw;
      dw.layers.resize(dc.layers);
      for (size_t i = 0; i < dc.layers; ++i) {
        DecoderLayerWeights& lw = dw.layers[i];
        lw.self_attn.wq = in[p++];
        lw.self_attn.wk = in[p++];
        lw.self_attn.wv = in[p++];
        lw.self_attn.wo = in[p++];
        lw.self_attn.bq = in[p++];
        lw.self_attn.bk = in[p++];
        lw.self_attn.bv = in[p++];
        lw.self_attn.bo = in[p++];
        lw.emsda.w_value = in[p++];
        lw.emsda.w_output = in[p++];
        lw.emsda.w_offset = in[p++];
        lw.emsda.b_offset = in[p++];
        lw.emsda.w_attn = in[p++];
        lw.emsda.b_attn = in[p++];
        lw.ln1.gamma = in[p++];
        lw.ln1.beta = in[p++];
        lw.ln2.gamma = in[p++];
        lw.ln2.beta = in[p++];
        lw.ln3.gamma = in[p++];
        lw.ln3.beta = in[p++];
        lw.ffn_w1 = in[p++];
        lw.ffn_b1 = in[p++];
        lw.ffn_w2 = in[p++];
        lw.ffn_b2 = in[p++];
        lw.refine_w = in[p++];
        lw.refine_b = in[p++];
        lw.head_w = in[p++];
        lw.head_b = in[p++];
      }
      FlowWeights fw;
      fw.layers.resize(fc.layers);
      for (size_t j = 0; j < fc.layers; ++j) {
        CouplingWeights& cw = fw.layers[j];
        cw.s_w1 = in[p++]; cw.s_b1 = in[p++]; cw.s_w2 = in[p++]; cw.s_b2 = in[p++];
        cw.t_w1 = in[p++]; cw.t_b1 = in[p++]; cw.t_w2 = in[p++]; cw.t_b2 = in[p++];
      }
      DecoderOutput out = decoder_forward(qs, pyr, dc, dw);
      Tensor loss;
      for (size_t i = 0; i < out.layers.size(); ++i) {
        Tensor t = rle_loss(out.layers[i].pred, gt, fw, fc, LikelihoodMode::kResidual);
        loss = i == 0 ? t : add(loss, t);
      }
      return scale(loss, 1.0 / static_cast<double>(out.layers.size()));
    }, inputs);
  }

  s.result.all_pass = true;
  for (const GradCase& c : s.result.cases)
    if (!c.pass) s.result.all_pass = false;
  return s.result;
}

}  // namespace deskpose
