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

#include "deskpose/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "deskpose/checkpoint.hpp"
#include "deskpose/error.hpp"

namespace deskpose {

Array& ParamStore::add(const std::string& name, Array init, double lr_mult) {
  DKP_CHECK(find(name) == static_cast<size_t>(-1), "duplicate parameter '" + name + "'");
  entries_.push_back({name, std::move(init), lr_mult});
  const size_t pos = entries_.size() - 1;
  auto it = std::lower_bound(index_.begin(), index_.end(), name,
                             [](const auto& p, const std::string& n) { return p.first < n; });
  index_.insert(it, {name, pos});
  return entries_.back().value;
}

size_t ParamStore::find(const std::string& name) const {
  auto it = std::lower_bound(index_.begin(), index_.end(), name,
                             [](const auto& p, const std::string& n) { return p.first < n; });
  if (it == index_.end() || it->first != name) return static_cast<size_t>(-1);
  return it->second;
}

ParamStore::Entry& ParamStore::at(const std::string& name) {
  const size_t i = find(name);
  DKP_CHECK(i != static_cast<size_t>(-1), "unknown parameter '" + name + "'");
  return entries_[i];
}

const ParamStore::Entry& ParamStore::at(const std::string& name) const {
  return const_cast<ParamStore*>(this)->at(name);
}

bool ParamStore::has(const std::string& name) const {
  return find(name) != static_cast<size_t>(-1);
}

void ParamStore::save(const std::string& path) const {
  Checkpoint ckpt;
  for (const Entry& e : entries_) ckpt.put(e.name, e.value);
  save_checkpoint(path, ckpt);
}

void ParamStore::load(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.entries().size() != entries_.size())
    throw FormatError("checkpoint parameter count does not match the model");
  for (Entry& e : entries_) {
    if (!ckpt.has(e.name)) throw FormatError("checkpoint missing parameter '" + e.name + "'");
    const Array& a = ckpt.get(e.name);
    if (a.shape != e.value.shape)
      throw FormatError("checkpoint shape mismatch for '" + e.name + "'");
    e.value = a;
  }
}

void ModelConfig::validate() const {
  backbone.validate();
  decoder.validate();
  flow.validate();
  if (backbone.embed_width != decoder.width)
    throw ConfigError("backbone embed width must equal decoder width");
  if (backbone.levels() != decoder.levels)
    throw ConfigError("backbone level count must equal decoder level count");
  if (lambda < 0) throw ConfigError("lambda must be non-negative");
  if (!(score_a > 0)) throw ConfigError("score_a must be positive");
}

namespace {

Array uniform_init(Rng& rng, const Shape& shape, size_t fan_in) {
  const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return Array::uniform(shape, rng, -s, s);
}

// Compass directions for the offset-bias ring; head i starts at direction
// i mod 8, point s sits at radius s+1 grid units.
constexpr int kRing[8][2] = {{1, 0},  {1, 1},   {0, 1},  {-1, 1},
                             {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};

Array offset_bias_init(const DecoderConfig& dc) {
  Array b({dc.heads * dc.levels * dc.points * 2});
  for (size_t i = 0; i < dc.heads; ++i)
    for (size_t l = 0; l < dc.levels; ++l)
      for (size_t s = 0; s < dc.points; ++s) {
        const size_t base = (((i * dc.levels) + l) * dc.points + s) * 2;
        const double r = static_cast<double>(s + 1);
        b.data[base + 0] = kRing[i % 8][0] * r;
        b.data[base + 1] = kRing[i % 8][1] * r;
      }
  return b;
}

// Scale-column bias: sigmoid(-2) ~ 0.12 keeps initial b away from both the
// saturation region and the 1e-6 floor.
constexpr double kScaleBias = -2.0;

}  // namespace

PoseModel::PoseModel(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng = Rng::stream(seed, 0x1217ULL);
  const BackboneConfig& bb = cfg_.backbone;
  const DecoderConfig& dc = cfg_.decoder;
  const size_t k = bb.num_keypoints;
  const size_t c = dc.width;

  size_t c_in = 3;
  for (size_t l = 0; l < bb.levels(); ++l) {
    const std::string p = "backbone.level" + std::to_string(l) + ".";
    const size_t c_out = bb.channels[l];
    params_.add(p + "conv1.w", uniform_init(rng, {9 * c_in, c_out}, 9 * c_in));
    params_.add(p + "conv1.b", Array({c_out}));
    params_.add(p + "norm1.gamma", Array::full({c_out}, 1.0));
    params_.add(p + "norm1.beta", Array({c_out}));
    params_.add(p + "conv2.w", uniform_init(rng, {9 * c_out, c_out}, 9 * c_out));
    params_.add(p + "conv2.b", Array({c_out}));
    params_.add(p + "norm2.gamma", Array::full({c_out}, 1.0));
    params_.add(p + "norm2.beta", Array({c_out}));
    c_in = c_out;
  }
  const size_t c_last = bb.channels.back();
  params_.add("backbone.head.w", uniform_init(rng, {c_last, k * 4}, c_last));
  {
    Array hb({k * 4});
    for (size_t j = 0; j < k; ++j) {
      hb.data[4 * j + 2] = kScaleBias;
      hb.data[4 * j + 3] = kScaleBias;
    }
    params_.add("backbone.head.b", std::move(hb));
  }

  for (size_t l = 0; l < bb.levels(); ++l) {
    const std::string p = "proj.level" + std::to_string(l) + ".";
    params_.add(p + "w", uniform_init(rng, {bb.channels[l], c}, bb.channels[l]));
    params_.add(p + "b", Array({c}));
  }

  params_.add("class_embed", uniform_init(rng, {k, c}, c));

  for (size_t i = 0; i < dc.layers; ++i) {
    const std::string p = "dec.layer" + std::to_string(i) + ".";
    for (const char* nm : {"wq", "wk", "wv", "wo"})
      params_.add(p + "sa." + nm, uniform_init(rng, {c, c}, c));
    for (const char* nm : {"bq", "bk", "bv", "bo"}) params_.add(p + "sa." + nm, Array({c}));
    params_.add(p + "emsda.w_value", uniform_init(rng, {c, c}, c));
    params_.add(p + "emsda.w_output", uniform_init(rng, {c, c}, c));
    const size_t mls = dc.heads * dc.levels * dc.points;
    params_.add(p + "emsda.w_offset", Array({c, mls * 2}), 0.1);
    params_.add(p + "emsda.b_offset", offset_bias_init(dc), 0.1);
    params_.add(p + "emsda.w_attn", Array({c, mls}));
    params_.add(p + "emsda.b_attn", Array({mls}));
    for (const char* nm : {"ln1", "ln2", "ln3"}) {
      params_.add(p + std::string(nm) + ".gamma", Array::full({c}, 1.0));
      params_.add(p + std::string(nm) + ".beta", Array({c}));
    }
    params_.add(p + "ffn.w1", uniform_init(rng, {c, dc.ffn_hidden}, c));
    params_.add(p + "ffn.b1", Array({dc.ffn_hidden}));
    params_.add(p + "ffn.w2", uniform_init(rng, {dc.ffn_hidden, c}, dc.ffn_hidden));
    params_.add(p + "ffn.b2", Array({c}));
    params_.add(p + "refine.w", Array({c, 2}), 0.1);
    params_.add(p + "refine.b", Array({2}), 0.1);
    params_.add(p + "head.w", uniform_init(rng, {c, 4}, c));
    Array hb({4});
    hb.data[2] = kScaleBias;
    hb.data[3] = kScaleBias;
    params_.add(p + "head.b", std::move(hb));
  }

  for (const char* fname : {"flow_fc", "flow_dec"}) {
    for (size_t j = 0; j < cfg_.flow.layers; ++j) {
      const std::string p = std::string(fname) + ".layer" + std::to_string(j) + ".";
      const size_t h = cfg_.flow.hidden;
      for (const char* head : {"s_", "t_"}) {
        params_.add(p + head + "w1", uniform_init(rng, {1, h}, 1));
        params_.add(p + head + "b1", uniform_init(rng, {h}, 1));
        // Final affine starts at zero: the flow is the identity map at
        // initialization but every layer still receives gradient.
        params_.add(p + head + "w2", Array({h, 1}));
        params_.add(p + head + "b2", Array({1}));
      }
    }
  }
}

PoseModel::Bound PoseModel::bind(Graph& g) const {
  Bound b;
  b.leaves.reserve(params_.size());
  for (const ParamStore::Entry& e : params_.entries())
    b.leaves.emplace_back(e.name, g.leaf(e.value));
  size_t pos = 0;
  auto next = [&](const char* name) {
    DKP_CHECK(pos < b.leaves.size() && b.leaves[pos].first.size() >= std::strlen(name) &&
                  b.leaves[pos].first.compare(b.leaves[pos].first.size() - std::strlen(name),
                                              std::strlen(name), name) == 0,
              "parameter order drifted from bind()");
    return b.leaves[pos++].second;
  };

  const BackboneConfig& bb = cfg_.backbone;
  const DecoderConfig& dc = cfg_.decoder;
  b.backbone.levels.resize(bb.levels());
  for (size_t l = 0; l < bb.levels(); ++l) {
    LevelWeights& lw = b.backbone.levels[l];
    lw.conv1.w = next("conv1.w");
    lw.conv1.b = next("conv1.b");
    lw.norm1.gamma = next("norm1.gamma");
    lw.norm1.beta = next("norm1.beta");
    lw.conv2.w = next("conv2.w");
    lw.conv2.b = next("conv2.b");
    lw.norm2.gamma = next("norm2.gamma");
    lw.norm2.beta = next("norm2.beta");
  }
  b.backbone.head_w = next("head.w");
  b.backbone.head_b = next("head.b");
  for (size_t l = 0; l < bb.levels(); ++l) {
    b.proj_w.push_back(next(".w"));
    b.proj_b.push_back(next(".b"));
  }
  b.class_embed = next("class_embed");
  b.decoder.layers.resize(dc.layers);
  for (size_t i = 0; i < dc.layers; ++i) {
    DecoderLayerWeights& lw = b.decoder.layers[i];
    lw.self_attn.wq = next("sa.wq");
    lw.self_attn.wk = next("sa.wk");
    lw.self_attn.wv = next("sa.wv");
    lw.self_attn.wo = next("sa.wo");
    lw.self_attn.bq = next("sa.bq");
    lw.self_attn.bk = next("sa.bk");
    lw.self_attn.bv = next("sa.bv");
    lw.self_attn.bo = next("sa.bo");
    lw.emsda.w_value = next("emsda.w_value");
    lw.emsda.w_output = next("emsda.w_output");
    lw.emsda.w_offset = next("emsda.w_offset");
    lw.emsda.b_offset = next("emsda.b_offset");
    lw.emsda.w_attn = next("emsda.w_attn");
    lw.emsda.b_attn = next("emsda.b_attn");
    lw.ln1.gamma = next("ln1.gamma");
    lw.ln1.beta = next("ln1.beta");
    lw.ln2.gamma = next("ln2.gamma");
    lw.ln2.beta = next("ln2.beta");
    lw.ln3.gamma = next("ln3.gamma");
    lw.ln3.beta = next("ln3.beta");
    lw.ffn_w1 = next("ffn.w1");
    lw.ffn_b1 = next("ffn.b1");
    lw.ffn_w2 = next("ffn.w2");
    lw.ffn_b2 = next("ffn.b2");
    lw.refine_w = next("refine.w");
    lw.refine_b = next("refine.b");
    lw.head_w = next("head.w");
    lw.head_b = next("head.b");
  }
  for (FlowWeights* fw : {&b.flow_fc, &b.flow_dec}) {
    fw->layers.resize(cfg_.flow.layers);
    for (size_t j = 0; j < cfg_.flow.layers; ++j) {
      CouplingWeights& cw = fw->layers[j];
      cw.s_w1 = next("s_w1");
      cw.s_b1 = next("s_b1");
      cw.s_w2 = next("s_w2");
      cw.s_b2 = next("s_b2");
      cw.t_w1 = next("t_w1");
      cw.t_b1 = next("t_b1");
      cw.t_w2 = next("t_w2");
      cw.t_b2 = next("t_b2");
    }
  }
  DKP_CHECK(pos == b.leaves.size(), "not all parameters were bound");
  return b;
}

FeaturePyramid PoseModel::features(Graph& g, const Bound& b, const Array& patch_rows) const {
  DKP_CHECK(patch_rows.shape.size() == 2 && patch_rows.shape[1] == 3 &&
                patch_rows.shape[0] == cfg_.backbone.input_h * cfg_.backbone.input_w,
            "patch rows must be [H*W x 3]");
  Tensor img = g.leaf(patch_rows);
  FeaturePyramid pyr = extract_pyramid(img, cfg_.backbone, b.backbone);
  for (size_t l = 0; l < pyr.levels.size(); ++l) {
    FeatureLevel& lev = pyr.levels[l];
    lev.feat = linear(lev.feat, b.proj_w[l], b.proj_b[l]);
    lev.channels = cfg_.decoder.width;
  }
  return pyr;
}

namespace {

LaplacePred slice_pred(const LaplacePred& p, size_t start, size_t len) {
  return {slice(p.mu, 0, start, len), slice(p.b, 0, start, len)};
}

}  // namespace

PoseModel::TrainStep PoseModel::forward_train(Graph& g, const Bound& b,
                                              const Array& patch_rows, const Array& mu_g,
                                              Rng& rng) const {
  const size_t k = cfg_.backbone.num_keypoints;
  DKP_CHECK(mu_g.shape == Shape({k, 2}), "gt must be [K x 2]");
  FeaturePyramid pyr = features(g, b, patch_rows);
  TrainStep step;
  step.coarse = coarse_proposal(pyr.pooled, b.backbone.head_w, b.backbone.head_b, k);

  KeypointQuerySet qs = init_queries(step.coarse, b.class_embed);
  step.num_real = k;
  if (cfg_.noisy_queries) {
    Array noisy = sample_noisy_references(k, rng, /*training=*/true);
    qs = append_noisy_group(qs, b.class_embed, noisy);
    step.num_noisy = k;
  }

  step.decoder = decoder_forward(qs, pyr, cfg_.decoder, b.decoder);

  std::vector<LaplacePred> real_layers, noisy_layers;
  for (size_t li = 0; li < step.decoder.layers.size(); ++li) {
    if (!cfg_.decoder.aux_supervision && li + 1 != step.decoder.layers.size()) continue;
    const DecoderLayerOutput& lo = step.decoder.layers[li];
    real_layers.push_back(slice_pred(lo.pred, 0, k));
    if (step.num_noisy > 0) noisy_layers.push_back(slice_pred(lo.pred, k, k));
  }

  const LaplacePred coarse_pred{step.coarse.mu, step.coarse.b};
  step.loss = total_loss(coarse_pred, real_layers, mu_g, b.flow_fc, b.flow_dec, cfg_.flow,
                         cfg_.mode, cfg_.lambda);
  if (step.num_noisy > 0 && cfg_.lambda > 0) {
    Tensor noisy_sum;
    for (size_t i = 0; i < noisy_layers.size(); ++i) {
      Tensor t = rle_loss(noisy_layers[i], mu_g, b.flow_dec, cfg_.flow, cfg_.mode);
      noisy_sum = i == 0 ? t : add(noisy_sum, t);
    }
    const double w = cfg_.lambda / static_cast<double>(noisy_layers.size());
    step.loss = add(step.loss, scale(noisy_sum, w));
  }
  return step;
}

PoseModel::Prediction PoseModel::forward_infer(const Array& patch_rows,
                                               double corrupt_amplitude,
                                               Rng* corrupt_rng) const {
  Graph g;
  Bound b = bind(g);
  FeaturePyramid pyr = features(g, b, patch_rows);
  const size_t k = cfg_.backbone.num_keypoints;
  CoarseProposal coarse = coarse_proposal(pyr.pooled, b.backbone.head_w, b.backbone.head_b, k);

  if (corrupt_amplitude > 0) {
    DKP_CHECK(corrupt_rng != nullptr, "reference corruption needs an rng");
    Array mu = g.value_of(coarse.mu);
    for (double& v : mu.data)
      v = std::clamp(v + corrupt_rng->uniform(-corrupt_amplitude, corrupt_amplitude), 0.0, 1.0);
    coarse.mu = g.leaf(mu);
  }

  KeypointQuerySet qs = init_queries(coarse, b.class_embed);
  DecoderOutput out = decoder_forward(qs, pyr, cfg_.decoder, b.decoder);

  Prediction pred;
  pred.mu = g.value_of(out.final_layer().pred.mu);
  pred.b = g.value_of(out.final_layer().pred.b);
  pred.scores = keypoint_score(pred.b.data, k, cfg_.score_a);
  return pred;
}

Array image_rows(const Array& chw) {
  DKP_CHECK(chw.shape.size() == 3 && chw.shape[0] == 3, "image must be {3,H,W}");
  const size_t h = chw.shape[1], w = chw.shape[2];
  Array rows({h * w, 3});
  for (size_t y = 0; y < h; ++y)
    for (size_t x = 0; x < w; ++x)
      for (size_t c = 0; c < 3; ++c)
        rows.data[(y * w + x) * 3 + c] = chw.data[(c * h + y) * w + x];
  return rows;
}

}  // namespace deskpose
