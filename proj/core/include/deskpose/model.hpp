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

#include <string>
#include <utility>
#include <vector>

#include "deskpose/backbone.hpp"
#include "deskpose/decoder.hpp"
#include "deskpose/keypoint_encoder.hpp"
#include "deskpose/likelihood.hpp"
#include "deskpose/rng.hpp"

namespace deskpose {

// Ordered name -> value parameter table. Iteration order is insertion
// order, which fixes leaf creation order and therefore graph layout.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Array value;
    double lr_mult = 1.0;
  };

  Array& add(const std::string& name, Array init, double lr_mult = 1.0);
  Entry& at(const std::string& name);
  const Entry& at(const std::string& name) const;
  bool has(const std::string& name) const;
  size_t size() const { return entries_.size(); }
  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

  void save(const std::string& path) const;
  // Names and shapes must match the store exactly.
  void load(const std::string& path);

 private:
  std::vector<Entry> entries_;
  std::vector<std::pair<std::string, size_t>> index_;  // sorted by name
  size_t find(const std::string& name) const;          // npos when absent
};

struct ModelConfig {
  BackboneConfig backbone;
  DecoderConfig decoder;
  FlowConfig flow;
  LikelihoodMode mode = LikelihoodMode::kResidual;
  double lambda = 1.0;        // weight of the decoder-layer loss term
  double score_a = 0.2;       // confidence radius of the closed-form score
  bool noisy_queries = true;  // train-time second query group

  // Cross-module consistency: widths agree, level counts agree.
  void validate() const;
};

// The full regression model: conv pyramid -> coarse proposal -> keypoint
// queries -> deformable decoder -> per-layer location/scale heads, trained
// with the likelihood objective and scored in closed form.
class PoseModel {
 public:
  PoseModel(const ModelConfig& cfg, uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Per-graph leaf bindings for every parameter, in store order.
  struct Bound {
    BackboneWeights backbone;
    std::vector<Tensor> proj_w, proj_b;  // per-level 1x1 projection to C
    Tensor class_embed;                  // [K x C]
    DecoderWeights decoder;
    FlowWeights flow_fc, flow_dec;
    std::vector<std::pair<std::string, Tensor>> leaves;
  };
  Bound bind(Graph& g) const;

  // Backbone features projected to the decoder width.
  FeaturePyramid features(Graph& g, const Bound& b, const Array& patch_rows) const;

  struct TrainStep {
    Tensor loss;
    CoarseProposal coarse;
    DecoderOutput decoder;
    size_t num_real = 0, num_noisy = 0;
  };
  // patch_rows: [H*W x 3] y-major; mu_g: [K x 2] normalized gt. The rng
  // drives the noisy reference group (consumed only when enabled).
  TrainStep forward_train(Graph& g, const Bound& b, const Array& patch_rows,
                          const Array& mu_g, Rng& rng) const;

  struct Prediction {
    Array mu;  // [K x 2] normalized
    Array b;   // [K x 2]
    std::vector<double> scores;  // [K]
  };
  // corrupt_amplitude > 0 replaces the coarse proposal locations with
  // uniformly perturbed ones (clamped to [0,1]), simulating degraded
  // proposals; corrupt_rng must be non-null in that case.
  Prediction forward_infer(const Array& patch_rows, double corrupt_amplitude = 0.0,
                           Rng* corrupt_rng = nullptr) const;

  void save(const std::string& path) const { params_.save(path); }
  void load(const std::string& path) { params_.load(path); }

 private:
  ModelConfig cfg_;
  ParamStore params_;
};

// {3,H,W} planes -> [H*W x 3] rows, y-major.
Array image_rows(const Array& chw);

}  // namespace deskpose
