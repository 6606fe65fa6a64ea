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
#include <vector>

#include "deskpose/graph.hpp"

namespace deskpose {

// Predicted per-keypoint Laplace parameters, still attached to a graph.
struct LaplacePred {
  Tensor mu;  // [K x 2] in [0,1]
  Tensor b;   // [K x 2] in (0,1]
};

enum class LikelihoodMode { kLaplaceOnly, kFlow, kResidual };

LikelihoodMode likelihood_mode_from_string(const std::string& s);
const char* to_string(LikelihoodMode m);

struct FlowConfig {
  size_t layers = 4;      // affine coupling layers
  size_t hidden = 16;     // hidden width of the scale/shift perceptrons
  double log_scale_bound = 3.0;
  void validate() const;
};

// One coupling layer: the transformed coordinate is scaled by
// exp(bound*tanh(mlp_s(cond))) and shifted by mlp_t(cond). Zero weights make
// the layer an identity map.
struct CouplingWeights {
  Tensor s_w1, s_b1, s_w2, s_b2;  // [1 x h], [h], [h x 1], [1]
  Tensor t_w1, t_b1, t_w2, t_b2;
};

struct FlowWeights {
  std::vector<CouplingWeights> layers;  // layer j conditions on coordinate j%2
};

// log density of rows of x under the flow-transformed standard 2-D normal,
// by change of variables through the inverse map. x: [N x 2] -> [N x 1].
Tensor flow_log_prob(Tensor x, const FlowWeights& w, const FlowConfig& cfg);

// Negative log likelihood of one instance: standardize to
// x_bar = (mu_g - mu)/b, add the sum of log b (rescaling term), and score
// x_bar under the mode's density. Sums over keypoints and axes.
Tensor rle_loss(const LaplacePred& pred, const Array& mu_g, const FlowWeights& flow,
                const FlowConfig& cfg, LikelihoodMode mode);

// Eq-style combination: coarse term + lambda * mean over decoder layers,
// with separate flow models for the two terms. lambda < 0 is a ConfigError;
// lambda == 0 returns the coarse term alone.
Tensor total_loss(const LaplacePred& coarse, const std::vector<LaplacePred>& decoder_layers,
                  const Array& mu_g, const FlowWeights& flow_fc, const FlowWeights& flow_dec,
                  const FlowConfig& cfg, LikelihoodMode mode, double lambda);

// Closed-form confidence: per axis 1 - exp(-a/b), multiplied across axes.
// b: [K x 2] plain values -> [K] scores.
std::vector<double> keypoint_score(const std::vector<double>& b, size_t num_keypoints,
                                   double a);

// Laplace density at x for location mu and scale b (Eq. 7 shape); used by
// the quadrature oracle in tests.
double laplace_pdf(double x, double mu, double b);

}  // namespace deskpose
