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

#include "deskpose/likelihood.hpp"

#include <cmath>

#include "deskpose/error.hpp"

namespace deskpose {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)
constexpr double kLog2 = 0.6931471805599453094;
}  // namespace

LikelihoodMode likelihood_mode_from_string(const std::string& s) {
  if (s == "laplace") return LikelihoodMode::kLaplaceOnly;
  if (s == "flow") return LikelihoodMode::kFlow;
  if (s == "residual") return LikelihoodMode::kResidual;
  throw ConfigError("unknown likelihood mode '" + s + "' (laplace|flow|residual)");
}

const char* to_string(LikelihoodMode m) {
  switch (m) {
    case LikelihoodMode::kLaplaceOnly: return "laplace";
    case LikelihoodMode::kFlow: return "flow";
    case LikelihoodMode::kResidual: return "residual";
  }
  return "?";
}

void FlowConfig::validate() const {
  if (layers == 0) throw ConfigError("flow needs at least one coupling layer");
  if (hidden == 0) throw ConfigError("flow hidden width must be positive");
  if (log_scale_bound <= 0) throw ConfigError("flow log-scale bound must be positive");
}

namespace {

// 1 -> hidden -> 1 perceptron with tanh nonlinearity.
Tensor mlp1(Tensor x, Tensor w1, Tensor b1, Tensor w2, Tensor b2) {
  return linear(tanh(linear(x, w1, b1)), w2, b2);
}

}  // namespace

Tensor flow_log_prob(Tensor x, const FlowWeights& w, const FlowConfig& cfg) {
  cfg.validate();
  DKP_CHECK(x.rank() == 2 && x.shape()[1] == 2, "flow input must be [N x 2]");
  DKP_CHECK(w.layers.size() == cfg.layers, "flow weights/config layer mismatch");
  Graph* g = x.graph();
  const size_t n = x.shape()[0];

  // Invert the stack: the forward map applies layers 0..D-1 to a base
  // sample, so the inverse walks D-1..0. Layer j conditions on coordinate
  // j%2 and transforms the other one.
  Tensor cx = slice(x, 1, 0, 1);  // [N x 1]
  Tensor cy = slice(x, 1, 1, 1);
  Tensor log_det = g->constant(Array::zeros({n, 1}));  // of the inverse map
  for (size_t step = 0; step < cfg.layers; ++step) {
    const size_t j = cfg.layers - 1 - step;
    const CouplingWeights& cw = w.layers[j];
    Tensor cond = (j % 2 == 0) ? cx : cy;
    Tensor s = scale(tanh(mlp1(cond, cw.s_w1, cw.s_b1, cw.s_w2, cw.s_b2)),
                     cfg.log_scale_bound);                       // [N x 1]
    Tensor t = mlp1(cond, cw.t_w1, cw.t_b1, cw.t_w2, cw.t_b2);   // [N x 1]
    Tensor inv_scale = exp(scale(s, -1.0));
    if (j % 2 == 0)
      cy = mul(sub(cy, t), inv_scale);
    else
      cx = mul(sub(cx, t), inv_scale);
    log_det = sub(log_det, s);
  }

  Tensor sq = add(mul(cx, cx), mul(cy, cy));  // [N x 1]
  Tensor base = sub(scale(sq, -0.5), x.graph()->scalar(kLog2Pi));
  return add(base, log_det);
}

namespace {

// Standard Laplace log density summed over the two axes: -2*log 2 - |x|-|y|.
Tensor std_laplace_log_prob(Tensor x) {
  Graph* g = x.graph();
  Tensor absum = reduce_sum(abs(x), 1, true);  // [N x 1]
  return sub(scale(absum, -1.0), g->scalar(2.0 * kLog2));
}

}  // namespace

Tensor rle_loss(const LaplacePred& pred, const Array& mu_g, const FlowWeights& flow,
                const FlowConfig& cfg, LikelihoodMode mode) {
  Graph* g = pred.mu.graph();
  DKP_CHECK(pred.mu.shape() == mu_g.shape && pred.b.shape() == mu_g.shape,
            "prediction/ground-truth shape mismatch");
  for (double v : pred.b.value())
    if (!(v > 0.0)) throw ContractError("rle_loss requires strictly positive scales");

  Tensor x_bar = divide(sub(g->leaf(mu_g), pred.mu), pred.b);  // [K x 2]
  Tensor log_p;  // [K x 1]
  switch (mode) {
    case LikelihoodMode::kLaplaceOnly:
      log_p = std_laplace_log_prob(x_bar);
      break;
    case LikelihoodMode::kFlow:
      log_p = flow_log_prob(x_bar, flow, cfg);
      break;
    case LikelihoodMode::kResidual:
      log_p = add(std_laplace_log_prob(x_bar), flow_log_prob(x_bar, flow, cfg));
      break;
  }
  Tensor nll = sub(reduce_sum(log(pred.b)), reduce_sum(log_p));
  return nll;
}

Tensor total_loss(const LaplacePred& coarse, const std::vector<LaplacePred>& decoder_layers,
                  const Array& mu_g, const FlowWeights& flow_fc, const FlowWeights& flow_dec,
                  const FlowConfig& cfg, LikelihoodMode mode, double lambda) {
  if (lambda < 0.0) throw ConfigError("loss weight lambda must be non-negative");
  DKP_CHECK(!decoder_layers.empty(), "total_loss needs at least one decoder layer output");
  Tensor fc_term = rle_loss(coarse, mu_g, flow_fc, cfg, mode);
  if (lambda == 0.0) return fc_term;
  Tensor dec_sum;
  for (size_t i = 0; i < decoder_layers.size(); ++i) {
    Tensor t = rle_loss(decoder_layers[i], mu_g, flow_dec, cfg, mode);
    dec_sum = i == 0 ? t : add(dec_sum, t);
  }
  Tensor dec_mean = scale(dec_sum, 1.0 / static_cast<double>(decoder_layers.size()));
  return add(fc_term, scale(dec_mean, lambda));
}

std::vector<double> keypoint_score(const std::vector<double>& b, size_t num_keypoints,
                                   double a) {
  DKP_CHECK(a > 0.0, "score radius a must be positive");
  DKP_CHECK(b.size() == num_keypoints * 2, "scale buffer must be [K x 2]");
  std::vector<double> s(num_keypoints);
  for (size_t k = 0; k < num_keypoints; ++k) {
    const double sx = 1.0 - std::exp(-a / b[2 * k]);
    const double sy = 1.0 - std::exp(-a / b[2 * k + 1]);
    s[k] = sx * sy;
  }
  return s;
}

double laplace_pdf(double x, double mu, double b) {
  return std::exp(-std::fabs(x - mu) / b) / (2.0 * b);
}

}  // namespace deskpose
