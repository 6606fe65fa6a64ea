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

#include "deskpose/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "deskpose/error.hpp"

namespace deskpose {

void OptimConfig::validate() const {
  if (!(lr > 0)) throw ConfigError("lr must be positive");
  if (!(beta1 >= 0 && beta1 < 1)) throw ConfigError("beta1 must be in [0,1)");
  if (!(beta2 >= 0 && beta2 < 1)) throw ConfigError("beta2 must be in [0,1)");
  if (!(eps > 0)) throw ConfigError("eps must be positive");
  if (weight_decay < 0) throw ConfigError("weight_decay must be non-negative");
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (!(decay > 0 && decay <= 1)) throw ConfigError("decay must be in (0,1]");
  for (size_t i = 0; i < milestones.size(); ++i) {
    if (!(milestones[i] > 0 && milestones[i] < 1))
      throw ConfigError("milestones must be fractions in (0,1)");
    if (i > 0 && milestones[i] <= milestones[i - 1])
      throw ConfigError("milestones must be strictly increasing");
  }
}

AdamW::AdamW(ParamStore& params, const OptimConfig& cfg) : params_(&params), cfg_(cfg) {
  cfg_.validate();
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const ParamStore::Entry& e : params.entries()) {
    m_.emplace_back(e.value.shape);
    v_.emplace_back(e.value.shape);
  }
}

double AdamW::lr_at(size_t step) const {
  double lr = cfg_.lr;
  for (double frac : cfg_.milestones)
    if (static_cast<double>(step) >= frac * static_cast<double>(cfg_.steps)) lr *= cfg_.decay;
  return lr;
}

void AdamW::step(const std::vector<Array>& grads) {
  DKP_CHECK(grads.size() == params_->size(), "gradient list does not match parameter store");
  const double lr = lr_at(t_);
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < grads.size(); ++i) {
    ParamStore::Entry& e = params_->entries()[i];
    DKP_CHECK(grads[i].shape == e.value.shape, "gradient shape mismatch for '" + e.name + "'");
    bool all_zero = true;
    for (double gv : grads[i].data)
      if (gv != 0.0) {
        all_zero = false;
        break;
      }
    if (all_zero) continue;
    const double lr_eff = lr * e.lr_mult;
    for (size_t j = 0; j < e.value.data.size(); ++j) {
      const double gv = grads[i].data[j];
      double& m = m_[i].data[j];
      double& v = v_[i].data[j];
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * gv;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * gv * gv;
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      double& p = e.value.data[j];
      p -= lr_eff * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * p);
    }
  }
}

std::vector<TrainSample> make_samples(const std::vector<SyntheticScene>& scenes,
                                      const ModelConfig& cfg) {
  DKP_CHECK(!scenes.empty(), "no scenes to make samples from");
  const size_t h = cfg.backbone.input_h, w = cfg.backbone.input_w;
  const size_t k = cfg.backbone.num_keypoints;
  std::vector<TrainSample> samples;
  for (const SyntheticScene& scene : scenes) {
    size_t instance = 0;
    for (const PoseInstance& inst : scene.instances) {
      DKP_CHECK(inst.keypoints.size() == k, "instance keypoint count != model K");
      CropResult cr = crop_resize(scene.image, inst.keypoints, inst.bbox, h, w);
      TrainSample s;
      s.patch_rows = image_rows(cr.patch);
      s.mu_g = Array({k, 2});
      for (size_t j = 0; j < k; ++j) {
        s.mu_g.data[2 * j] = std::clamp(cr.kp_norm[j][0], 0.0, 1.0);
        s.mu_g.data[2 * j + 1] = std::clamp(cr.kp_norm[j][1], 0.0, 1.0);
      }
      s.affine = cr.affine;
      s.image_id = inst.image_id;
      s.instance = instance++;
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

void TrainLoopConfig::validate() const {
  optim.validate();
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
}

double mean_l1_px(const PoseModel& model, const std::vector<TrainSample>& data) {
  DKP_CHECK(!data.empty(), "validation set is empty");
  const double sw = static_cast<double>(model.config().backbone.input_w);
  const double sh = static_cast<double>(model.config().backbone.input_h);
  double total = 0.0;
  size_t count = 0;
  for (const TrainSample& s : data) {
    PoseModel::Prediction p = model.forward_infer(s.patch_rows);
    for (size_t j = 0; j < p.mu.data.size(); j += 2) {
      total += std::fabs(p.mu.data[j] - s.mu_g.data[j]) * sw;
      total += std::fabs(p.mu.data[j + 1] - s.mu_g.data[j + 1]) * sh;
      count += 2;
    }
  }
  return total / static_cast<double>(count);
}

namespace {

std::vector<size_t> shuffled_indices(size_t n, Rng& rng) {
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  for (size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.next_below(i)]);
  return idx;
}

}  // namespace

TrainResult train_loop(PoseModel& model, const std::vector<TrainSample>& data,
                       const TrainLoopConfig& cfg) {
  cfg.validate();
  DKP_CHECK(!data.empty(), "training set is empty");
  AdamW opt(model.params(), cfg.optim);

  std::ofstream metrics;
  if (!cfg.metrics_path.empty()) {
    metrics.open(cfg.metrics_path, std::ios::trunc);
    if (!metrics) throw FormatError("cannot open metrics log '" + cfg.metrics_path + "'");
  }

  // Milestone steps get a checkpoint alongside the final one.
  std::vector<size_t> milestone_steps;
  for (double frac : cfg.optim.milestones)
    milestone_steps.push_back(static_cast<size_t>(frac * cfg.optim.steps));

  Rng shuffle_rng = Rng::stream(cfg.seed, 0x5F0FFULL);
  std::vector<size_t> order;
  size_t cursor = 0;
  size_t epoch = 0;
  double epoch_loss = 0.0;
  size_t epoch_batches = 0;

  TrainResult res;
  const size_t n_params = model.params().size();
  for (size_t step = 0; step < cfg.optim.steps; ++step) {
    std::vector<Array> batch_grads;
    batch_grads.reserve(n_params);
    for (const ParamStore::Entry& e : model.params().entries())
      batch_grads.emplace_back(e.value.shape);

    double batch_loss = 0.0;
    std::vector<size_t> batch_ids;
    const double inv_b = 1.0 / static_cast<double>(cfg.batch_size);
    for (size_t b = 0; b < cfg.batch_size; ++b) {
      if (cursor >= order.size()) {
        order = shuffled_indices(data.size(), shuffle_rng);
        cursor = 0;
        ++epoch;
      }
      const size_t sample_id = order[cursor++];
      batch_ids.push_back(sample_id);
      const TrainSample& s = data[sample_id];

      Graph g;
      PoseModel::Bound bound = model.bind(g);
      Rng noise_rng = Rng::stream(cfg.seed, hash_mix(0xB0B5ULL, step * cfg.batch_size + b));
      PoseModel::TrainStep ts = model.forward_train(g, bound, s.patch_rows, s.mu_g, noise_rng);
      const double loss = g.value_of(ts.loss).data[0];
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "non-finite loss at step " << step << " (sample " << sample_id << ", batch";
        for (size_t id : batch_ids) msg << ' ' << id;
        msg << ", seed " << cfg.seed << ")";
        throw ContractError(msg.str());
      }
      batch_loss += loss * inv_b;
      g.backward(ts.loss);
      for (size_t i = 0; i < n_params; ++i) {
        const Array gr = g.grad_of(bound.leaves[i].second);
        for (size_t j = 0; j < gr.data.size(); ++j)
          batch_grads[i].data[j] += gr.data[j] * inv_b;
      }
    }

    const bool epoch_turned = cursor >= order.size();
    const double lr_now = opt.lr_at(step);
    opt.step(batch_grads);
    res.final_loss = batch_loss;
    epoch_loss += batch_loss;
    ++epoch_batches;

    if (epoch_turned || step + 1 == cfg.optim.steps) {
      const bool last = step + 1 == cfg.optim.steps;
      const bool do_eval =
          last || (cfg.eval_every_epochs > 0 && epoch % cfg.eval_every_epochs == 0);
      double l1 = -1.0;
      if (do_eval) l1 = mean_l1_px(model, data);
      if (metrics.is_open()) {
        nlohmann::json line;
        line["epoch"] = epoch;
        line["step"] = step + 1;
        line["mean_loss"] = epoch_loss / static_cast<double>(epoch_batches);
        line["lr"] = lr_now;
        if (l1 >= 0) line["mean_l1_px"] = l1;
        metrics << line.dump() << "\n";
      }
      if (last && l1 >= 0) res.final_mean_l1_px = l1;
      epoch_loss = 0.0;
      epoch_batches = 0;
    }

    if (!cfg.checkpoint_path.empty()) {
      const bool at_milestone =
          std::find(milestone_steps.begin(), milestone_steps.end(), step + 1) !=
          milestone_steps.end();
      if (at_milestone || step + 1 == cfg.optim.steps) model.save(cfg.checkpoint_path);
    }
  }
  res.steps = cfg.optim.steps;
  res.epochs = epoch;
  return res;
}

}  // namespace deskpose
