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

#include "deskpose/model.hpp"
#include "deskpose/synth.hpp"

namespace deskpose {

struct OptimConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  size_t steps = 3000;
  std::vector<double> milestones = {0.60, 0.85};  // fractions of steps
  double decay = 0.1;

  void validate() const;
};

// Moment-based adaptive update with decoupled weight decay and a stepped
// learning-rate schedule. Parameters whose gradient is identically zero in
// a step are skipped entirely: no moment update and no weight decay, so
// modules outside the active loss stay bit-identical to initialization.
class AdamW {
 public:
  AdamW(ParamStore& params, const OptimConfig& cfg);

  double lr_at(size_t step) const;  // 0-based step index
  // grads in store order; applies one update and advances the step count.
  void step(const std::vector<Array>& grads);
  size_t steps_taken() const { return t_; }

 private:
  ParamStore* params_;
  OptimConfig cfg_;
  size_t t_ = 0;
  std::vector<Array> m_, v_;
};

struct TrainSample {
  Array patch_rows;  // [H*W x 3]
  Array mu_g;        // [K x 2] normalized to the patch
  CropAffine affine; // patch -> original image
  int64_t image_id = 0;
  size_t instance = 0;  // index within the image
};

// Crops every instance of every scene to the model's input size.
std::vector<TrainSample> make_samples(const std::vector<SyntheticScene>& scenes,
                                      const ModelConfig& cfg);

struct TrainLoopConfig {
  OptimConfig optim;
  size_t batch_size = 4;
  uint64_t seed = 0;
  size_t eval_every_epochs = 25;  // 0 disables periodic validation
  std::string metrics_path;      // empty: no metrics log
  std::string checkpoint_path;   // empty: no checkpoints

  void validate() const;
};

struct TrainResult {
  double final_loss = 0.0;     // mean batch loss of the last step
  double final_mean_l1_px = 0.0;
  size_t steps = 0;
  size_t epochs = 0;
};

// Mean over samples, keypoints, and axes of |pred - gt| in patch pixels.
double mean_l1_px(const PoseModel& model, const std::vector<TrainSample>& data);

// Deterministic in (model seed, cfg.seed). Shuffles per epoch, accumulates
// batch-mean gradients, steps AdamW, logs one JSON line per epoch, and
// writes checkpoints at the schedule milestones and at the end. Throws
// ContractError on a non-finite loss, naming the offending step and batch.
TrainResult train_loop(PoseModel& model, const std::vector<TrainSample>& data,
                       const TrainLoopConfig& cfg);

}  // namespace deskpose
