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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace deskpose {

struct PoseInstance {
  int64_t image_id = 0;
  std::vector<std::array<double, 2>> keypoints;  // absolute pixels
  std::vector<int> visibility;                   // 0 = not annotated
  std::array<double, 4> bbox = {0, 0, 0, 0};     // x, y, w, h
  double bbox_score = 1.0;
  std::vector<double> kp_scores;
  double area = 0.0;
};

struct OksConfig {
  std::vector<double> k;            // per-keypoint falloff
  std::vector<double> thresholds;   // strictly increasing, in (0,1)
  // k_i = 0.08 for every joint, COCO-style thresholds 0.50:0.05:0.95.
  static OksConfig uniform(size_t num_keypoints);
  void validate(size_t num_keypoints) const;
};

// Eq.-5 style rescoring: bbox score times the mean keypoint score.
double instance_score(const PoseInstance& inst);

// Mean over visible gt keypoints of exp(-d^2 / (2 * area * k_i^2)).
// Throws UndefinedInputError when no gt keypoint is visible.
double oks(const std::vector<std::array<double, 2>>& pred, const PoseInstance& gt,
           const OksConfig& cfg);

struct ApResult {
  std::vector<double> per_threshold;
  double mean = 0.0;
};

// COCO-style greedy matching: per image, detections in descending score
// order claim the unmatched gt with the highest OKS at or above the
// threshold; 101-point interpolated PR curve pooled over images.
// rescore selects between Eq.-5 instance scores and raw bbox scores.
ApResult average_precision(const std::vector<PoseInstance>& detections,
                           const std::vector<PoseInstance>& ground_truths,
                           const OksConfig& cfg, bool rescore = true);

// Brute-force verification twin of average_precision: enumerates all
// injective detection-to-gt assignments per image and scores the
// lexicographically best one in detection-score order. Intended for small
// cases (<= ~6 instances per image).
ApResult average_precision_oracle(const std::vector<PoseInstance>& detections,
                                  const std::vector<PoseInstance>& ground_truths,
                                  const OksConfig& cfg, bool rescore = true);

// Fraction of visible keypoints within alpha * norm(gt) pixels, where the
// normalizer is the gt bbox diagonal.
double pck(const std::vector<PoseInstance>& predictions,
           const std::vector<PoseInstance>& ground_truths, double alpha = 0.5);

// JSON-lines interchange: one instance per line with fields image_id,
// keypoints (flat x,y,v), bbox, bbox_score, kp_scores, area.
std::string to_jsonl(const PoseInstance& inst);
PoseInstance from_jsonl(const std::string& line);
void write_instances(const std::string& path, const std::vector<PoseInstance>& list);
std::vector<PoseInstance> read_instances(const std::string& path);

}  // namespace deskpose
