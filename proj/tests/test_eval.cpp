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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "deskpose/error.hpp"
#include "deskpose/eval.hpp"
#include "deskpose/rng.hpp"

using namespace deskpose;

namespace {

PoseInstance make_gt(int64_t image, Rng& rng, size_t k) {
  PoseInstance inst;
  inst.image_id = image;
  inst.bbox = {rng.uniform(0, 20), rng.uniform(0, 20), rng.uniform(15, 40),
               rng.uniform(15, 40)};
  inst.area = inst.bbox[2] * inst.bbox[3];
  inst.bbox_score = 1.0;
  for (size_t i = 0; i < k; ++i) {
    inst.keypoints.push_back({inst.bbox[0] + rng.uniform(0, inst.bbox[2]),
                              inst.bbox[1] + rng.uniform(0, inst.bbox[3])});
    inst.visibility.push_back(rng.next_below(5) == 0 ? 0 : 1);
  }
  if (std::count(inst.visibility.begin(), inst.visibility.end(), 1) == 0)
    inst.visibility[0] = 1;
  return inst;
}

PoseInstance perturb(const PoseInstance& gt, Rng& rng, double px) {
  PoseInstance det = gt;
  det.bbox_score = rng.uniform(0.05, 1.0);
  det.kp_scores.clear();
  for (size_t i = 0; i < det.keypoints.size(); ++i) {
    det.keypoints[i][0] += rng.uniform(-px, px);
    det.keypoints[i][1] += rng.uniform(-px, px);
    det.kp_scores.push_back(rng.uniform(0.05, 1.0));
  }
  return det;
}

}  // namespace

TEST_CASE("oks is one for perfect predictions and decays with distance") {
  Rng rng(1);
  const OksConfig cfg = OksConfig::uniform(4);
  PoseInstance gt = make_gt(0, rng, 4);
  CHECK(oks(gt.keypoints, gt, cfg) == doctest::Approx(1.0));

  auto shifted = gt.keypoints;
  for (auto& p : shifted) p[0] += 1000;
  CHECK(oks(shifted, gt, cfg) < 1e-6);

  // Invisible keypoints are ignored: corrupting one leaves oks at 1.
  PoseInstance masked = gt;
  masked.visibility.assign(4, 1);
  masked.visibility[2] = 0;
  auto off = masked.keypoints;
  off[2][0] += 500;
  CHECK(oks(off, masked, cfg) == doctest::Approx(1.0));

  PoseInstance blind = gt;
  blind.visibility.assign(4, 0);
  CHECK_THROWS_AS(oks(gt.keypoints, blind, cfg), UndefinedInputError);
}

TEST_CASE("instance score is bbox score times mean keypoint score") {
  PoseInstance inst;
  inst.bbox_score = 0.8;
  inst.kp_scores = {0.5, 1.0, 0.25, 0.25};
  CHECK(instance_score(inst) == doctest::Approx(0.8 * 0.5));
}

TEST_CASE("perfect detections reach AP 1 and empty input is defined") {
  Rng rng(2);
  const OksConfig cfg = OksConfig::uniform(5);
  std::vector<PoseInstance> gts, dets;
  for (int i = 0; i < 12; ++i) {
    PoseInstance gt = make_gt(i, rng, 5);
    PoseInstance det = gt;
    det.kp_scores.assign(5, 1.0);
    gts.push_back(gt);
    dets.push_back(det);
  }
  const ApResult ap = average_precision(dets, gts, cfg);
  CHECK(ap.mean == doctest::Approx(1.0));
  for (double v : ap.per_threshold) CHECK(v == doctest::Approx(1.0));

  const ApResult none = average_precision({}, gts, cfg);
  CHECK(none.mean == 0.0);
}

TEST_CASE("greedy matcher equals the exhaustive oracle on random cases") {
  Rng rng(77);
  for (int rep = 0; rep < 60; ++rep) {
    const size_t k = 3 + rng.next_below(3);
    const OksConfig cfg = OksConfig::uniform(k);
    std::vector<PoseInstance> gts, dets;
    const int images = 1 + (int)rng.next_below(4);
    for (int im = 0; im < images; ++im) {
      const size_t n_gt = rng.next_below(5), n_det = rng.next_below(6);
      std::vector<PoseInstance> local;
      for (size_t i = 0; i < n_gt; ++i) {
        local.push_back(make_gt(im, rng, k));
        gts.push_back(local.back());
      }
      for (size_t i = 0; i < n_det; ++i) {
        const PoseInstance& base =
            local.empty() ? make_gt(im, rng, k) : local[rng.next_below(local.size())];
        dets.push_back(perturb(base, rng, rng.uniform(0.5, 12.0)));
      }
    }
    for (bool rescore : {true, false}) {
      const ApResult greedy = average_precision(dets, gts, cfg, rescore);
      const ApResult oracle = average_precision_oracle(dets, gts, cfg, rescore);
      REQUIRE(greedy.per_threshold.size() == oracle.per_threshold.size());
      for (size_t t = 0; t < greedy.per_threshold.size(); ++t)
        CHECK(greedy.per_threshold[t] == oracle.per_threshold[t]);
    }
  }
}

TEST_CASE("pck counts keypoints within the bbox-diagonal fraction") {
  PoseInstance gt;
  gt.image_id = 0;
  gt.bbox = {0, 0, 30, 40};  // diagonal 50
  gt.area = 1200;
  gt.keypoints = {{10, 10}, {20, 20}, {5, 30}, {25, 5}};
  gt.visibility = {1, 1, 1, 0};
  PoseInstance pred = gt;
  pred.keypoints[0][0] += 4.9;   // inside at alpha 0.1 (radius 5)
  pred.keypoints[1][1] += 5.1;   // outside
  pred.keypoints[2][0] += 100;   // far outside
  pred.keypoints[3][0] += 1000;  // invisible: ignored
  CHECK(pck({pred}, {gt}, 0.1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("jsonl instances survive a round trip") {
  Rng rng(5);
  std::vector<PoseInstance> list;
  for (int i = 0; i < 7; ++i) {
    PoseInstance p = make_gt(i, rng, 6);
    p.kp_scores.assign(6, 0.5);
    list.push_back(p);
  }
  const auto dir = std::filesystem::temp_directory_path() / "deskpose_eval_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "inst.jsonl").string();
  write_instances(path, list);
  const std::vector<PoseInstance> back = read_instances(path);
  REQUIRE(back.size() == list.size());
  for (size_t i = 0; i < list.size(); ++i) {
    CHECK(back[i].image_id == list[i].image_id);
    CHECK(back[i].keypoints == list[i].keypoints);
    CHECK(back[i].visibility == list[i].visibility);
    CHECK(back[i].bbox == list[i].bbox);
    CHECK(back[i].bbox_score == list[i].bbox_score);
    CHECK(back[i].kp_scores == list[i].kp_scores);
    CHECK(back[i].area == list[i].area);
  }
  CHECK_THROWS_AS(from_jsonl("{not json"), FormatError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("oks config validation") {
  OksConfig cfg = OksConfig::uniform(3);
  CHECK(cfg.k == std::vector<double>{0.08, 0.08, 0.08});
  CHECK(cfg.thresholds.front() == doctest::Approx(0.50));
  CHECK(cfg.thresholds.back() == doctest::Approx(0.95));
  CHECK(cfg.thresholds.size() == 10);
  cfg.validate(3);
  cfg.thresholds = {0.9, 0.5};
  CHECK_THROWS_AS(cfg.validate(3), ConfigError);
  cfg = OksConfig::uniform(3);
  cfg.k[1] = 0.0;
  CHECK_THROWS_AS(cfg.validate(3), ConfigError);
}
