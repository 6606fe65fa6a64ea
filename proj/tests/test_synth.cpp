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

#include <cmath>
#include <filesystem>
#include <vector>

#include "deskpose/error.hpp"
#include "deskpose/synth.hpp"

using namespace deskpose;

TEST_CASE("scenes regenerate bit-identically") {
  SynthConfig cfg;
  for (uint64_t i = 0; i < 8; ++i) {
    const SyntheticScene a = synth_scene(123, i, cfg);
    const SyntheticScene b = synth_scene(123, i, cfg);
    CHECK(a.image.data == b.image.data);
    REQUIRE(a.instances.size() == b.instances.size());
    for (size_t j = 0; j < a.instances.size(); ++j)
      CHECK(a.instances[j].keypoints == b.instances[j].keypoints);
  }
  // Different seeds diverge.
  CHECK(synth_scene(123, 0, cfg).image.data != synth_scene(124, 0, cfg).image.data);
}

TEST_CASE("keypoints stay inside the frame and discs carry their color") {
  SynthConfig cfg;
  size_t checked = 0;
  for (uint64_t i = 0; i < 40; ++i) {
    const SyntheticScene s = synth_scene(7, i, cfg);
    const size_t h = s.image.shape[1], w = s.image.shape[2];
    for (const PoseInstance& inst : s.instances)
      for (size_t k = 0; k < inst.keypoints.size(); ++k) {
        const auto [x, y] = inst.keypoints[k];
        CHECK(x >= 0);
        CHECK(x <= (double)w - 1);
        CHECK(y >= 0);
        CHECK(y <= (double)h - 1);
        if (!s.separated) continue;
        // The pixel under a separated joint shows that joint's disc color.
        const size_t px = (size_t)std::llround(x), py = (size_t)std::llround(y);
        const auto want = joint_color(k);
        for (size_t c = 0; c < 3; ++c)
          CHECK(s.image.data[(c * h + py) * w + px] == want[c]);
        ++checked;
      }
  }
  CHECK(checked > 200);  // the generator almost always separates
}

TEST_CASE("multi-figure scenes keep one instance per figure") {
  SynthConfig cfg;
  cfg.figures_per_image = 3;
  cfg.image_h = 96;
  cfg.image_w = 96;
  const SyntheticScene s = synth_scene(11, 2, cfg);
  CHECK(s.instances.size() == 3);
  for (const PoseInstance& inst : s.instances) {
    CHECK(inst.keypoints.size() == cfg.num_keypoints);
    CHECK(inst.area > 0);
  }
}

TEST_CASE("dataset round trip is bit exact") {
  SynthConfig cfg;
  cfg.image_h = 48;
  cfg.image_w = 40;
  const auto dir = std::filesystem::temp_directory_path() / "deskpose_synth_test";
  std::filesystem::remove_all(dir);
  write_dataset(dir.string(), 99, 5, cfg);

  const DatasetManifest man = read_manifest(dir.string());
  CHECK(man.count == 5);
  CHECK(man.image_h == 48);
  CHECK(man.image_w == 40);
  CHECK(man.seed == 99);

  const std::vector<SyntheticScene> back = load_dataset(dir.string());
  REQUIRE(back.size() == 5);
  for (size_t i = 0; i < 5; ++i) {
    const SyntheticScene want = synth_scene(99, i, cfg);
    CHECK(back[i].image.data == want.image.data);
    REQUIRE(back[i].instances.size() == want.instances.size());
    for (size_t j = 0; j < want.instances.size(); ++j) {
      CHECK(back[i].instances[j].keypoints == want.instances[j].keypoints);
      CHECK(back[i].instances[j].bbox == want.instances[j].bbox);
    }
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("identity crop reproduces image and keypoints") {
  SynthConfig cfg;
  const SyntheticScene s = synth_scene(3, 1, cfg);
  const PoseInstance& inst = s.instances[0];
  const size_t h = s.image.shape[1], w = s.image.shape[2];
  const CropResult crop =
      crop_resize(s.image, inst.keypoints, {0, 0, (double)w, (double)h}, h, w);
  CHECK(crop.patch.data == s.image.data);
  for (size_t k = 0; k < inst.keypoints.size(); ++k) {
    const auto img_pt = crop.affine.to_image(crop.kp_norm[k]);
    CHECK(img_pt[0] == doctest::Approx(inst.keypoints[k][0]).epsilon(1e-12));
    CHECK(img_pt[1] == doctest::Approx(inst.keypoints[k][1]).epsilon(1e-12));
  }
}

TEST_CASE("bbox center maps to the patch center") {
  SynthConfig cfg;
  const SyntheticScene s = synth_scene(3, 2, cfg);
  const std::array<double, 4> bbox = {10.0, 6.0, 20.0, 30.0};
  const std::vector<std::array<double, 2>> center = {{20.0, 21.0}};
  const CropResult crop = crop_resize(s.image, center, bbox, 24, 24);
  CHECK(crop.kp_norm[0][0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(crop.kp_norm[0][1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("crop transform round trips to 1e-9") {
  SynthConfig cfg;
  const SyntheticScene s = synth_scene(17, 0, cfg);
  const PoseInstance& inst = s.instances[0];
  const CropResult crop = crop_resize(s.image, inst.keypoints, inst.bbox, 32, 32);
  for (size_t k = 0; k < inst.keypoints.size(); ++k) {
    const auto back = crop.affine.to_image(crop.affine.to_norm(inst.keypoints[k]));
    CHECK(std::fabs(back[0] - inst.keypoints[k][0]) < 1e-9);
    CHECK(std::fabs(back[1] - inst.keypoints[k][1]) < 1e-9);
  }
  CHECK_THROWS_AS(crop_resize(s.image, inst.keypoints, {5, 5, 0, 10}, 8, 8),
                  ContractError);
}

TEST_CASE("config validation bounds the keypoint count") {
  SynthConfig cfg;
  cfg.num_keypoints = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.num_keypoints = 9;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.num_keypoints = 8;
  cfg.image_h = 8;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
