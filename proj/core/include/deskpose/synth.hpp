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

#include "deskpose/array.hpp"
#include "deskpose/eval.hpp"

namespace deskpose {

// Deterministic stick-figure scene generator. Images are real-valued RGB
// planes; every random decision derives from (seed, scene index) so that
// regeneration is bit-identical. Pixel data is quantized to the 32-bit-real
// grid at render time, which makes the in-memory image equal the on-disk
// representation byte for byte.

struct SynthConfig {
  size_t num_keypoints = 8;  // skeleton truncated to the first K joints
  size_t image_h = 64;
  size_t image_w = 64;
  size_t figures_per_image = 1;

  void validate() const;
};

struct SyntheticScene {
  Array image;  // {3, H, W}
  std::vector<PoseInstance> instances;
  uint64_t seed = 0;
  uint64_t index = 0;
  // True when every pair of joints in the scene is far enough apart that
  // each joint's disc is unoccluded (the generator retries to achieve this).
  bool separated = true;
};

// Skeleton topology, shipped as data: parent joint index per joint, parent
// always smaller than child, -1 for the root. Joint order: neck, head,
// pelvis, left elbow, left hand, right elbow, right hand, foot.
inline constexpr size_t kSkeletonJoints = 8;
inline constexpr std::array<int, kSkeletonJoints> kSkeletonParent = {-1, 0, 0, 0,
                                                                     3,  0, 5, 2};

// Disc color of joint k, distinct per joint, already on the 32-bit-real grid.
std::array<double, 3> joint_color(size_t k);

// Renders one scene. Deterministic in (seed, index, cfg).
SyntheticScene synth_scene(uint64_t seed, uint64_t index, const SynthConfig& cfg);

// Renders scenes index 0..n-1.
std::vector<SyntheticScene> synth_generate(uint64_t seed, size_t n, const SynthConfig& cfg);

// Dataset directory layout: manifest.json + NNNNNN.raw (little-endian 32-bit
// real planes) + NNNNNN.json sidecars + annotations.jsonl (eval schema, one
// instance per line keyed by image_id = scene index).
struct DatasetManifest {
  int format_version = 1;
  size_t count = 0;
  size_t num_keypoints = 0;
  size_t image_h = 0;
  size_t image_w = 0;
  size_t figures_per_image = 1;
  uint64_t seed = 0;
};

void write_dataset(const std::string& dir, uint64_t seed, size_t n, const SynthConfig& cfg);
DatasetManifest read_manifest(const std::string& dir);
std::vector<SyntheticScene> load_dataset(const std::string& dir);

// Top-down crop transform. Normalized patch coordinates live in [0,1]^2 of
// the bbox; the affine exposes both directions so predictions can be
// projected back into original-image pixels.
struct CropAffine {
  double x0 = 0, y0 = 0, sx = 1, sy = 1;

  std::array<double, 2> to_image(const std::array<double, 2>& norm) const {
    return {x0 + norm[0] * sx, y0 + norm[1] * sy};
  }
  std::array<double, 2> to_norm(const std::array<double, 2>& image_pt) const {
    return {(image_pt[0] - x0) / sx, (image_pt[1] - y0) / sy};
  }
};

struct CropResult {
  Array patch;  // {3, out_h, out_w}
  std::vector<std::array<double, 2>> kp_norm;
  CropAffine affine;
};

// Bilinear crop-and-resize with half-pixel sampling and border clamping.
// Throws ContractError on a degenerate bbox.
CropResult crop_resize(const Array& image, const std::vector<std::array<double, 2>>& keypoints,
                       const std::array<double, 4>& bbox, size_t out_h, size_t out_w);

}  // namespace deskpose
