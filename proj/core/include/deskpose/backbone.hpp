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

#include <cstddef>
#include <vector>

#include "deskpose/graph.hpp"

namespace deskpose {

// Tiny strided conv feature extractor. Feature maps are held as 2-D tensors
// of shape [H*W x channels] with rows in y-major order; the spatial extent
// travels alongside in FeatureLevel.

struct BackboneConfig {
  size_t input_h = 64;
  size_t input_w = 64;
  std::vector<size_t> channels;  // channels per level
  std::vector<size_t> strides;   // cumulative downsample factor per level
  size_t num_keypoints = 8;      // K
  size_t embed_width = 32;       // C, width of the decoder embedding

  size_t levels() const { return strides.size(); }
  // Throws ConfigError unless: L >= 1, |channels| == L, strides strictly
  // increasing with each dividing the next, and input divisible by the
  // final stride.
  void validate() const;
};

struct FeatureLevel {
  Tensor feat;  // [h*w x channels]
  size_t h = 0, w = 0;
  size_t channels = 0;
  size_t stride = 0;
};

struct FeaturePyramid {
  std::vector<FeatureLevel> levels;
  Tensor pooled;  // [1 x channels_last], arithmetic mean over last-level positions
};

struct CoarseProposal {
  Tensor mu;  // [K x 2] in [0,1]
  Tensor b;   // [K x 2] in (0,1], clamped below at 1e-6
};

struct ConvWeights {
  Tensor w;  // [9*c_in x c_out]
  Tensor b;  // [c_out]
};

struct NormWeights {
  Tensor gamma;  // [c]
  Tensor beta;   // [c]
};

struct LevelWeights {
  ConvWeights conv1, conv2;
  NormWeights norm1, norm2;
};

struct BackboneWeights {
  std::vector<LevelWeights> levels;
  Tensor head_w;  // [channels_last x K*4]
  Tensor head_b;  // [K*4]
};

// 3x3 convolution with zero padding 1 via im2col (gather + matmul).
// x: [h*w x c_in]; returns [oh*ow x c_out] and writes the output extent.
Tensor conv3x3(Tensor x, size_t h, size_t w, size_t stride, const ConvWeights& cw,
               size_t& oh, size_t& ow);

// Per-channel normalization over the spatial axis (mean/variance across the
// rows of one instance), followed by learned scale and shift.
Tensor channel_norm(Tensor x, const NormWeights& nw, double eps = 1e-5);

// image: [H*W x 3] rows y-major. Each level applies conv(stride ratio) ->
// norm -> tanh -> conv(1) -> norm -> tanh.
FeaturePyramid extract_pyramid(Tensor image, const BackboneConfig& cfg,
                               const BackboneWeights& w);

// Single affine map from the pooled vector; columns [0,2) squash to the
// location, [2,4) to the scale.
CoarseProposal coarse_proposal(Tensor pooled, Tensor head_w, Tensor head_b,
                               size_t num_keypoints);

}  // namespace deskpose
