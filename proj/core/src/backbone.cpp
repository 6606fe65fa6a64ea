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

#include "deskpose/backbone.hpp"

#include "deskpose/error.hpp"

namespace deskpose {

void BackboneConfig::validate() const {
  if (strides.empty()) throw ConfigError("backbone needs at least one level");
  if (channels.size() != strides.size())
    throw ConfigError("backbone channels/strides length mismatch");
  for (size_t i = 0; i < strides.size(); ++i) {
    if (strides[i] == 0) throw ConfigError("backbone stride must be positive");
    if (i > 0) {
      if (strides[i] <= strides[i - 1])
        throw ConfigError("backbone strides must be strictly increasing");
      if (strides[i] % strides[i - 1] != 0)
        throw ConfigError("each backbone stride must divide the next");
    }
  }
  if (input_h % strides.back() != 0 || input_w % strides.back() != 0)
    throw ConfigError("input size must be divisible by the final stride");
  if (num_keypoints == 0) throw ConfigError("keypoint count must be positive");
  if (embed_width == 0) throw ConfigError("embedding width must be positive");
}

Tensor conv3x3(Tensor x, size_t h, size_t w, size_t stride, const ConvWeights& cw,
               size_t& oh, size_t& ow) {
  DKP_CHECK(stride >= 1, "conv stride must be positive");
  const size_t c_in = x.shape()[1];
  DKP_CHECK(x.shape()[0] == h * w, "conv input extent mismatch");
  DKP_CHECK(cw.w.shape()[0] == 9 * c_in, "conv weight rows != 9*c_in");
  oh = (h - 1) / stride + 1;
  ow = (w - 1) / stride + 1;

  // im2col row order: output position p-major, then the 3x3 tap; out-of-
  // bounds taps map to -1, which gather_rows turns into a zero row.
  std::vector<int64_t> idx;
  idx.reserve(oh * ow * 9);
  for (size_t oy = 0; oy < oh; ++oy)
    for (size_t ox = 0; ox < ow; ++ox) {
      const int64_t cy = static_cast<int64_t>(oy * stride);
      const int64_t cx = static_cast<int64_t>(ox * stride);
      for (int64_t dy = -1; dy <= 1; ++dy)
        for (int64_t dx = -1; dx <= 1; ++dx) {
          const int64_t y = cy + dy, xx = cx + dx;
          const bool in = y >= 0 && y < static_cast<int64_t>(h) && xx >= 0 &&
                          xx < static_cast<int64_t>(w);
          idx.push_back(in ? y * static_cast<int64_t>(w) + xx : -1);
        }
    }
  Tensor cols = reshape(gather_rows(x, std::move(idx)), {oh * ow, 9 * c_in});
  return linear(cols, cw.w, cw.b);
}

Tensor channel_norm(Tensor x, const NormWeights& nw, double eps) {
  Tensor m = reduce_mean(x, 0, true);                    // [1 x c]
  Tensor xc = sub(x, m);
  Tensor v = reduce_mean(mul(xc, xc), 0, true);          // [1 x c]
  Tensor denom = sqrt(add(v, x.graph()->scalar(eps)));
  return add(mul(divide(xc, denom), nw.gamma), nw.beta);
}

FeaturePyramid extract_pyramid(Tensor image, const BackboneConfig& cfg,
                               const BackboneWeights& w) {
  cfg.validate();
  DKP_CHECK(image.rank() == 2 && image.shape()[0] == cfg.input_h * cfg.input_w &&
                image.shape()[1] == 3,
            "image shape does not match backbone config");
  DKP_CHECK(w.levels.size() == cfg.levels(), "backbone weights/config level mismatch");

  FeaturePyramid pyr;
  Tensor cur = image;
  size_t h = cfg.input_h,ix = cfg.input_w;
  size_t prev_stride = 1;
  for (size_t l = 0; l < cfg.levels(); ++l) {
    const size_t ratio = cfg.strides[l] / prev_stride;
    prev_stride = cfg.strides[l];
    size_t oh = 0, ow = 0;
    Tensor y = conv3x3(cur, h, ix, ratio, w.levels[l].conv1, oh, ow);
    y = tanh(channel_norm(y, w.levels[l].norm1));
    size_t oh2 = 0, ow2 = 0;
    y = conv3x3(y, oh, ow, 1, w.levels[l].conv2, oh2, ow2);
    y = tanh(channel_norm(y, w.levels[l].norm2));
    pyr.levels.push_back(FeatureLevel{y, oh2, ow2, cfg.channels[l], cfg.strides[l]});
    cur = y;
    h = oh2;
    ix = ow2;
  }
  pyr.pooled = reduce_mean(pyr.levels.back().feat, 0, true);  // [1 x c_last]
  return pyr;
}

CoarseProposal coarse_proposal(Tensor pooled, Tensor head_w, Tensor head_b,
                               size_t num_keypoints) {
  DKP_CHECK(head_w.shape()[1] == num_keypoints * 4, "coarse head output width != K*4");
  Tensor raw = reshape(linear(pooled, head_w, head_b), {num_keypoints, 4});
  CoarseProposal p;
  p.mu = sigmoid(slice(raw, 1, 0, 2));
  p.b = clamp_min(sigmoid(slice(raw, 1, 2, 2)), 1e-6);
  return p;
}

}  // namespace deskpose
