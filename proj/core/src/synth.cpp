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

#include "deskpose/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "deskpose/error.hpp"
#include "deskpose/rng.hpp"

namespace deskpose {

namespace {

constexpr double kDiscRadius = 2.5;
constexpr double kStrokeHalfWidth = 1.0;
constexpr double kMargin = 3.0;  // joints are clamped this far from edges
// A disc influences pixels within kDiscRadius + 0.5 of its center, and a
// joint's own center pixel sits within ~0.71 of the joint, so 5 px keeps
// every center pixel painted purely by its own disc.
constexpr double kMinSeparation = 5.0;
constexpr int kPlaceAttempts = 128;
constexpr uint64_t kPaletteKey = 0xD15C0C01ULL;
constexpr uint64_t kTextureKey = 0x7E57B4C6ULL;

// Nominal bone length as a fraction of min(H, W), per child joint.
constexpr std::array<double, kSkeletonJoints> kBoneFrac = {0.0,  0.14, 0.22, 0.16,
                                                           0.14, 0.16, 0.14, 0.20};

double quantize32(double v) { return static_cast<double>(static_cast<float>(v)); }

double hash3(uint64_t key, uint64_t a, uint64_t b) {
  return hash_unit(hash_mix(key, a), b);
}

// Smooth value-noise background plus fine per-pixel grain; trig-free.
double background_at(uint64_t seed, size_t c, size_t y, size_t x) {
  constexpr size_t kCell = 8;
  const uint64_t key = hash_mix(kTextureKey, hash_mix(seed, c));
  const size_t gx = x / kCell, gy = y / kCell;
  const double fx = static_cast<double>(x % kCell) / kCell;
  const double fy = static_cast<double>(y % kCell) / kCell;
  const double v00 = hash3(key, gx, gy);
  const double v10 = hash3(key, gx + 1, gy);
  const double v01 = hash3(key, gx, gy + 1);
  const double v11 = hash3(key, gx + 1, gy + 1);
  const double smooth = (v00 * (1 - fx) + v10 * fx) * (1 - fy) +
                        (v01 * (1 - fx) + v11 * fx) * fy;
  const double grain = hash3(hash_mix(key, 0x9E37ULL), y, x) - 0.5;
  return 0.15 + 0.30 * smooth + 0.05 * grain;
}

// Linear-ramp coverage: 1 inside, fading to 0 over one pixel.
double coverage(double dist, double radius) {
  return std::clamp(radius + 0.5 - dist, 0.0, 1.0);
}

void blend(Array& img, size_t y, size_t x, const std::array<double, 3>& color, double cov) {
  if (cov <= 0.0) return;
  const size_t h = img.shape[1], w = img.shape[2];
  for (size_t c = 0; c < 3; ++c) {
    double& px = img.data[(c * h + y) * w + x];
    px = px * (1.0 - cov) + color[c] * cov;
  }
}

double dist_to_segment(double px, double py, const std::array<double, 2>& a,
                       const std::array<double, 2>& b) {
  const double vx = b[0] - a[0], vy = b[1] - a[1];
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((px - a[0]) * vx + (py - a[1]) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (a[0] + t * vx), dy = py - (a[1] + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

void draw_segment(Array& img, const std::array<double, 2>& a, const std::array<double, 2>& b,
                  const std::array<double, 3>& color, double radius) {
  const size_t h = img.shape[1], w = img.shape[2];
  const double pad = radius + 1.0;
  const long x0 = std::max(0L, static_cast<long>(std::floor(std::min(a[0], b[0]) - pad)));
  const long x1 = std::min<long>(w - 1, static_cast<long>(std::ceil(std::max(a[0], b[0]) + pad)));
  const long y0 = std::max(0L, static_cast<long>(std::floor(std::min(a[1], b[1]) - pad)));
  const long y1 = std::min<long>(h - 1, static_cast<long>(std::ceil(std::max(a[1], b[1]) + pad)));
  for (long y = y0; y <= y1; ++y)
    for (long x = x0; x <= x1; ++x) {
      const double d = dist_to_segment(static_cast<double>(x), static_cast<double>(y), a, b);
      blend(img, y, x, color, coverage(d, radius));
    }
}

// Figures spread over a coarse grid so multi-instance scenes stay mostly
// disjoint; the root lands in the central band of figure f's cell.
std::vector<std::array<double, 2>> sample_figure(Rng& rng, const SynthConfig& cfg,
                                                 size_t figure) {
  const size_t k = cfg.num_keypoints;
  size_t cells = 1;
  while (cells * cells < cfg.figures_per_image) ++cells;
  const double cw = static_cast<double>(cfg.image_w) / cells;
  const double ch = static_cast<double>(cfg.image_h) / cells;
  const double unit = std::min(ch, cw);
  const double cx = static_cast<double>(figure % cells);
  const double cy = static_cast<double>(figure / cells);
  std::vector<std::array<double, 2>> joints(k);
  joints[0] = {(cx + rng.uniform(0.3, 0.7)) * cw, (cy + rng.uniform(0.3, 0.7)) * ch};
  for (size_t j = 1; j < k; ++j) {
    const int parent = kSkeletonParent[j];
    double dx = rng.uniform(-1.0, 1.0), dy = rng.uniform(-1.0, 1.0);
    const double n = std::sqrt(dx * dx + dy * dy);
    if (n < 0.1) {
      dx = 0.0;
      dy = 1.0;
    } else {
      dx /= n;
      dy /= n;
    }
    const double len = unit * kBoneFrac[j] * rng.uniform(0.7, 1.3);
    joints[j] = {joints[parent][0] + dx * len, joints[parent][1] + dy * len};
  }
  for (auto& p : joints) {
    p[0] = std::clamp(p[0], kMargin, cfg.image_w - 1 - kMargin);
    p[1] = std::clamp(p[1], kMargin, cfg.image_h - 1 - kMargin);
  }
  return joints;
}

bool well_separated(const std::vector<std::array<double, 2>>& joints,
                    const std::vector<std::array<double, 2>>& placed) {
  auto far = [](const std::array<double, 2>& a, const std::array<double, 2>& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1];
    return dx * dx + dy * dy >= kMinSeparation * kMinSeparation;
  };
  for (size_t i = 0; i < joints.size(); ++i) {
    for (size_t j = i + 1; j < joints.size(); ++j)
      if (!far(joints[i], joints[j])) return false;
    for (const auto& q : placed)
      if (!far(joints[i], q)) return false;
  }
  return true;
}

PoseInstance make_instance(int64_t image_id, const std::vector<std::array<double, 2>>& joints,
                           const SynthConfig& cfg) {
  PoseInstance inst;
  inst.image_id = image_id;
  inst.keypoints = joints;
  inst.visibility.assign(joints.size(), 1);
  double xlo = joints[0][0], xhi = joints[0][0], ylo = joints[0][1], yhi = joints[0][1];
  for (const auto& p : joints) {
    xlo = std::min(xlo, p[0]);
    xhi = std::max(xhi, p[0]);
    ylo = std::min(ylo, p[1]);
    yhi = std::max(yhi, p[1]);
  }
  constexpr double kPad = 4.0;
  xlo = std::max(0.0, xlo - kPad);
  ylo = std::max(0.0, ylo - kPad);
  xhi = std::min(cfg.image_w - 1.0, xhi + kPad);
  yhi = std::min(cfg.image_h - 1.0, yhi + kPad);
  inst.bbox = {xlo, ylo, xhi - xlo, yhi - ylo};
  inst.bbox_score = 1.0;
  inst.area = inst.bbox[2] * inst.bbox[3];
  return inst;
}

void append_u32_le(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

std::string scene_stem(uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06llu", static_cast<unsigned long long>(index));
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (num_keypoints < 2 || num_keypoints > kSkeletonJoints)
    throw ConfigError("num_keypoints must be in [2, 8]");
  if (image_h < 16 || image_w < 16) throw ConfigError("image size must be at least 16");
  if (figures_per_image < 1) throw ConfigError("figures_per_image must be >= 1");
}

std::array<double, 3> joint_color(size_t k) {
  std::array<double, 3> c;
  for (size_t i = 0; i < 3; ++i)
    c[i] = quantize32(0.35 + 0.60 * hash3(kPaletteKey, k, i));
  return c;
}

SyntheticScene synth_scene(uint64_t seed, uint64_t index, const SynthConfig& cfg) {
  cfg.validate();
  SyntheticScene scene;
  scene.seed = seed;
  scene.index = index;
  scene.image = Array({3, cfg.image_h, cfg.image_w});
  Array& img = scene.image;

  for (size_t c = 0; c < 3; ++c)
    for (size_t y = 0; y < cfg.image_h; ++y)
      for (size_t x = 0; x < cfg.image_w; ++x)
        img.data[(c * cfg.image_h + y) * cfg.image_w + x] =
            background_at(seed ^ index, c, y, x);

  Rng rng = Rng::stream(seed, hash_mix(index, 0x5CE9EULL));
  std::vector<std::vector<std::array<double, 2>>> figures;
  std::vector<std::array<double, 2>> placed;
  for (size_t f = 0; f < cfg.figures_per_image; ++f) {
    std::vector<std::array<double, 2>> joints;
    bool ok = false;
    for (int attempt = 0; attempt < kPlaceAttempts && !ok; ++attempt) {
      joints = sample_figure(rng, cfg, f);
      ok = well_separated(joints, placed);
    }
    if (!ok) scene.separated = false;
    placed.insert(placed.end(), joints.begin(), joints.end());
    figures.push_back(std::move(joints));
  }

  const std::array<double, 3> stroke = {0.85, 0.85, 0.85};
  for (const auto& joints : figures)
    for (size_t j = 1; j < joints.size(); ++j)
      draw_segment(img, joints[kSkeletonParent[j]], joints[j], stroke, kStrokeHalfWidth);
  // Discs last so the pixel under each joint center carries the joint color.
  for (const auto& joints : figures)
    for (size_t j = 0; j < joints.size(); ++j)
      draw_segment(img, joints[j], joints[j], joint_color(j), kDiscRadius);

  for (double& v : img.data) v = quantize32(v);

  for (const auto& joints : figures)
    scene.instances.push_back(make_instance(static_cast<int64_t>(index), joints, cfg));
  return scene;
}

std::vector<SyntheticScene> synth_generate(uint64_t seed, size_t n, const SynthConfig& cfg) {
  DKP_CHECK(n >= 1, "scene count must be >= 1");
  std::vector<SyntheticScene> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) out.push_back(synth_scene(seed, i, cfg));
  return out;
}

void write_dataset(const std::string& dir, uint64_t seed, size_t n, const SynthConfig& cfg) {
  cfg.validate();
  DKP_CHECK(n >= 1, "scene count must be >= 1");
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["count"] = n;
  manifest["num_keypoints"] = cfg.num_keypoints;
  manifest["image_h"] = cfg.image_h;
  manifest["image_w"] = cfg.image_w;
  manifest["figures_per_image"] = cfg.figures_per_image;
  manifest["seed"] = seed;
  {
    std::ofstream out(fs::path(dir) / "manifest.json", std::ios::trunc);
    if (!out) throw FormatError("cannot write manifest.json in '" + dir + "'");
    out << manifest.dump(2) << "\n";
  }

  std::vector<PoseInstance> all;
  for (size_t i = 0; i < n; ++i) {
    SyntheticScene scene = synth_scene(seed, i, cfg);
    const std::string stem = scene_stem(i);

    std::string raw;
    raw.reserve(scene.image.data.size() * 4);
    for (double v : scene.image.data) {
      const float f = static_cast<float>(v);
      uint32_t bits;
      static_assert(sizeof bits == sizeof f);
      std::memcpy(&bits, &f, sizeof bits);
      append_u32_le(raw, bits);
    }
    std::ofstream rf(fs::path(dir) / (stem + ".raw"), std::ios::binary | std::ios::trunc);
    if (!rf) throw FormatError("cannot write scene raw file");
    rf.write(raw.data(), static_cast<std::streamsize>(raw.size()));

    nlohmann::json side;
    side["format_version"] = 1;
    side["seed"] = seed;
    side["index"] = i;
    side["shape"] = scene.image.shape;
    side["separated"] = scene.separated;
    std::ofstream sf(fs::path(dir) / (stem + ".json"), std::ios::trunc);
    if (!sf) throw FormatError("cannot write scene sidecar");
    sf << side.dump(2) << "\n";

    for (const PoseInstance& inst : scene.instances) all.push_back(inst);
  }
  write_instances((fs::path(dir) / "annotations.jsonl").string(), all);
}

DatasetManifest read_manifest(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw FormatError("cannot open manifest.json in '" + dir + "'");
  nlohmann::json j;
  try {
    in >> j;
    DatasetManifest m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != 1) throw FormatError("unsupported dataset format version");
    m.count = j.at("count").get<size_t>();
    m.num_keypoints = j.at("num_keypoints").get<size_t>();
    m.image_h = j.at("image_h").get<size_t>();
    m.image_w = j.at("image_w").get<size_t>();
    m.figures_per_image = j.at("figures_per_image").get<size_t>();
    m.seed = j.at("seed").get<uint64_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad manifest.json: ") + e.what());
  }
}

std::vector<SyntheticScene> load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  const DatasetManifest m = read_manifest(dir);
  std::map<int64_t, std::vector<PoseInstance>> by_image;
  for (PoseInstance& inst : read_instances((fs::path(dir) / "annotations.jsonl").string()))
    by_image[inst.image_id].push_back(std::move(inst));

  std::vector<SyntheticScene> scenes;
  scenes.reserve(m.count);
  for (size_t i = 0; i < m.count; ++i) {
    const std::string stem = scene_stem(i);
    SyntheticScene scene;

    std::ifstream sf(fs::path(dir) / (stem + ".json"));
    if (!sf) throw FormatError("missing scene sidecar " + stem + ".json");
    nlohmann::json side;
    try {
      sf >> side;
      scene.seed = side.at("seed").get<uint64_t>();
      scene.index = side.at("index").get<uint64_t>();
      scene.separated = side.at("separated").get<bool>();
      const auto shape = side.at("shape").get<Shape>();
      scene.image = Array(shape);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bad scene sidecar: ") + e.what());
    }

    std::ifstream rf(fs::path(dir) / (stem + ".raw"), std::ios::binary);
    if (!rf) throw FormatError("missing scene raw file " + stem + ".raw");
    std::string raw((std::istreambuf_iterator<char>(rf)), std::istreambuf_iterator<char>());
    if (raw.size() != scene.image.data.size() * 4)
      throw FormatError("scene raw file size does not match sidecar shape");
    for (size_t k = 0; k < scene.image.data.size(); ++k) {
      const uint32_t bits =
          read_u32_le(reinterpret_cast<const unsigned char*>(raw.data()) + 4 * k);
      float f;
      std::memcpy(&f, &bits, sizeof f);
      scene.image.data[k] = static_cast<double>(f);
    }

    auto it = by_image.find(static_cast<int64_t>(i));
    if (it != by_image.end()) scene.instances = std::move(it->second);
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

CropResult crop_resize(const Array& image, const std::vector<std::array<double, 2>>& keypoints,
                       const std::array<double, 4>& bbox, size_t out_h, size_t out_w) {
  DKP_CHECK(image.shape.size() == 3 && image.shape[0] == 3, "image must be {3,H,W}");
  DKP_CHECK(bbox[2] > 0 && bbox[3] > 0, "bbox must have positive extent");
  DKP_CHECK(out_h > 0 && out_w > 0, "output size must be positive");
  const size_t h = image.shape[1], w = image.shape[2];

  CropResult res;
  res.affine = {bbox[0], bbox[1], bbox[2], bbox[3]};
  res.patch = Array({3, out_h, out_w});
  const double sx = bbox[2] / static_cast<double>(out_w);
  const double sy = bbox[3] / static_cast<double>(out_h);
  for (size_t v = 0; v < out_h; ++v) {
    const double yf = bbox[1] + (v + 0.5) * sy - 0.5;
    for (size_t u = 0; u < out_w; ++u) {
      const double xf = bbox[0] + (u + 0.5) * sx - 0.5;
      const double xc = std::clamp(xf, 0.0, static_cast<double>(w - 1));
      const double yc = std::clamp(yf, 0.0, static_cast<double>(h - 1));
      const size_t x0 = std::min(static_cast<size_t>(xc), w - 1);
      const size_t y0 = std::min(static_cast<size_t>(yc), h - 1);
      const size_t x1 = std::min(x0 + 1, w - 1);
      const size_t y1 = std::min(y0 + 1, h - 1);
      const double fx = xc - static_cast<double>(x0);
      const double fy = yc - static_cast<double>(y0);
      for (size_t c = 0; c < 3; ++c) {
        const auto px = [&](size_t yy, size_t xx) { return image.data[(c * h + yy) * w + xx]; };
        res.patch.data[(c * out_h + v) * out_w + u] =
            (px(y0, x0) * (1 - fx) + px(y0, x1) * fx) * (1 - fy) +
            (px(y1, x0) * (1 - fx) + px(y1, x1) * fx) * fy;
      }
    }
  }
  res.kp_norm.reserve(keypoints.size());
  for (const auto& p : keypoints) res.kp_norm.push_back(res.affine.to_norm(p));
  return res;
}

}  // namespace deskpose
