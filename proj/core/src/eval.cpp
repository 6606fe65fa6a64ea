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

#include "deskpose/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "deskpose/error.hpp"

namespace deskpose {

OksConfig OksConfig::uniform(size_t num_keypoints) {
  OksConfig cfg;
  cfg.k.assign(num_keypoints, 0.08);
  for (int i = 0; i <= 9; ++i) cfg.thresholds.push_back(0.50 + 0.05 * i);
  return cfg;
}

void OksConfig::validate(size_t num_keypoints) const {
  if (k.size() != num_keypoints) throw ConfigError("OKS falloff list length != K");
  for (double v : k)
    if (!(v > 0)) throw ConfigError("OKS falloff constants must be positive");
  for (size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0 && thresholds[i] < 1))
      throw ConfigError("OKS thresholds must lie in (0,1)");
    if (i > 0 && thresholds[i] <= thresholds[i - 1])
      throw ConfigError("OKS thresholds must be strictly increasing");
  }
}

double instance_score(const PoseInstance& inst) {
  DKP_CHECK(!inst.kp_scores.empty(), "instance has no keypoint scores");
  double sum = 0.0;
  for (double s : inst.kp_scores) sum += s;
  return inst.bbox_score * sum / static_cast<double>(inst.kp_scores.size());
}

double oks(const std::vector<std::array<double, 2>>& pred, const PoseInstance& gt,
           const OksConfig& cfg) {
  DKP_CHECK(pred.size() == gt.keypoints.size(), "prediction/gt keypoint count mismatch");
  DKP_CHECK(cfg.k.size() == gt.keypoints.size(), "OKS falloff list length mismatch");
  DKP_CHECK(gt.area > 0, "gt area must be positive");
  double sum = 0.0;
  size_t visible = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (gt.visibility[i] == 0) continue;
    const double dx = pred[i][0] - gt.keypoints[i][0];
    const double dy = pred[i][1] - gt.keypoints[i][1];
    sum += std::exp(-(dx * dx + dy * dy) / (2.0 * gt.area * cfg.k[i] * cfg.k[i]));
    ++visible;
  }
  if (visible == 0) throw UndefinedInputError("OKS undefined: no visible gt keypoints");
  return sum / static_cast<double>(visible);
}

namespace {

struct ScoredDet {
  size_t index;  // into the detections list
  double score;
};

bool has_visible(const PoseInstance& gt) {
  for (int v : gt.visibility)
    if (v != 0) return true;
  return false;
}

struct ImageCase {
  std::vector<size_t> det;  // detection indices, score-descending
  std::vector<size_t> gt;   // gt indices (only those with a visible keypoint)
  std::vector<std::vector<double>> oks_mat;  // [det x gt]
};

std::vector<ImageCase> build_cases(const std::vector<PoseInstance>& detections,
                                   const std::vector<PoseInstance>& ground_truths,
                                   const OksConfig& cfg,
                                   const std::vector<double>& scores) {
  std::map<int64_t, ImageCase> by_image;
  for (size_t i = 0; i < ground_truths.size(); ++i)
    if (has_visible(ground_truths[i])) by_image[ground_truths[i].image_id].gt.push_back(i);
  for (size_t i = 0; i < detections.size(); ++i) by_image[detections[i].image_id].det.push_back(i);

  std::vector<ImageCase> cases;
  for (auto& [id, c] : by_image) {
    (void)id;
    std::stable_sort(c.det.begin(), c.det.end(), [&](size_t a, size_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return a < b;
    });
    c.oks_mat.assign(c.det.size(), std::vector<double>(c.gt.size(), 0.0));
    for (size_t di = 0; di < c.det.size(); ++di)
      for (size_t gi = 0; gi < c.gt.size(); ++gi)
        c.oks_mat[di][gi] =
            oks(detections[c.det[di]].keypoints, ground_truths[c.gt[gi]], cfg);
    cases.push_back(std::move(c));
  }
  return cases;
}

// Pooled PR curve with 101-point interpolation.
double ap_from_labels(std::vector<std::pair<double, bool>>& scored_tp, size_t total_gt) {
  if (total_gt == 0 || scored_tp.empty()) return 0.0;
  std::stable_sort(scored_tp.begin(), scored_tp.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  const size_t n = scored_tp.size();
  std::vector<double> recall(n), precision(n);
  size_t tp = 0;
  for (size_t i = 0; i < n; ++i) {
    if (scored_tp[i].second) ++tp;
    recall[i] = static_cast<double>(tp) / static_cast<double>(total_gt);
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  // Monotone non-increasing precision envelope.
  for (size_t i = n - 1; i-- > 0;) precision[i] = std::max(precision[i], precision[i + 1]);
  double ap = 0.0;
  for (int r = 0; r <= 100; ++r) {
    const double want = r / 100.0;
    // First index whose recall reaches the target.
    size_t lo = std::lower_bound(recall.begin(), recall.end(), want) - recall.begin();
    if (lo < n) ap += precision[lo];
  }
  return ap / 101.0;
}

using Matcher = std::vector<bool> (*)(const ImageCase&, double);

// Score-ordered greedy: each detection takes the unmatched gt with the
// highest OKS >= threshold (lowest gt index on ties).
std::vector<bool> greedy_match(const ImageCase& c, double thr) {
  std::vector<bool> tp(c.det.size(), false);
  std::vector<bool> used(c.gt.size(), false);
  for (size_t di = 0; di < c.det.size(); ++di) {
    double best = -1.0;
    size_t best_gi = c.gt.size();
    for (size_t gi = 0; gi < c.gt.size(); ++gi) {
      if (used[gi]) continue;
      const double v = c.oks_mat[di][gi];
      if (v >= thr && v > best) {
        best = v;
        best_gi = gi;
      }
    }
    if (best_gi < c.gt.size()) {
      used[best_gi] = true;
      tp[di] = true;
    }
  }
  return tp;
}

// Exhaustive search for the assignment whose per-detection OKS vector (in
// detection-score order, -1 for unmatched) is lexicographically largest.
struct OracleSearch {
  const ImageCase* c;
  double thr;
  std::vector<int> current, best;       // gt index per det, -1 for none
  std::vector<double> cur_v, best_v;    // OKS per det, -1 for none
  std::vector<bool> used;

  void run(size_t di) {
    if (di == c->det.size()) {
      if (best.empty() || std::lexicographical_compare(best_v.begin(), best_v.end(),
                                                       cur_v.begin(), cur_v.end())) {
        best = current;
        best_v = cur_v;
      }
      return;
    }
    for (size_t gi = 0; gi < c->gt.size(); ++gi) {
      if (used[gi] || c->oks_mat[di][gi] < thr) continue;
      used[gi] = true;
      current[di] = static_cast<int>(gi);
      cur_v[di] = c->oks_mat[di][gi];
      run(di + 1);
      used[gi] = false;
    }
    current[di] = -1;
    cur_v[di] = -1.0;
    run(di + 1);
  }
};

std::vector<bool> oracle_match(const ImageCase& c, double thr) {
  OracleSearch s;
  s.c = &c;
  s.thr = thr;
  s.current.assign(c.det.size(), -1);
  s.cur_v.assign(c.det.size(), -1.0);
  s.used.assign(c.gt.size(), false);
  s.run(0);
  std::vector<bool> tp(c.det.size(), false);
  for (size_t di = 0; di < c.det.size(); ++di) tp[di] = s.best[di] >= 0;
  return tp;
}

ApResult ap_impl(const std::vector<PoseInstance>& detections,
                 const std::vector<PoseInstance>& ground_truths, const OksConfig& cfg,
                 bool rescore, Matcher matcher) {
  std::vector<double> scores(detections.size());
  for (size_t i = 0; i < detections.size(); ++i)
    scores[i] = rescore ? instance_score(detections[i]) : detections[i].bbox_score;

  std::vector<ImageCase> cases = build_cases(detections, ground_truths, cfg, scores);
  size_t total_gt = 0;
  for (const ImageCase& c : cases) total_gt += c.gt.size();

  ApResult res;
  for (double thr : cfg.thresholds) {
    std::vector<std::pair<double, bool>> pooled;
    for (const ImageCase& c : cases) {
      std::vector<bool> tp = matcher(c, thr);
      for (size_t di = 0; di < c.det.size(); ++di)
        pooled.emplace_back(scores[c.det[di]], tp[di]);
    }
    res.per_threshold.push_back(ap_from_labels(pooled, total_gt));
  }
  double sum = 0.0;
  for (double v : res.per_threshold) sum += v;
  res.mean = res.per_threshold.empty() ? 0.0 : sum / res.per_threshold.size();
  return res;
}

}  // namespace

ApResult average_precision(const std::vector<PoseInstance>& detections,
                           const std::vector<PoseInstance>& ground_truths,
                           const OksConfig& cfg, bool rescore) {
  return ap_impl(detections, ground_truths, cfg, rescore, &greedy_match);
}

ApResult average_precision_oracle(const std::vector<PoseInstance>& detections,
                                  const std::vector<PoseInstance>& ground_truths,
                                  const OksConfig& cfg, bool rescore) {
  return ap_impl(detections, ground_truths, cfg, rescore, &oracle_match);
}

double pck(const std::vector<PoseInstance>& predictions,
           const std::vector<PoseInstance>& ground_truths, double alpha) {
  DKP_CHECK(predictions.size() == ground_truths.size(),
            "PCK expects paired prediction/gt lists");
  size_t correct = 0, visible = 0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    const PoseInstance& p = predictions[i];
    const PoseInstance& g = ground_truths[i];
    DKP_CHECK(p.image_id == g.image_id, "PCK pair image ids differ");
    DKP_CHECK(p.keypoints.size() == g.keypoints.size(), "PCK keypoint count mismatch");
    const double norm = std::sqrt(g.bbox[2] * g.bbox[2] + g.bbox[3] * g.bbox[3]);
    DKP_CHECK(norm > 0, "PCK normalizer must be positive");
    for (size_t k = 0; k < g.keypoints.size(); ++k) {
      if (g.visibility[k] == 0) continue;
      ++visible;
      const double dx = p.keypoints[k][0] - g.keypoints[k][0];
      const double dy = p.keypoints[k][1] - g.keypoints[k][1];
      if (std::sqrt(dx * dx + dy * dy) <= alpha * norm) ++correct;
    }
  }
  if (visible == 0) throw UndefinedInputError("PCK undefined: no visible keypoints");
  return static_cast<double>(correct) / static_cast<double>(visible);
}

std::string to_jsonl(const PoseInstance& inst) {
  nlohmann::json j;
  j["image_id"] = inst.image_id;
  std::vector<double> flat;
  flat.reserve(inst.keypoints.size() * 3);
  for (size_t i = 0; i < inst.keypoints.size(); ++i) {
    flat.push_back(inst.keypoints[i][0]);
    flat.push_back(inst.keypoints[i][1]);
    flat.push_back(static_cast<double>(inst.visibility[i]));
  }
  j["keypoints"] = flat;
  j["bbox"] = inst.bbox;
  j["bbox_score"] = inst.bbox_score;
  j["kp_scores"] = inst.kp_scores;
  j["area"] = inst.area;
  return j.dump();
}

PoseInstance from_jsonl(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad instance line: ") + e.what());
  }
  PoseInstance inst;
  try {
    inst.image_id = j.at("image_id").get<int64_t>();
    const auto flat = j.at("keypoints").get<std::vector<double>>();
    if (flat.size() % 3 != 0) throw FormatError("keypoints must be flat x,y,v triples");
    for (size_t i = 0; i < flat.size(); i += 3) {
      inst.keypoints.push_back({flat[i], flat[i + 1]});
      inst.visibility.push_back(static_cast<int>(flat[i + 2]));
    }
    const auto bb = j.at("bbox").get<std::vector<double>>();
    if (bb.size() != 4) throw FormatError("bbox must have four entries");
    std::copy(bb.begin(), bb.end(), inst.bbox.begin());
    inst.bbox_score = j.at("bbox_score").get<double>();
    inst.kp_scores = j.at("kp_scores").get<std::vector<double>>();
    inst.area = j.at("area").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("instance line missing field: ") + e.what());
  }
  return inst;
}

void write_instances(const std::string& path, const std::vector<PoseInstance>& list) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  for (const PoseInstance& inst : list) out << to_jsonl(inst) << "\n";
}

std::vector<PoseInstance> read_instances(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::vector<PoseInstance> list;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    list.push_back(from_jsonl(line));
  }
  return list;
}

}  // namespace deskpose
