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

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "deskpose/attention_ref.hpp"
#include "deskpose/error.hpp"
#include "deskpose/eval.hpp"
#include "deskpose/gradcheck_suite.hpp"
#include "deskpose/model.hpp"
#include "deskpose/rng.hpp"
#include "deskpose/svg_plot.hpp"
#include "deskpose/synth.hpp"
#include "deskpose/train.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace deskpose;

// Flat knob set shared by every command; TOML keys match the long flag
// names, command-line flags override file values.
struct RunConfig {
  // Model.
  size_t input_h = 64, input_w = 64;
  std::vector<size_t> channels = {16, 32};
  std::vector<size_t> strides = {4, 8};
  size_t num_keypoints = 8;
  size_t width = 32;
  size_t dec_layers = 2, heads = 8, points = 4, ffn_hidden = 64;
  bool aux_supervision = true;
  bool noisy_queries = true;
  std::string mode = "residual";
  double lambda = 1.0;
  double score_a = 0.2;
  size_t flow_layers = 4, flow_hidden = 16;
  // Optimizer.
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, weight_decay = 1e-4;
  size_t steps = 3000, batch_size = 4;
  std::vector<double> milestones = {0.60, 0.85};
  double decay = 0.1;
  size_t eval_every_epochs = 25;
  // Data.
  size_t scenes = 32, figures = 1;
  size_t synth_h = 64, synth_w = 64;
  std::string dataset;  // directory; empty -> generate in memory from seed
  // Shared.
  uint64_t seed = 1;
  std::string out = "out";
  std::string ckpt;  // default: <out>/model.ckpt
  // Eval extras.
  bool no_rescore = false;
  bool oracle = false;
  double corrupt = 0.0;
};

ModelConfig model_config(const RunConfig& rc) {
  ModelConfig mc;
  mc.backbone.input_h = rc.input_h;
  mc.backbone.input_w = rc.input_w;
  mc.backbone.channels = rc.channels;
  mc.backbone.strides = rc.strides;
  mc.backbone.num_keypoints = rc.num_keypoints;
  mc.backbone.embed_width = rc.width;
  mc.decoder.layers = rc.dec_layers;
  mc.decoder.heads = rc.heads;
  mc.decoder.points = rc.points;
  mc.decoder.levels = rc.strides.size();
  mc.decoder.width = rc.width;
  mc.decoder.ffn_hidden = rc.ffn_hidden;
  mc.decoder.aux_supervision = rc.aux_supervision;
  mc.flow.layers = rc.flow_layers;
  mc.flow.hidden = rc.flow_hidden;
  mc.mode = likelihood_mode_from_string(rc.mode);
  mc.lambda = rc.lambda;
  mc.score_a = rc.score_a;
  mc.noisy_queries = rc.noisy_queries;
  mc.validate();
  return mc;
}

SynthConfig synth_config(const RunConfig& rc) {
  SynthConfig sc;
  sc.num_keypoints = rc.num_keypoints;
  sc.image_h = rc.synth_h;
  sc.image_w = rc.synth_w;
  sc.figures_per_image = rc.figures;
  sc.validate();
  return sc;
}

json resolved_config(const RunConfig& rc) {
  return json{{"input_h", rc.input_h},
              {"input_w", rc.input_w},
              {"channels", rc.channels},
              {"strides", rc.strides},
              {"num_keypoints", rc.num_keypoints},
              {"width", rc.width},
              {"dec_layers", rc.dec_layers},
              {"heads", rc.heads},
              {"points", rc.points},
              {"ffn_hidden", rc.ffn_hidden},
              {"aux_supervision", rc.aux_supervision},
              {"noisy_queries", rc.noisy_queries},
              {"mode", rc.mode},
              {"lambda", rc.lambda},
              {"score_a", rc.score_a},
              {"flow_layers", rc.flow_layers},
              {"flow_hidden", rc.flow_hidden},
              {"lr", rc.lr},
              {"beta1", rc.beta1},
              {"beta2", rc.beta2},
              {"weight_decay", rc.weight_decay},
              {"steps", rc.steps},
              {"batch_size", rc.batch_size},
              {"milestones", rc.milestones},
              {"decay", rc.decay},
              {"eval_every_epochs", rc.eval_every_epochs},
              {"scenes", rc.scenes},
              {"figures", rc.figures},
              {"synth_h", rc.synth_h},
              {"synth_w", rc.synth_w},
              {"dataset", rc.dataset},
              {"seed", rc.seed},
              {"out", rc.out},
              {"ckpt", rc.ckpt},
              {"no_rescore", rc.no_rescore},
              {"oracle", rc.oracle},
              {"corrupt", rc.corrupt}};
}

void write_report(const RunConfig& rc, json body) {
  body["config"] = resolved_config(rc);
  fs::create_directories(rc.out);
  const std::string path = rc.out + "/report.json";
  std::ofstream f(path);
  if (!f) throw FormatError("cannot write " + path);
  f << body.dump(2) << "\n";
}

std::string ckpt_path(const RunConfig& rc) {
  return rc.ckpt.empty() ? rc.out + "/model.ckpt" : rc.ckpt;
}

std::vector<SyntheticScene> load_scenes(const RunConfig& rc) {
  if (!rc.dataset.empty()) return load_dataset(rc.dataset);
  return synth_generate(rc.seed, rc.scenes, synth_config(rc));
}

// One detection per ground-truth instance: crop, run the model, project the
// normalized prediction back through the inverse crop transform.
struct EvalPair {
  std::vector<PoseInstance> dets, gts;
};

EvalPair run_detector(const PoseModel& model, const std::vector<SyntheticScene>& scenes,
                      const RunConfig& rc) {
  const ModelConfig& mc = model.config();
  Rng corrupt_rng = Rng::stream(rc.seed, 0xE7A1);
  EvalPair out;
  for (const SyntheticScene& scene : scenes) {
    for (const PoseInstance& gt : scene.instances) {
      if (gt.keypoints.size() != mc.backbone.num_keypoints)
        throw ConfigError("dataset has " + std::to_string(gt.keypoints.size()) +
                          " keypoints but the model expects " +
                          std::to_string(mc.backbone.num_keypoints));
      CropResult crop = crop_resize(scene.image, gt.keypoints, gt.bbox,
                                    mc.backbone.input_h, mc.backbone.input_w);
      PoseInstance det = gt;  // inherits bbox, bbox_score, image_id, area
      if (rc.oracle) {
        // Ground truth fed through the same projection path; harness check.
        for (size_t k = 0; k < gt.keypoints.size(); ++k)
          det.keypoints[k] = crop.affine.to_image(crop.kp_norm[k]);
        det.kp_scores.assign(gt.keypoints.size(), 1.0);
      } else {
        PoseModel::Prediction pred = model.forward_infer(
            image_rows(crop.patch), rc.corrupt, rc.corrupt > 0 ? &corrupt_rng : nullptr);
        for (size_t k = 0; k < gt.keypoints.size(); ++k)
          det.keypoints[k] =
              crop.affine.to_image({pred.mu.data[2 * k], pred.mu.data[2 * k + 1]});
        det.kp_scores = pred.scores;
      }
      out.dets.push_back(std::move(det));
      out.gts.push_back(gt);
    }
  }
  return out;
}

// ---------------------------------------------------------------- commands

int cmd_synth(const RunConfig& rc) {
  write_dataset(rc.out, rc.seed, rc.scenes, synth_config(rc));
  write_report(rc, json{{"command", "synth"}, {"count", rc.scenes}, {"dir", rc.out}});
  std::printf("wrote %zu scenes to %s\n", rc.scenes, rc.out.c_str());
  return 0;
}

int cmd_train(const RunConfig& rc) {
  const ModelConfig mc = model_config(rc);
  std::vector<SyntheticScene> scenes = load_scenes(rc);
  if (scenes.empty()) throw UndefinedInputError("empty dataset: nothing to train on");
  std::vector<TrainSample> samples = make_samples(scenes, mc);
  PoseModel model(mc, rc.seed);

  fs::create_directories(rc.out);
  TrainLoopConfig tc;
  tc.optim.lr = rc.lr;
  tc.optim.beta1 = rc.beta1;
  tc.optim.beta2 = rc.beta2;
  tc.optim.weight_decay = rc.weight_decay;
  tc.optim.steps = rc.steps;
  tc.optim.milestones = rc.milestones;
  tc.optim.decay = rc.decay;
  tc.batch_size = rc.batch_size;
  tc.seed = rc.seed;
  tc.eval_every_epochs = rc.eval_every_epochs;
  tc.metrics_path = rc.out + "/metrics.jsonl";
  tc.checkpoint_path = ckpt_path(rc);

  TrainResult r = train_loop(model, samples, tc);

  // Loss and accuracy curves from the metrics log.
  std::vector<std::array<double, 2>> loss_pts, l1_pts;
  std::ifstream mf(tc.metrics_path);
  for (std::string line; std::getline(mf, line);) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    loss_pts.push_back({rec["step"].get<double>(), rec["mean_loss"].get<double>()});
    if (rec.contains("mean_l1_px"))
      l1_pts.push_back({rec["step"].get<double>(), rec["mean_l1_px"].get<double>()});
  }
  write_line_plot(rc.out + "/loss_curve.svg", "training loss", "step", "mean loss",
                  {{"mean_loss", loss_pts}});
  if (!l1_pts.empty())
    write_line_plot(rc.out + "/l1_curve.svg", "keypoint error", "step", "mean L1 (px)",
                    {{"mean_l1_px", l1_pts}});

  write_report(rc, json{{"command", "train"},
                        {"samples", samples.size()},
                        {"steps", r.steps},
                        {"epochs", r.epochs},
                        {"final_loss", r.final_loss},
                        {"final_mean_l1_px", r.final_mean_l1_px},
                        {"checkpoint", tc.checkpoint_path}});
  std::printf("trained %zu steps (%zu epochs): final loss %.6f, L1 %.3f px\n", r.steps,
              r.epochs, r.final_loss, r.final_mean_l1_px);
  return 0;
}

int cmd_eval(const RunConfig& rc) {
  const ModelConfig mc = model_config(rc);
  std::vector<SyntheticScene> scenes = load_scenes(rc);
  size_t instances = 0;
  for (const SyntheticScene& s : scenes) instances += s.instances.size();
  if (instances == 0)
    throw UndefinedInputError("empty dataset: no instances to evaluate");

  PoseModel model(mc, rc.seed);
  if (!rc.oracle) model.load(ckpt_path(rc));

  EvalPair pair = run_detector(model, scenes, rc);
  const OksConfig oks_cfg = OksConfig::uniform(mc.backbone.num_keypoints);
  const bool rescore = !rc.no_rescore;
  ApResult ap = average_precision(pair.dets, pair.gts, oks_cfg, rescore);
  const double pck_05 = pck(pair.dets, pair.gts, 0.5);

  fs::create_directories(rc.out);
  write_instances(rc.out + "/predictions.jsonl", pair.dets);
  std::vector<std::array<double, 2>> ap_pts;
  for (size_t i = 0; i < oks_cfg.thresholds.size(); ++i)
    ap_pts.push_back({oks_cfg.thresholds[i], ap.per_threshold[i]});
  write_line_plot(rc.out + "/ap_curve.svg", "AP by OKS threshold", "OKS threshold",
                  "AP", {{rescore ? "rescored" : "bbox-only", ap_pts}});

  write_report(rc, json{{"command", "eval"},
                        {"instances", instances},
                        {"rescore", rescore},
                        {"ap", ap.mean},
                        {"ap_per_threshold", ap.per_threshold},
                        {"oks_thresholds", oks_cfg.thresholds},
                        {"pck_0.5", pck_05}});
  std::printf("AP %.4f (%s), PCK@0.5 %.4f over %zu instances\n", ap.mean,
              rescore ? "rescored" : "bbox-only", pck_05, instances);
  return 0;
}

int cmd_infer(const RunConfig& rc) {
  const ModelConfig mc = model_config(rc);
  std::vector<SyntheticScene> scenes = load_scenes(rc);
  size_t instances = 0;
  for (const SyntheticScene& s : scenes) instances += s.instances.size();
  if (instances == 0) throw UndefinedInputError("empty dataset: nothing to infer on");

  PoseModel model(mc, rc.seed);
  if (!rc.oracle) model.load(ckpt_path(rc));
  EvalPair pair = run_detector(model, scenes, rc);

  fs::create_directories(rc.out);
  write_instances(rc.out + "/predictions.jsonl", pair.dets);
  write_report(rc, json{{"command", "infer"}, {"instances", instances}});
  std::printf("wrote %zu predictions to %s/predictions.jsonl\n", instances,
              rc.out.c_str());
  return 0;
}

int cmd_gradcheck(const RunConfig& rc) {
  GradSuiteResult res = run_gradcheck_suite(rc.seed);
  for (const GradCase& c : res.cases)
    std::printf("%-28s %10.3e over %5zu entries  %s\n", c.name.c_str(), c.max_rel_err,
                c.entries, c.pass ? "pass" : "FAIL");
  std::printf("gradcheck: %zu cases, worst %.3e -> %s\n", res.cases.size(), res.worst,
              res.all_pass ? "pass" : "FAIL");
  json cases = json::array();
  for (const GradCase& c : res.cases)
    cases.push_back({{"name", c.name},
                     {"max_rel_err", c.max_rel_err},
                     {"entries", c.entries},
                     {"pass", c.pass}});
  write_report(rc, json{{"command", "gradcheck"},
                        {"worst", res.worst},
                        {"all_pass", res.all_pass},
                        {"cases", cases}});
  return res.all_pass ? 0 : 1;
}

struct BenchCase {
  std::string name;
  std::vector<std::array<size_t, 2>> levels;  // (h, w)
  size_t heads = 8, points = 4, width = 64;
};

int cmd_bench(const RunConfig& rc) {
  const std::vector<BenchCase> cases = {
      {"single_1x1_s1", {{1, 1}}, 4, 1, 32},
      {"single_56x56_s2", {{56, 56}}, 4, 2, 32},
      {"pyr_64x48_s4", {{64, 48}, {32, 24}}, 8, 4, 64},
      {"pyr_96x72_s4", {{96, 72}, {48, 36}, {24, 18}}, 8, 4, 64},
      {"pyr_80x60_c128", {{80, 60}, {40, 30}}, 8, 4, 128},
  };
  const size_t queries = 512;

  fs::create_directories(rc.out);
  std::ofstream csv(rc.out + "/bench.csv");
  if (!csv) throw FormatError("cannot write " + rc.out + "/bench.csv");
  csv << "case,width,heads,points,levels,positions,emsda_flops,msda_flops,"
         "flop_ratio,analytic_ratio,emsda_us,msda_us,time_ratio,max_rel_diff\n";

  std::vector<std::string> labels;
  std::vector<double> ratios;
  json rows = json::array();
  Rng rng = Rng::stream(rc.seed, 0xBE7C);
  for (const BenchCase& bc : cases) {
    RefPyramid pyr;
    pyr.channels = bc.width;
    for (auto [h, w] : bc.levels) {
      RefLevel lvl;
      lvl.h = h;
      lvl.w = w;
      lvl.feat.resize(h * w * bc.width);
      for (double& v : lvl.feat) v = rng.uniform(-1, 1);
      pyr.levels.push_back(std::move(lvl));
    }
    EmsdaRefParams p;
    p.heads = bc.heads;
    p.levels = bc.levels.size();
    p.points = bc.points;
    p.width = bc.width;
    const size_t c = bc.width, mls = bc.heads * p.levels * bc.points;
    auto fill = [&](std::vector<double>& v, size_t n, double s) {
      v.resize(n);
      for (double& x : v) x = rng.uniform(-s, s);
    };
    fill(p.w_value, c * c, 1.0 / std::sqrt((double)c));
    fill(p.w_output, c * c, 1.0 / std::sqrt((double)c));
    fill(p.w_offset, c * mls * 2, 0.1);
    fill(p.b_offset, mls * 2, 2.0);
    fill(p.w_attn, c * mls, 0.5);
    fill(p.b_attn, mls, 0.5);

    std::vector<std::vector<double>> qs(queries, std::vector<double>(c));
    std::vector<std::array<double, 2>> refs(queries);
    for (size_t i = 0; i < queries; ++i) {
      for (double& x : qs[i]) x = rng.uniform(-1, 1);
      refs[i] = {rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
    }

    // Equivalence gate plus measured counts on one representative query.
    FlopCount fe, fm;
    double max_rel = 0;
    for (size_t i = 0; i < queries; ++i) {
      FlopCount* ce = i == 0 ? &fe : nullptr;
      FlopCount* cm = i == 0 ? &fm : nullptr;
      std::vector<double> a = emsda_ref(qs[i], refs[i], pyr, p, ce);
      std::vector<double> b = msda_oracle(qs[i], refs[i], pyr, p, cm);
      double diff = 0, scale = 1e-12;
      for (size_t j = 0; j < a.size(); ++j) {
        diff = std::max(diff, std::fabs(a[j] - b[j]));
        scale = std::max({scale, std::fabs(a[j]), std::fabs(b[j])});
      }
      max_rel = std::max(max_rel, diff / scale);
    }
    if (max_rel > 1e-10)
      throw OracleError("benchmark invalid: emsda and msda outputs diverge (" +
                        bc.name + ", max rel " + std::to_string(max_rel) + ")");
    const FlopCount ae = emsda_analytic_flops(p, pyr);
    const FlopCount am = msda_analytic_flops(p, pyr);
    if (fe.total() != ae.total() || fm.total() != am.total())
      throw OracleError("benchmark invalid: measured flops disagree with the "
                        "analytic count (" + bc.name + ")");

    auto time_us = [&](auto&& fn) {
      double sink = 0;
      const auto t0 = std::chrono::steady_clock::now();
      for (size_t i = 0; i < queries; ++i) sink += fn(i)[0];
      const auto t1 = std::chrono::steady_clock::now();
      // The sink defeats dead-code elimination across the timing loop.
      volatile double keep = sink;
      (void)keep;
      return std::chrono::duration<double, std::micro>(t1 - t0).count() / queries;
    };
    const double te =
        time_us([&](size_t i) { return emsda_ref(qs[i], refs[i], pyr, p, nullptr); });
    const double tm =
        time_us([&](size_t i) { return msda_oracle(qs[i], refs[i], pyr, p, nullptr); });

    const double flop_ratio = (double)fm.total() / (double)fe.total();
    const double analytic_ratio = (double)am.total() / (double)ae.total();
    csv << bc.name << ',' << bc.width << ',' << bc.heads << ',' << bc.points << ','
        << bc.levels.size() << ',' << pyr.positions() << ',' << fe.total() << ','
        << fm.total() << ',' << flop_ratio << ',' << analytic_ratio << ',' << te << ','
        << tm << ',' << tm / te << ',' << max_rel << '\n';
    rows.push_back({{"case", bc.name},
                    {"emsda_flops", fe.total()},
                    {"msda_flops", fm.total()},
                    {"flop_ratio", flop_ratio},
                    {"emsda_us", te},
                    {"msda_us", tm},
                    {"max_rel_diff", max_rel}});
    labels.push_back(bc.name);
    ratios.push_back(flop_ratio);
    std::printf("%-18s flops %12llu vs %12llu  ratio %7.2f  wall %8.1f vs %8.1f us\n",
                bc.name.c_str(), (unsigned long long)fe.total(),
                (unsigned long long)fm.total(), flop_ratio, te, tm);
  }
  write_bar_plot(rc.out + "/bench.svg", "msda/emsda flop ratio", "ratio", labels,
                 ratios);
  write_report(rc, json{{"command", "bench"}, {"cases", rows}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale regression-based keypoint estimation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config")->check(CLI::ExistingFile);
  app.allow_config_extras(CLI::config_extras_mode::error);

  RunConfig rc;
  app.add_option("--input_h", rc.input_h, "model input height");
  app.add_option("--input_w", rc.input_w, "model input width");
  app.add_option("--channels", rc.channels, "backbone channels per level");
  app.add_option("--strides", rc.strides, "cumulative stride per level");
  app.add_option("--num_keypoints", rc.num_keypoints, "keypoints K (2..8)");
  app.add_option("--width", rc.width, "decoder embedding width C");
  app.add_option("--dec_layers", rc.dec_layers, "decoder layers N_d");
  app.add_option("--heads", rc.heads, "attention heads M");
  app.add_option("--points", rc.points, "sampling points per level S");
  app.add_option("--ffn_hidden", rc.ffn_hidden, "decoder feed-forward width");
  app.add_option("--aux_supervision", rc.aux_supervision,
                 "supervise every decoder layer");
  app.add_option("--noisy_queries", rc.noisy_queries,
                 "train-time noisy reference group");
  app.add_option("--mode", rc.mode, "likelihood: laplace | flow | residual");
  app.add_option("--lambda", rc.lambda, "decoder loss weight");
  app.add_option("--score_a,--score-a", rc.score_a, "confidence radius for Eq.-8 scores");
  app.add_option("--flow_layers", rc.flow_layers, "coupling layers");
  app.add_option("--flow_hidden", rc.flow_hidden, "coupling hidden width");
  app.add_option("--lr", rc.lr, "base learning rate");
  app.add_option("--beta1", rc.beta1, "first moment decay");
  app.add_option("--beta2", rc.beta2, "second moment decay");
  app.add_option("--weight_decay", rc.weight_decay, "decoupled weight decay");
  app.add_option("--steps", rc.steps, "optimizer steps");
  app.add_option("--batch_size", rc.batch_size, "samples per step");
  app.add_option("--milestones", rc.milestones, "lr decay points, fractions of steps");
  app.add_option("--decay", rc.decay, "lr decay factor at milestones");
  app.add_option("--eval_every_epochs", rc.eval_every_epochs,
                 "epochs between validation passes (0 = off)");
  app.add_option("--scenes", rc.scenes, "scene count for synth/train/eval");
  app.add_option("--figures", rc.figures, "figures per scene");
  app.add_option("--synth_h", rc.synth_h, "generated image height");
  app.add_option("--synth_w", rc.synth_w, "generated image width");
  app.add_option("--dataset", rc.dataset, "dataset directory (default: generate)");
  app.add_option("--seed", rc.seed, "master seed");
  app.add_option("--out", rc.out, "output directory");
  app.add_option("--ckpt", rc.ckpt, "checkpoint path (default <out>/model.ckpt)");

  CLI::App* synth = app.add_subcommand("synth", "generate a dataset directory");
  CLI::App* train = app.add_subcommand("train", "optimize a model on a dataset");
  CLI::App* eval = app.add_subcommand("eval", "report AP and PCK for a checkpoint");
  CLI::App* infer = app.add_subcommand("infer", "write raw predictions for a dataset");
  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference gradient suite");
  CLI::App* bench = app.add_subcommand("bench", "emsda vs msda flops and wall time");
  eval->add_flag("--no-rescore", rc.no_rescore, "rank by bbox score alone");
  eval->add_flag("--oracle", rc.oracle, "feed ground truth through the eval path");
  eval->add_option("--corrupt", rc.corrupt, "proposal corruption amplitude");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(rc);
    if (train->parsed()) return cmd_train(rc);
    if (eval->parsed()) return cmd_eval(rc);
    if (infer->parsed()) return cmd_infer(rc);
    if (gradcheck->parsed()) return cmd_gradcheck(rc);
    if (bench->parsed()) return cmd_bench(rc);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
