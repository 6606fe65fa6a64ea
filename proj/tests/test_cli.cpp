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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = DESKPOSE_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  return std::system(cmd.c_str());
}

json read_report(const fs::path& out) {
  std::ifstream f(out / "report.json");
  REQUIRE(f.good());
  return json::parse(f);
}

size_t line_count(const fs::path& p) {
  std::ifstream f(p);
  size_t n = 0;
  for (std::string line; std::getline(f, line);)
    if (!line.empty()) ++n;
  return n;
}

struct TempTree {
  fs::path root;
  TempTree() : root(fs::temp_directory_path() / "deskpose_cli_test") {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~TempTree() { fs::remove_all(root); }
  std::string operator/(const std::string& leaf) const { return (root / leaf).string(); }
};

}  // namespace

TEST_CASE("cli end to end: synth, oracle eval, flag handling") {
  TempTree t;
  const std::string data = t / "data";
  const std::string small = " --synth_h 48 --synth_w 48";

  SUBCASE("no subcommand is an error") { CHECK(run("") != 0); }

  REQUIRE(run("synth --out " + data + " --scenes 3 --seed 5" + small) == 0);
  CHECK(fs::exists(fs::path(data) / "manifest.json"));
  json synth_rep = read_report(data);
  CHECK(synth_rep["command"] == "synth");
  CHECK(synth_rep["config"]["seed"] == 5);

  SUBCASE("oracle eval on a perfect detector scores AP 1") {
    const std::string out = t / "eval";
    REQUIRE(run("eval --oracle --dataset " + data + " --out " + out) == 0);
    json rep = read_report(out);
    CHECK(rep["command"] == "eval");
    CHECK(rep["instances"] == 3);
    CHECK(rep["rescore"] == true);
    CHECK(rep["ap"].get<double>() == doctest::Approx(1.0));
    CHECK(rep["pck_0.5"].get<double>() == doctest::Approx(1.0));
    CHECK(line_count(fs::path(out) / "predictions.jsonl") == 3);
    CHECK(fs::exists(fs::path(out) / "ap_curve.svg"));
  }

  SUBCASE("--no-rescore is recorded in the report") {
    const std::string out = t / "eval_nr";
    REQUIRE(run("eval --oracle --no-rescore --dataset " + data + " --out " + out) == 0);
    CHECK(read_report(out)["rescore"] == false);
  }

  SUBCASE("keypoint-count mismatch against the dataset fails") {
    CHECK(run("eval --oracle --num_keypoints 4 --dataset " + data + " --out " +
              (t / "bad")) != 0);
  }

  SUBCASE("eval without a checkpoint fails") {
    CHECK(run("eval --dataset " + data + " --out " + (t / "nockpt")) != 0);
  }

  SUBCASE("empty dataset is rejected") {
    CHECK(run("synth --out " + (t / "none") + " --scenes 0 --seed 5" + small) != 0);
    const std::string empty = t / "empty";
    fs::create_directories(empty);
    std::ofstream(fs::path(empty) / "manifest.json")
        << R"({"format_version":1,"count":0,"num_keypoints":8,"image_h":48,)"
        << R"("image_w":48,"figures_per_image":1,"seed":5})" << "\n";
    std::ofstream(fs::path(empty) / "annotations.jsonl");
    CHECK(run("eval --oracle --dataset " + empty + " --out " + (t / "e2")) != 0);
  }

  SUBCASE("config file values load and flags override them") {
    const std::string cfg = t / "run.toml";
    std::ofstream(cfg) << "seed = 7\nscenes = 2\nsynth_h = 40\nsynth_w = 40\n";
    const std::string out = t / "cfg_out";
    REQUIRE(run("synth --config " + cfg + " --seed 11 --out " + out) == 0);
    json rep = read_report(out);
    CHECK(rep["config"]["seed"] == 11);    // flag wins
    CHECK(rep["config"]["scenes"] == 2);   // file value survives
    CHECK(rep["config"]["synth_h"] == 40);
  }

  SUBCASE("unknown config keys are an error") {
    const std::string cfg = t / "bogus.toml";
    std::ofstream(cfg) << "seed = 7\nbogus_knob = 3\n";
    CHECK(run("synth --config " + cfg + " --out " + (t / "b2")) != 0);
  }
}
