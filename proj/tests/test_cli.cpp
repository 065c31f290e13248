// Copyright 2026 The PITL Attack Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pitl/hash.hpp"
#include "pitl/netpbm.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace pitl;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run pitl_cli(const std::string& args) {
  const std::string cmd = std::string(PITL_BIN) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  for (std::size_t k; (k = std::fread(buf, 1, sizeof buf, p)) > 0;) r.out.append(buf, k);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(read_file_bytes(p)); }

void write_json(const fs::path& p, const nlohmann::json& j) { std::ofstream(p) << j.dump(2); }

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

/// make-scene into dir/scene and return the config path.
fs::path scene_bundle(const fs::path& dir, int size = 32, int seed = 1) {
  const auto s = dir / "scene";
  const auto r = pitl_cli("make-scene --preset locker --size " + std::to_string(size) + " --seed " +
                          std::to_string(seed) + " --out " + q(s));
  EXPECT_EQ(r.code, 0);
  return s / "config.json";
}

}  // namespace

TEST(Cli, MakeSceneIsDeterministic) {
  pitl::testing::TempDir dir("cli_scene");
  ASSERT_EQ(pitl_cli("make-scene --preset stove --size 24 --seed 5 --out " + q(dir.path() / "a")).code, 0);
  ASSERT_EQ(pitl_cli("make-scene --preset stove --size 24 --seed 5 --out " + q(dir.path() / "b")).code, 0);
  for (const char* f : {"reflectance.ppm", "depth_orig.pfm", "depth_back.pfm", "region.pgm", "victim.json"}) {
    EXPECT_EQ(read_file_bytes(dir.path() / "a" / f), read_file_bytes(dir.path() / "b" / f)) << f;
  }
  EXPECT_EQ(read_json(dir.path() / "a" / "config.json"), read_json(dir.path() / "b" / "config.json"));
}

TEST(Cli, MakeSceneRejectsBadArguments) {
  pitl::testing::TempDir dir("cli_scene_bad");
  EXPECT_EQ(pitl_cli("make-scene --preset locker --size 0 --out " + q(dir.path() / "x")).code, 1);
  EXPECT_EQ(pitl_cli("make-scene --preset piano --size 32 --out " + q(dir.path() / "y")).code, 1);
  EXPECT_EQ(pitl_cli("make-scene --size 32").code, 1);
  EXPECT_EQ(pitl_cli("frobnicate").code, 1);
}

TEST(Cli, AttackWritesSelfDescribingRunDirectory) {
  pitl::testing::TempDir dir("cli_attack");
  const auto cfg_path = scene_bundle(dir.path());
  auto cfg = read_json(cfg_path);
  cfg["attack"]["g_max"] = 15;
  write_json(cfg_path, cfg);
  const auto out = dir.path() / "run";
  ASSERT_EQ(pitl_cli("attack --config " + q(cfg_path) + " --out " + q(out)).code, 0);

  const auto trace = lines(read_file_bytes(out / "trace.csv"));
  ASSERT_EQ(trace.size(), 16u);
  EXPECT_EQ(trace[0], "generation,eval_count,f_best_gen,f_best_so_far,e_best_gen,wall_ms");
  EXPECT_EQ(trace[1].rfind("1,15,", 0), 0u) << trace[1];

  const auto m = read_json(out / "manifest.json");
  EXPECT_EQ(m["status"], "completed");
  EXPECT_EQ(m["optimization_victim_calls"], 15 * 15);
  EXPECT_EQ(m["lambda"], 15);
  EXPECT_EQ(m["dimension"], 48);
  for (const char* f : {"best_pattern_r.pfm", "best_pattern_g.pfm", "best_pattern_b.pfm", "best_pattern_preview.ppm",
                        "capture_adversarial.ppm", "capture_benign.ppm", "depth_benign.pfm", "checkpoint.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }

  // Re-scoring the saved maps reproduces the reported result.
  const auto ev = pitl_cli("eval --est " + q(out / "depth_adversarial.pfm") + " --orig " + q(out / "depth_orig.pfm") +
                           " --back " + q(out / "depth_back.pfm") + " --tgt " + q(out / "depth_target.pfm") +
                           " --region " + q(out / "region.pgm") + " --eval-region " + q(out / "eval_region.pgm"));
  ASSERT_EQ(ev.code, 0);
  const auto j = nlohmann::json::parse(ev.out);
  EXPECT_NEAR(j["f"].get<double>(), m["result"]["f"].get<double>(), 1e-6);
  EXPECT_NEAR(j["e"].get<double>(), m["result"]["e"].get<double>(), 1e-6);
  EXPECT_EQ(j["region_pixels"], m["region_pixels"]);
}

TEST(Cli, ConstantVictimRunsFullBudget) {
  pitl::testing::TempDir dir("cli_const");
  const auto cfg_path = scene_bundle(dir.path());
  auto cfg = read_json(cfg_path);
  cfg["attack"]["g_max"] = 9;
  cfg["victim"] = {{"kind", "constant"}, {"value", 4.0}};
  write_json(cfg_path, cfg);
  ASSERT_EQ(pitl_cli("attack --config " + q(cfg_path) + " --out " + q(dir.path() / "run")).code, 0);
  EXPECT_EQ(lines(read_file_bytes(dir.path() / "run" / "trace.csv")).size(), 10u);
}

TEST(Cli, StopAndResumeMatchesUninterruptedRun) {
  pitl::testing::TempDir dir("cli_resume");
  const auto cfg_path = scene_bundle(dir.path());
  auto cfg = read_json(cfg_path);
  cfg["attack"]["g_max"] = 30;
  write_json(cfg_path, cfg);
  ASSERT_EQ(pitl_cli("attack --config " + q(cfg_path) + " --out " + q(dir.path() / "full")).code, 0);
  ASSERT_EQ(pitl_cli("attack --config " + q(cfg_path) + " --out " + q(dir.path() / "part") + " --stop-after 12").code, 0);
  EXPECT_EQ(read_json(dir.path() / "part" / "manifest.json")["status"], "stopped");
  ASSERT_EQ(pitl_cli("attack --config " + q(cfg_path) + " --out " + q(dir.path() / "part") + " --resume " +
                     q(dir.path() / "part" / "checkpoint.json"))
                .code,
            0);
  EXPECT_EQ(read_file_bytes(dir.path() / "full" / "depth_adversarial.pfm"),
            read_file_bytes(dir.path() / "part" / "depth_adversarial.pfm"));
  EXPECT_EQ(read_json(dir.path() / "full" / "manifest.json")["result"],
            read_json(dir.path() / "part" / "manifest.json")["result"]);
}

TEST(Cli, ResumeWithChangedConfigIsRejected) {
  pitl::testing::TempDir dir("cli_resume_bad");
  const auto cfg_path = scene_bundle(dir.path());
  auto cfg = read_json(cfg_path);
  cfg["attack"]["g_max"] = 10;
  write_json(cfg_path, cfg);
  ASSERT_EQ(pitl_cli("attack --config " + q(cfg_path) + " --out " + q(dir.path() / "a") + " --stop-after 3").code, 0);
  cfg["attack"]["lambda"] = 20;
  write_json(cfg_path, cfg);
  EXPECT_EQ(pitl_cli("attack --config " + q(cfg_path) + " --out " + q(dir.path() / "a") + " --resume " +
                     q(dir.path() / "a" / "checkpoint.json"))
                .code,
            1);
}

TEST(Cli, MissingInputFailsBeforeCreatingOutput) {
  pitl::testing::TempDir dir("cli_missing");
  const auto cfg_path = scene_bundle(dir.path());
  fs::remove(dir.path() / "scene" / "depth_back.pfm");
  const auto out = dir.path() / "never";
  EXPECT_EQ(pitl_cli("attack --config " + q(cfg_path) + " --out " + q(out)).code, 1);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_EQ(pitl_cli("attack --config " + q(dir.path() / "nope.json") + " --out " + q(out)).code, 1);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, UnknownConfigKeyIsAnError) {
  pitl::testing::TempDir dir("cli_keys");
  const auto cfg_path = scene_bundle(dir.path());
  auto cfg = read_json(cfg_path);
  cfg["attack"]["sigma_zero"] = 1.0;
  write_json(cfg_path, cfg);
  EXPECT_EQ(pitl_cli("attack --config " + q(cfg_path) + " --out " + q(dir.path() / "r")).code, 1);
}

TEST(Cli, ExternalVictimDeathExitsTwoWithCheckpoint) {
  pitl::testing::TempDir dir("cli_ext");
  const auto cfg_path = scene_bundle(dir.path());
  auto cfg = read_json(cfg_path);
  cfg["attack"]["g_max"] = 10;
  cfg["victim"] = {{"kind", "external"},
                   {"command", {FAKE_VICTIM_PATH, "--die-after", "60"}},
                   {"timeout_s", 10}};
  write_json(cfg_path, cfg);
  const auto out = dir.path() / "run";
  EXPECT_EQ(pitl_cli("attack --config " + q(cfg_path) + " --out " + q(out)).code, 2);
  const auto m = read_json(out / "manifest.json");
  EXPECT_EQ(m["status"], "victim_failure");
  EXPECT_EQ(m["generations_completed"], 4);  // 60 calls = 4 full generations of 15
  EXPECT_EQ(lines(read_file_bytes(out / "trace.csv")).size(), 5u);
  const auto ck = read_json(out / "checkpoint.json");
  EXPECT_EQ(ck["state"]["generation"], 5);
}

TEST(Cli, ExternalVictimWrongVersionExitsTwo) {
  pitl::testing::TempDir dir("cli_ext_v2");
  const auto cfg_path = scene_bundle(dir.path());
  auto cfg = read_json(cfg_path);
  cfg["victim"] = {{"kind", "external"}, {"command", {FAKE_VICTIM_PATH, "--version", "2"}}};
  write_json(cfg_path, cfg);
  EXPECT_EQ(pitl_cli("attack --config " + q(cfg_path) + " --out " + q(dir.path() / "run")).code, 2);
}

TEST(Cli, BenchSphereReachesTarget) {
  const auto r = pitl_cli("bench --suite sphere --n 40 --seed 1");
  ASSERT_EQ(r.code, 0);
  const auto rows = lines(r.out);
  ASSERT_GT(rows.size(), 2u);
  EXPECT_EQ(rows[0], "generation,evaluations,f_best_gen,f_best_so_far");
  std::istringstream last(rows.back());
  std::string field;
  for (int i = 0; i < 4; ++i) std::getline(last, field, ',');
  EXPECT_LT(std::stod(field), 1e-10);
}

TEST(Cli, BenchBestSoFarColumnIsMonotone) {
  const auto r = pitl_cli("bench --suite rosenbrock --n 10 --seed 2 --budget 300");
  ASSERT_TRUE(r.code == 0 || r.code == 3);
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 1u + (r.code == 3 ? 300u : rows.size() - 1));
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::istringstream in(rows[i]);
    std::string field;
    for (int k = 0; k < 4; ++k) std::getline(in, field, ',');
    const double v = std::stod(field);
    ASSERT_LE(v, prev);
    prev = v;
  }
}

TEST(Cli, BenchMissedTargetAndBadArguments) {
  EXPECT_EQ(pitl_cli("bench --suite ellipsoid --n 20 --budget 5").code, 3);
  EXPECT_EQ(pitl_cli("bench --suite sphere --n 1").code, 1);
  EXPECT_EQ(pitl_cli("bench --suite himmelblau --n 4").code, 1);
}

TEST(Cli, EvalEndpointsAndShapeErrors) {
  pitl::testing::TempDir dir("cli_eval");
  scene_bundle(dir.path());
  const auto s = dir.path() / "scene";
  auto eval = [&](const fs::path& est) {
    return pitl_cli("eval --est " + q(est) + " --orig " + q(s / "depth_orig.pfm") + " --back " +
                    q(s / "depth_back.pfm") + " --region " + q(s / "region.pgm"));
  };
  const auto orig = eval(s / "depth_orig.pfm");
  ASSERT_EQ(orig.code, 0);
  EXPECT_EQ(nlohmann::json::parse(orig.out)["e"].get<double>(), 1.0);
  const auto back = eval(s / "depth_back.pfm");
  ASSERT_EQ(back.code, 0);
  EXPECT_EQ(nlohmann::json::parse(back.out)["e"].get<double>(), 0.0);
  EXPECT_EQ(nlohmann::json::parse(back.out)["f"].get<double>(), 0.0);

  netpbm::write_pfm(dir.path() / "small.pfm", make_depth(8, 8, 3.0f));
  EXPECT_EQ(eval(dir.path() / "small.pfm").code, 1);
}

TEST(Cli, ConfigHashTracksReferencedFiles) {
  pitl::testing::TempDir dir("cli_hash");
  const auto cfg_path = scene_bundle(dir.path());
  auto cfg = read_json(cfg_path);
  cfg["attack"]["g_max"] = 2;
  write_json(cfg_path, cfg);
  ASSERT_EQ(pitl_cli("attack --config " + q(cfg_path) + " --out " + q(dir.path() / "a")).code, 0);
  const auto h1 = read_json(dir.path() / "a" / "manifest.json")["config_hash"];

  // Flip one byte of a referenced input; the run must be attributed differently.
  const auto refl = dir.path() / "scene" / "reflectance.ppm";
  auto bytes = read_file_bytes(refl);
  bytes.back() = static_cast<char>(bytes.back() ^ 1);
  std::ofstream(refl, std::ios::binary) << bytes;
  ASSERT_EQ(pitl_cli("attack --config " + q(cfg_path) + " --out " + q(dir.path() / "b")).code, 0);
  const auto m2 = read_json(dir.path() / "b" / "manifest.json");
  EXPECT_NE(m2["config_hash"], h1);
  EXPECT_EQ(m2["file_hashes"]["reflectance.ppm"], git_blob_hash_file(refl));
}
