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

// Subcommands of the `pitl` tool. Each returns the process exit code:
// 0 success, 1 configuration or input error, 2 victim failure (attack),
// 3 benchmark target not reached.

#ifndef PITL_COMMANDS_HPP_
#define PITL_COMMANDS_HPP_

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "pitl/attack.hpp"
#include "pitl/errors.hpp"
#include "pitl/hash.hpp"
#include "pitl/metrics.hpp"
#include "pitl/netpbm.hpp"
#include "pitl/presets.hpp"
#include "pitl/run_config.hpp"
#include "pitl/scene.hpp"
#include "pitl/sep_cmaes.hpp"
#include "pitl/victim.hpp"

namespace pitl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitVictim = 2;
inline constexpr int kExitTargetMissed = 3;

/// Routes library logging to stderr; PITL_LOG=debug|info selects verbosity
/// (warnings and errors only when unset).
inline void setup_logging() {
  auto logger = spdlog::get("pitl");
  if (!logger) logger = spdlog::stderr_logger_mt("pitl");
  logger->set_pattern("[%l] %v");
  const char* env = std::getenv("PITL_LOG");
  const std::string level = env ? env : "";
  if (level == "debug") {
    logger->set_level(spdlog::level::debug);
  } else if (level == "info") {
    logger->set_level(spdlog::level::info);
  } else {
    logger->set_level(spdlog::level::warn);
  }
  spdlog::set_default_logger(logger);
}

namespace detail {

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Write-then-rename so a crash never leaves a half-written file behind.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out << text;
    if (!out) throw Error("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRecord>& trace) {
  std::string s = "generation,eval_count,f_best_gen,f_best_so_far,e_best_gen,wall_ms\n";
  for (const auto& t : trace) {
    s += std::to_string(t.generation) + "," + std::to_string(t.eval_count) + "," + fmt_double(t.f_best_gen) + "," +
         fmt_double(t.f_best_so_far) + "," + fmt_double(t.e_best_gen) + "," + fmt_double(t.wall_ms) + "\n";
  }
  write_text_atomic(path, s);
}

inline Image<double> mask_image(const RegionMask& r) {
  Image<double> img(r.width(), r.height(), 1);
  for (std::size_t p = 0; p < img.pixel_count(); ++p) img[p] = r.contains(p) ? 1.0 : 0.0;
  return img;
}

inline void write_pattern_outputs(const std::filesystem::path& dir, const SceneModel& scene,
                                  const PerturbationPattern& pattern) {
  const char* names[3] = {"best_pattern_r.pfm", "best_pattern_g.pfm", "best_pattern_b.pfm"};
  for (int ch = 0; ch < 3; ++ch) {
    Image<float> plane(pattern.cols, pattern.rows, 1);
    for (int r = 0; r < pattern.rows; ++r) {
      for (int c = 0; c < pattern.cols; ++c) plane.at(c, r) = static_cast<float>(pattern.cell(r, c, ch));
    }
    netpbm::write_pfm(dir / names[ch], plane);
  }
  netpbm::write_ppm(dir / "best_pattern_preview.ppm", pattern_to_light(scene.region, pattern));
}

inline void write_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  write_text_atomic(path, checkpoint_to_json(c).dump());
}

}  // namespace detail

struct AttackOptions {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::filesystem::path> resume;
  /// Stop cleanly after this generation and leave a checkpoint.
  std::optional<std::uint64_t> stop_after;
};

inline int cmd_attack(const AttackOptions& opt) {
  auto log = spdlog::default_logger();
  RunConfig rc;
  std::optional<Checkpoint> resume;
  try {
    rc = load_run_config(opt.config);
    if (opt.resume) {
      resume = checkpoint_from_json(nlohmann::json::parse(read_file_bytes(*opt.resume)));
      if (resume->progress.run_hash != run_hash(rc.attack, rc.scene)) {
        throw ConfigError("checkpoint " + opt.resume->string() + " was produced by a different configuration");
      }
    }
  } catch (const VictimFailure& e) {
    log->error("{}", e.what());
    return kExitVictim;
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return kExitConfig;
  }

  std::error_code ec;
  std::filesystem::create_directories(opt.out, ec);
  if (ec) {
    log->error("cannot create output directory {}: {}", opt.out.string(), ec.message());
    return kExitConfig;
  }

  const auto& scene = rc.scene;
  const DepthMap& target = rc.attack.target ? *rc.attack.target : scene.depth_back;
  const std::size_t n = scene.region.dimension();
  const std::size_t lambda = attack_lambda(rc.attack, n);
  const std::string hash = run_hash(rc.attack, scene);
  const auto ckpt_path = opt.out / "checkpoint.json";

  nlohmann::json manifest{{"tool", "pitl"},
                          {"config", rc.document},
                          {"config_path", std::filesystem::absolute(opt.config).string()},
                          {"config_hash", rc.config_hash},
                          {"run_hash", hash},
                          {"file_hashes", rc.file_hashes},
                          {"seed", rc.attack.seed},
                          {"dimension", n},
                          {"lambda", lambda},
                          {"g_max", rc.attack.g_max},
                          {"cell_grid", {scene.region.rows(), scene.region.cols()}},
                          {"region_pixels", scene.region.member_count()},
                          {"resumed_from", opt.resume ? nlohmann::json(opt.resume->string()) : nlohmann::json(nullptr)}};

  // Scene artifacts so the run directory can be re-scored on its own.
  try {
    netpbm::write_pfm(opt.out / "depth_orig.pfm", scene.depth_orig);
    netpbm::write_pfm(opt.out / "depth_back.pfm", scene.depth_back);
    netpbm::write_pfm(opt.out / "depth_target.pfm", target);
    netpbm::write_pgm(opt.out / "region.pgm", detail::mask_image(scene.region));
    netpbm::write_pgm(opt.out / "eval_region.pgm", detail::mask_image(scene.presence_region()));
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return kExitConfig;
  }

  std::unique_ptr<Victim> victim;
  try {
    victim = make_victim(rc.attack.victim, scene);
  } catch (const VictimFailure& e) {
    log->error("victim unavailable: {}", e.what());
    manifest["status"] = "victim_failure";
    manifest["error"] = e.what();
    detail::write_text_atomic(opt.out / "manifest.json", manifest.dump(2));
    return kExitVictim;
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return kExitConfig;
  }
  log->info("attacking with victim {} (n={}, lambda={}, g_max={})", victim->name(), n, lambda, rc.attack.g_max);

  RunControl control;
  control.resume = resume;
  control.stop_after = opt.stop_after;
  control.checkpoint_every = rc.output.checkpoint_every;
  control.on_checkpoint = [&](const Checkpoint& c) { detail::write_checkpoint(ckpt_path, c); };
  control.on_generation = [&](const TraceRecord& t) {
    log->debug("g={} evals={} f_gen={} f_best={} e_gen={}", t.generation, t.eval_count, t.f_best_gen, t.f_best_so_far,
               t.e_best_gen);
  };

  AttackResult result;
  try {
    result = run_attack(rc.attack, scene, *victim, control);
  } catch (const AttackAborted& e) {
    log->error("{}", e.what());
    detail::write_trace_csv(opt.out / "trace.csv", e.partial().trace);
    detail::write_checkpoint(ckpt_path, e.checkpoint());
    manifest["status"] = "victim_failure";
    manifest["error"] = e.what();
    manifest["checkpoint"] = ckpt_path.filename().string();
    manifest["generations_completed"] = e.partial().trace.size();
    detail::write_text_atomic(opt.out / "manifest.json", manifest.dump(2));
    return kExitVictim;
  } catch (const VictimFailure& e) {
    log->error("{}", e.what());
    return kExitVictim;
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return kExitConfig;
  }

  detail::write_trace_csv(opt.out / "trace.csv", result.trace);
  detail::write_checkpoint(ckpt_path, Checkpoint{result});
  manifest["checkpoint"] = ckpt_path.filename().string();
  manifest["generations_completed"] = result.trace.size();
  manifest["optimization_victim_calls"] = result.evaluations;
  if (!result.completed) {
    manifest["status"] = "stopped";
    detail::write_text_atomic(opt.out / "manifest.json", manifest.dump(2));
    log->info("stopped after generation {}; resume with --resume {}", result.trace.back().generation,
              ckpt_path.string());
    return kExitOk;
  }

  std::size_t reporting_calls = 0;
  try {
    detail::write_pattern_outputs(opt.out, scene, result.best_pattern);
    netpbm::write_ppm(opt.out / "capture_adversarial.ppm", result.best_capture);
    netpbm::write_pfm(opt.out / "depth_adversarial.pfm", result.best_depth);
    const RgbImage benign = benign_capture(scene);
    netpbm::write_ppm(opt.out / "capture_benign.ppm", benign);
    const DepthMap benign_depth = victim->estimate(benign);
    ++reporting_calls;
    netpbm::write_pfm(opt.out / "depth_benign.pfm", benign_depth);
    manifest["benign"] = {{"f", objective(benign_depth, target, scene.region)},
                          {"e", presence_rate(benign_depth, scene.depth_orig, scene.depth_back, scene.presence_region())}};
    if (rc.output.reevaluate > 0) {
      const auto re = reevaluate(scene, *victim, target, result.best_pattern, rc.output.reevaluate, rc.attack.seed);
      reporting_calls += rc.output.reevaluate;
      manifest["reevaluation"] = {{"repeats", rc.output.reevaluate}, {"mean_f", re.mean_f}, {"mean_e", re.mean_e}};
    }
  } catch (const VictimFailure& e) {
    log->error("victim failed while writing reports: {}", e.what());
    manifest["status"] = "victim_failure";
    manifest["error"] = e.what();
    detail::write_text_atomic(opt.out / "manifest.json", manifest.dump(2));
    return kExitVictim;
  }

  manifest["status"] = "completed";
  manifest["reporting_victim_calls"] = reporting_calls;
  manifest["result"] = {{"f", result.best_objective},
                        {"e", result.best_presence},
                        {"generation", result.best_generation},
                        {"index", result.best_index},
                        {"pattern", result.best_pattern.values}};
  manifest["artifacts"] = {{"trace", "trace.csv"},
                           {"depth_adversarial", "depth_adversarial.pfm"},
                           {"depth_benign", "depth_benign.pfm"},
                           {"depth_orig", "depth_orig.pfm"},
                           {"depth_back", "depth_back.pfm"},
                           {"depth_target", "depth_target.pfm"},
                           {"region", "region.pgm"},
                           {"eval_region", "eval_region.pgm"}};
  detail::write_text_atomic(opt.out / "manifest.json", manifest.dump(2));
  log->info("done: f*={} e*={}", result.best_objective, result.best_presence);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct BenchSuite {
  std::string name;
  double target;
  std::function<double(std::span<const double>)> f;
};

inline double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

/// sum_i 10^(6 (i-1)/(n-1)) x_i^2, condition number 1e6.
inline double ellipsoid(std::span<const double> x) {
  const std::size_t n = x.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = n > 1 ? 6.0 * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    s += std::pow(10.0, e) * x[i] * x[i];
  }
  return s;
}

inline double rosenbrock(std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    const double b = 1.0 - x[i];
    s += 100.0 * a * a + b * b;
  }
  return s;
}

inline std::optional<BenchSuite> bench_suite(const std::string& name) {
  if (name == "sphere") return BenchSuite{name, 1e-10, sphere};
  if (name == "ellipsoid") return BenchSuite{name, 1e-8, ellipsoid};
  if (name == "rosenbrock") return BenchSuite{name, 1e-8, rosenbrock};
  return std::nullopt;
}

struct BenchOptions {
  std::string suite;
  long long n = 0;
  std::uint64_t seed = 1;
  long long budget = 0;  // generations
};

/// Convergence table on stdout as CSV; m0 = 3*1, sigma0 = 1, default lambda.
inline int cmd_bench(const BenchOptions& opt, std::ostream& out) {
  auto log = spdlog::default_logger();
  const auto suite = bench_suite(opt.suite);
  if (!suite) {
    log->error("unknown suite '{}' (expected sphere, ellipsoid or rosenbrock)", opt.suite);
    return kExitConfig;
  }
  if (opt.n < 2) {
    log->error("n must be at least 2");
    return kExitConfig;
  }
  if (opt.budget < 1) {
    log->error("budget must be at least 1 generation");
    return kExitConfig;
  }
  const std::vector<double> m0(static_cast<std::size_t>(opt.n), 3.0);
  const auto r = cma::minimize(suite->f, m0, 1.0, opt.seed, static_cast<std::size_t>(opt.budget), suite->target);
  out << "generation,evaluations,f_best_gen,f_best_so_far\n";
  for (const auto& t : r.trace) {
    out << t.generation << ',' << t.evaluations << ',' << detail::fmt_double(t.best_in_generation) << ','
        << detail::fmt_double(t.best_so_far) << '\n';
  }
  log->info("{} n={}: best f = {} after {} generations (target {})", suite->name, opt.n, r.best_f, r.trace.size(),
            suite->target);
  return r.reached_target ? kExitOk : kExitTargetMissed;
}

// ---------------------------------------------------------------------------

struct EvalOptions {
  std::filesystem::path est, orig, back;
  std::optional<std::filesystem::path> tgt;
  std::filesystem::path region;
  std::optional<std::filesystem::path> eval_region;
};

/// Prints {"f": ..., "e": ..., ...} for saved depth maps.
inline int cmd_eval(const EvalOptions& opt, std::ostream& out) {
  auto log = spdlog::default_logger();
  try {
    const DepthMap est = netpbm::read_pfm(opt.est);
    const DepthMap orig = netpbm::read_pfm(opt.orig);
    const DepthMap back = netpbm::read_pfm(opt.back);
    const DepthMap tgt = opt.tgt ? netpbm::read_pfm(*opt.tgt) : back;
    for (const auto* d : {&est, &orig, &back, &tgt}) {
      if (d->channels() != 1) throw ShapeError("depth maps must be single-channel PFM");
    }
    const auto r_img = netpbm::read_pgm(opt.region);
    if (r_img.width() != est.width() || r_img.height() != est.height()) throw ShapeError("region size mismatch");
    const RegionMask region = RegionMask::per_pixel(r_img.width(), r_img.height(), RegionMask::members_from(r_img));
    RegionMask e_region = region;
    if (opt.eval_region) {
      const auto e_img = netpbm::read_pgm(*opt.eval_region);
      if (e_img.width() != est.width() || e_img.height() != est.height()) {
        throw ShapeError("evaluation region size mismatch");
      }
      e_region = RegionMask::per_pixel(e_img.width(), e_img.height(), RegionMask::members_from(e_img));
    }
    const double f = objective(est, tgt, region);
    const double e = presence_rate(est, orig, back, e_region);
    out << nlohmann::json{{"f", f}, {"e", e}, {"region_pixels", region.member_count()}}.dump() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return kExitConfig;
  }
}

// ---------------------------------------------------------------------------

struct MakeSceneOptions {
  std::string preset;
  long long size = 0;
  std::uint64_t seed = 1;
  std::filesystem::path out;
};

/// Writes a preset scene bundle plus a ready-to-run config.json.
inline int cmd_make_scene(const MakeSceneOptions& opt) {
  auto log = spdlog::default_logger();
  presets::SyntheticScene s;
  try {
    if (opt.size < presets::kMinSize || opt.size > 4096) {
      throw InvalidArgument("size must be in [" + std::to_string(presets::kMinSize) + ", 4096]");
    }
    s = presets::make_scene(opt.preset, static_cast<int>(opt.size), opt.seed);
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return kExitConfig;
  }

  try {
    std::filesystem::create_directories(opt.out);
    netpbm::write_ppm(opt.out / "reflectance.ppm", s.reflectance);
    netpbm::write_pfm(opt.out / "depth_orig.pfm", s.depth_orig);
    netpbm::write_pfm(opt.out / "depth_back.pfm", s.depth_back);
    netpbm::write_pgm(opt.out / "region.pgm", s.region);

    const nlohmann::json bundle{
        {"preset", opt.preset},
        {"seed", opt.seed},
        {"brightness_biased", {{"gamma", 1.0}}},
        {"patch_linear", {{"weights", s.patch_linear.weights}, {"bias", s.patch_linear.bias}}}};
    detail::write_text_atomic(opt.out / "victim.json", bundle.dump(2) + "\n");

    const nlohmann::json config{
        {"scene",
         {{"reflectance", "reflectance.ppm"},
          {"depth_orig", "depth_orig.pfm"},
          {"depth_back", "depth_back.pfm"},
          {"region", "region.pgm"},
          {"ambient", 0.3},
          {"noise_stddev", 0.01},
          {"cell_grid", {4, 4}}}},
        {"victim", {{"kind", "brightness_biased"}, {"params", "victim.json"}}},
        {"attack", {{"g_max", 200}, {"sigma0", 1.0}, {"mean0", "max_rgb"}, {"bound_policy", "clamp_eval"}, {"seed", opt.seed}}},
        {"output", {{"checkpoint_every", 10}}}};
    detail::write_text_atomic(opt.out / "config.json", config.dump(2) + "\n");

    // Round-trip through the loader: the written bundle must validate.
    load_run_config(opt.out / "config.json");
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return kExitConfig;
  }
  log->info("wrote {} scene ({}x{}) to {}", opt.preset, opt.size, opt.size, opt.out.string());
  return kExitOk;
}

}  // namespace pitl::cli

#endif  // PITL_COMMANDS_HPP_
