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

// Physics-in-the-loop attack: sep-CMA-ES proposes light patterns, the scene
// simulator renders each one, the victim estimates depth, and the L1 distance
// to the target depth over R is the fitness. The best pattern ever observed
// is returned together with a per-generation trace.
//
// Every generation makes exactly lambda victim calls. Patterns are clamped to
// [0,1] only when projected; the optimizer itself is unbounded.

#ifndef PITL_ATTACK_HPP_
#define PITL_ATTACK_HPP_

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "pitl/errors.hpp"
#include "pitl/hash.hpp"
#include "pitl/image.hpp"
#include "pitl/metrics.hpp"
#include "pitl/scene.hpp"
#include "pitl/sep_cmaes.hpp"
#include "pitl/victim.hpp"

namespace pitl {

enum class Mean0Policy { kMaxRgb, kMidRgb, kExplicit };

struct AttackConfig {
  std::uint64_t g_max = 200;
  std::optional<std::size_t> lambda_override;
  double sigma0 = 1.0;
  Mean0Policy mean0_policy = Mean0Policy::kMaxRgb;
  std::vector<double> mean0;  // kExplicit only: length n, or 3 (broadcast per channel)
  std::uint64_t seed = 1;
  /// Evaluation threads; used only when the victim is concurrency-safe.
  unsigned workers = 1;
  VictimDescriptor victim;
  /// Target depth; the background depth when unset (disappearance attack).
  std::optional<DepthMap> target;
};

struct TraceRecord {
  std::uint64_t generation = 0;
  std::uint64_t eval_count = 0;
  double f_best_gen = 0.0;
  double f_best_so_far = 0.0;
  double e_best_gen = 0.0;
  double wall_ms = 0.0;
};

struct AttackResult {
  PerturbationPattern best_pattern;  // clamped, as projected
  std::vector<double> best_vector;   // raw optimizer sample
  double best_objective = std::numeric_limits<double>::infinity();
  double best_presence = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t best_generation = 0;
  std::size_t best_index = 0;
  RgbImage best_capture;
  DepthMap best_depth;
  std::vector<TraceRecord> trace;
  std::uint64_t evaluations = 0;
  /// Optimizer state ready to sample the next generation.
  cma::OptimizerState state;
  std::size_t lambda = 0;
  std::string run_hash;
  bool completed = false;
};

/// Snapshot sufficient to continue a run.
struct Checkpoint {
  AttackResult progress;
};

/// Thrown when the victim fails mid-run. Carries the trace so far and a
/// checkpoint positioned at the start of the failed generation.
class AttackAborted : public VictimFailure {
 public:
  AttackAborted(const std::string& what, AttackResult partial)
      : VictimFailure(what), partial_(std::move(partial)) {}
  const AttackResult& partial() const { return partial_; }
  Checkpoint checkpoint() const { return Checkpoint{partial_}; }

 private:
  AttackResult partial_;
};

struct RunControl {
  /// Resume from a snapshot produced by the same configuration.
  std::optional<Checkpoint> resume;
  /// Stop cleanly after this generation (result.completed = false).
  std::optional<std::uint64_t> stop_after;
  /// Called every `checkpoint_every` generations (0 = never).
  std::uint64_t checkpoint_every = 0;
  std::function<void(const Checkpoint&)> on_checkpoint;
  std::function<void(const TraceRecord&)> on_generation;
};

inline std::size_t attack_lambda(const AttackConfig& cfg, std::size_t n) {
  return cfg.lambda_override ? *cfg.lambda_override : cma::default_lambda(n);
}

inline std::vector<double> initial_mean(const AttackConfig& cfg, std::size_t n) {
  switch (cfg.mean0_policy) {
    case Mean0Policy::kMaxRgb: return std::vector<double>(n, 1.0);
    case Mean0Policy::kMidRgb: return std::vector<double>(n, 0.5);
    case Mean0Policy::kExplicit:
      if (cfg.mean0.size() == n) return cfg.mean0;
      if (cfg.mean0.size() == 3) {
        std::vector<double> m(n);
        for (std::size_t i = 0; i < n; ++i) m[i] = cfg.mean0[i % 3];
        return m;
      }
      throw ConfigError("explicit mean0 must have length 3 or " + std::to_string(n));
  }
  throw ConfigError("unhandled mean0 policy");
}

namespace detail {

inline std::string mean0_name(Mean0Policy p) {
  switch (p) {
    case Mean0Policy::kMaxRgb: return "max_rgb";
    case Mean0Policy::kMidRgb: return "mid_rgb";
    case Mean0Policy::kExplicit: return "explicit";
  }
  return "?";
}

inline std::string scene_digest(const SceneModel& s, const DepthMap& target) {
  Sha1 h;
  auto dims = [&](int w, int hh) {
    h.update(std::to_string(w) + "x" + std::to_string(hh) + ";");
  };
  dims(s.width(), s.height());
  h.update(s.reflectance.values());
  h.update(s.ambient.values());
  h.update(s.depth_orig.values());
  h.update(s.depth_back.values());
  h.update(s.region.members());
  h.update("grid " + std::to_string(s.region.rows()) + "x" + std::to_string(s.region.cols()) + " cells " +
           std::to_string(s.region.cell_count()) + ";");
  if (s.eval_region) {
    h.update("eval;");
    h.update(s.eval_region->members());
  }
  h.update(target.values());
  return h.hex();
}

/// Independent noise stream per (seed, generation, candidate) so captures do
/// not depend on evaluation order or thread count.
inline std::mt19937_64 noise_engine(std::uint64_t seed, std::uint64_t generation, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(generation), static_cast<std::uint32_t>(generation >> 32),
                    static_cast<std::uint32_t>(index), 0x9e3779b9u};
  return std::mt19937_64(seq);
}

}  // namespace detail

/// Hash over every input that shapes the trajectory. Thread count, g_max and
/// checkpoint cadence are excluded, so a finished run can be extended.
inline std::string run_hash(const AttackConfig& cfg, const SceneModel& scene) {
  const std::size_t n = scene.region.dimension();
  const DepthMap& target = cfg.target ? *cfg.target : scene.depth_back;
  nlohmann::json j{{"lambda", attack_lambda(cfg, n)},
                   {"sigma0", cfg.sigma0},
                   {"mean0_policy", detail::mean0_name(cfg.mean0_policy)},
                   {"mean0", cfg.mean0},
                   {"bound_policy", "clamp_eval"},
                   {"seed", cfg.seed},
                   {"noise_stddev", scene.noise_stddev},
                   {"victim", cfg.victim.to_json()},
                   {"scene", detail::scene_digest(scene, target)}};
  return sha1_hex(j.dump());
}

struct Evaluation {
  double f = 0.0;
  RgbImage capture;
  DepthMap depth;
};

/// One PITL evaluation: project (clamped), capture, estimate, score.
template <typename Engine>
Evaluation evaluate_pattern(const SceneModel& scene, Victim& victim, const DepthMap& target,
                            const PerturbationPattern& pattern, Engine& noise) {
  Evaluation ev;
  ev.capture = compose_projection(scene, pattern, noise);
  ev.depth = victim.estimate(ev.capture);
  require_same_extent(ev.depth, ev.capture, "victim output");
  ev.f = objective(ev.depth, target, scene.region);
  return ev;
}

namespace detail {

inline void evaluate_generation(const SceneModel& scene, Victim& victim, const DepthMap& target,
                                const std::vector<cma::RankedCandidate>& pop, std::uint64_t seed,
                                std::uint64_t generation, unsigned workers, std::vector<Evaluation>& out) {
  out.assign(pop.size(), Evaluation{});
  auto eval_one = [&](std::size_t k) {
    auto noise = noise_engine(seed, generation, pop[k].index);
    const auto pattern = PerturbationPattern::from_vector(scene.region, pop[k].vector);
    out[k] = evaluate_pattern(scene, victim, target, pattern, noise);
  };

  const unsigned threads = victim.concurrent_safe() ? std::min<unsigned>(workers, static_cast<unsigned>(pop.size())) : 1;
  if (threads <= 1) {
    for (std::size_t k = 0; k < pop.size(); ++k) eval_one(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t k; (k = next.fetch_add(1)) < pop.size();) {
          try {
            eval_one(k);
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// Runs generations until state.generation exceeds g_max (or stop_after).
inline AttackResult run_attack(const AttackConfig& cfg, const SceneModel& scene, Victim& victim,
                               const RunControl& control = {}) {
  validate_scene(scene);
  if (cfg.g_max < 1) throw ConfigError("g_max must be at least 1");
  if (!(cfg.sigma0 > 0.0)) throw ConfigError("sigma0 must be positive");
  const DepthMap& target = cfg.target ? *cfg.target : scene.depth_back;
  require_same_extent(target, scene.depth_orig, "target depth");

  const std::size_t n = scene.region.dimension();
  const std::size_t lambda = attack_lambda(cfg, n);
  const cma::StrategyParams params = cma::make_params(n, lambda);
  const std::string hash = run_hash(cfg, scene);

  AttackResult res;
  if (control.resume) {
    res = control.resume->progress;
    if (res.run_hash != hash) throw ConfigError("checkpoint was produced by a different run configuration");
    cma::validate(res.state, params);
    res.completed = false;
  } else {
    res.state = cma::init(n, initial_mean(cfg, n), cfg.sigma0, cfg.seed);
    res.lambda = lambda;
    res.run_hash = hash;
  }

  const RegionMask& e_region = scene.presence_region();
  const auto t0 = std::chrono::steady_clock::now();
  const double wall_offset = res.trace.empty() ? 0.0 : res.trace.back().wall_ms;
  std::vector<Evaluation> evals;

  while (res.state.generation <= cfg.g_max) {
    const std::uint64_t g = res.state.generation;
    const cma::OptimizerState before = res.state;
    auto pop = cma::sample_population(res.state, params);
    try {
      detail::evaluate_generation(scene, victim, target, pop, cfg.seed, g, cfg.workers, evals);
    } catch (const VictimFailure& e) {
      res.state = before;
      throw AttackAborted("victim failed in generation " + std::to_string(g) + ": " + e.what(), res);
    }
    res.evaluations += pop.size();

    for (std::size_t k = 0; k < pop.size(); ++k) pop[k].fitness = evals[k].f;
    cma::rank(pop);
    const std::size_t kbest = pop.front().index;
    const Evaluation& best = evals[kbest];
    const double e_gen = presence_rate(best.depth, scene.depth_orig, scene.depth_back, e_region);

    if (res.best_objective > best.f) {
      res.best_objective = best.f;
      res.best_vector = pop.front().vector;
      res.best_pattern = PerturbationPattern::from_vector(scene.region, res.best_vector).clamped();
      res.best_presence = e_gen;
      res.best_generation = g;
      res.best_index = kbest;
      res.best_capture = best.capture;
      res.best_depth = best.depth;
    }

    const double wall =
        wall_offset + std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    res.trace.push_back({g, res.evaluations, best.f, res.best_objective, e_gen, wall});
    if (control.on_generation) control.on_generation(res.trace.back());

    cma::update(res.state, params, pop);

    if (control.checkpoint_every > 0 && control.on_checkpoint && g % control.checkpoint_every == 0) {
      control.on_checkpoint(Checkpoint{res});
    }
    if (control.stop_after && g >= *control.stop_after && g < cfg.g_max) return res;
  }
  res.completed = true;
  return res;
}

inline AttackResult run_attack(const AttackConfig& cfg, const SceneModel& scene, const RunControl& control = {}) {
  auto victim = make_victim(cfg.victim, scene);
  return run_attack(cfg, scene, *victim, control);
}

struct Reevaluation {
  double mean_f = 0.0;
  double mean_e = 0.0;
  std::vector<double> f;
  std::vector<double> e;
};

/// Re-projects a pattern `repeats` times with fresh noise. Reporting only;
/// these calls are not part of the optimization budget.
inline Reevaluation reevaluate(const SceneModel& scene, Victim& victim, const DepthMap& target,
                               const PerturbationPattern& pattern, std::size_t repeats, std::uint64_t seed) {
  Reevaluation r;
  for (std::size_t i = 0; i < repeats; ++i) {
    auto noise = detail::noise_engine(seed ^ 0xa5a5a5a5a5a5a5a5ull, std::numeric_limits<std::uint64_t>::max(), i);
    const auto ev = evaluate_pattern(scene, victim, target, pattern, noise);
    r.f.push_back(ev.f);
    r.e.push_back(presence_rate(ev.depth, scene.depth_orig, scene.depth_back, scene.presence_region()));
  }
  if (repeats > 0) {
    for (std::size_t i = 0; i < repeats; ++i) {
      r.mean_f += r.f[i];
      r.mean_e += r.e[i];
    }
    r.mean_f /= static_cast<double>(repeats);
    r.mean_e /= static_cast<double>(repeats);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Checkpoint serialization

namespace detail {

inline nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }
inline double number_from(const nlohmann::json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }

template <typename T>
nlohmann::json image_json(const Image<T>& img) {
  return {{"width", img.width()}, {"height", img.height()}, {"channels", img.channels()},
          {"data", std::vector<T>(img.values().begin(), img.values().end())}};
}

template <typename T>
Image<T> image_from(const nlohmann::json& j) {
  if (j.is_null()) return {};
  Image<T> img(j.at("width").get<int>(), j.at("height").get<int>(), j.at("channels").get<int>());
  const auto data = j.at("data").get<std::vector<T>>();
  if (data.size() != img.size()) throw FormatError("checkpoint image has wrong length");
  std::copy(data.begin(), data.end(), img.values().begin());
  return img;
}

}  // namespace detail

inline nlohmann::json checkpoint_to_json(const Checkpoint& c) {
  const AttackResult& r = c.progress;
  const auto& s = r.state;
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& t : r.trace) {
    trace.push_back({t.generation, t.eval_count, t.f_best_gen, t.f_best_so_far, detail::number_or_null(t.e_best_gen),
                     t.wall_ms});
  }
  return {{"format", "pitl-checkpoint"},
          {"version", 1},
          {"run_hash", r.run_hash},
          {"lambda", r.lambda},
          {"evaluations", r.evaluations},
          {"state",
           {{"mean", s.mean},
            {"step_size", s.step_size},
            {"cov_diag", s.cov_diag},
            {"path_sigma", s.path_sigma},
            {"path_c", s.path_c},
            {"generation", s.generation},
            {"rng", s.rng.serialize()}}},
          {"best",
           {{"objective", detail::number_or_null(r.best_objective)},
            {"presence", detail::number_or_null(r.best_presence)},
            {"generation", r.best_generation},
            {"index", r.best_index},
            {"vector", r.best_vector},
            {"pattern", {{"rows", r.best_pattern.rows}, {"cols", r.best_pattern.cols}, {"values", r.best_pattern.values}}},
            {"capture", r.best_capture.empty() ? nlohmann::json(nullptr) : detail::image_json(r.best_capture)},
            {"depth", r.best_depth.empty() ? nlohmann::json(nullptr) : detail::image_json(r.best_depth)}}},
          {"trace", trace}};
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "pitl-checkpoint" || j.value("version", 0) != 1) {
      throw FormatError("not a version-1 checkpoint");
    }
    Checkpoint c;
    AttackResult& r = c.progress;
    r.run_hash = j.at("run_hash").get<std::string>();
    r.lambda = j.at("lambda").get<std::size_t>();
    r.evaluations = j.at("evaluations").get<std::uint64_t>();
    const auto& s = j.at("state");
    r.state.mean = s.at("mean").get<std::vector<double>>();
    r.state.step_size = s.at("step_size").get<double>();
    r.state.cov_diag = s.at("cov_diag").get<std::vector<double>>();
    r.state.path_sigma = s.at("path_sigma").get<std::vector<double>>();
    r.state.path_c = s.at("path_c").get<std::vector<double>>();
    r.state.generation = s.at("generation").get<std::uint64_t>();
    r.state.rng = cma::Rng::deserialize(s.at("rng").get<std::string>());
    const auto& b = j.at("best");
    r.best_objective = detail::number_from(b.at("objective"), std::numeric_limits<double>::infinity());
    r.best_presence = detail::number_from(b.at("presence"), std::numeric_limits<double>::quiet_NaN());
    r.best_generation = b.at("generation").get<std::uint64_t>();
    r.best_index = b.at("index").get<std::size_t>();
    r.best_vector = b.at("vector").get<std::vector<double>>();
    r.best_pattern.rows = b.at("pattern").at("rows").get<int>();
    r.best_pattern.cols = b.at("pattern").at("cols").get<int>();
    r.best_pattern.values = b.at("pattern").at("values").get<std::vector<double>>();
    r.best_capture = detail::image_from<double>(b.at("capture"));
    r.best_depth = detail::image_from<float>(b.at("depth"));
    for (const auto& t : j.at("trace")) {
      r.trace.push_back({t.at(0).get<std::uint64_t>(), t.at(1).get<std::uint64_t>(), t.at(2).get<double>(),
                         t.at(3).get<double>(), detail::number_from(t.at(4), std::numeric_limits<double>::quiet_NaN()),
                         t.at(5).get<double>()});
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("corrupt checkpoint: ") + e.what());
  }
}

}  // namespace pitl

#endif  // PITL_ATTACK_HPP_
