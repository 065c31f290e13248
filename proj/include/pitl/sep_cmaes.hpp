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

// Separable CMA-ES: CMA-ES restricted to a diagonal covariance matrix, so
// sampling and adaptation cost O(n) per candidate.
//
// REFERENCE:
//   R. Ros and N. Hansen (2008). A Simple Modification in CMA-ES Achieving
//   Linear Time and Space Complexity. PPSN X, pp. 296-305.
//   N. Hansen (2016). The CMA Evolution Strategy: A Tutorial. arXiv:1604.00772.
//
// Minimization throughout. The interface is ask/tell style:
//
//   auto params = pitl::cma::make_params(n);
//   auto state  = pitl::cma::init(n, mean0, sigma0, seed);
//   for (...) {
//     auto pop = pitl::cma::sample_population(state, params);
//     for (auto& c : pop) c.fitness = f(c.vector);
//     pitl::cma::rank(pop);
//     pitl::cma::update(state, params, pop);
//   }

#ifndef PITL_SEP_CMAES_HPP_
#define PITL_SEP_CMAES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pitl/errors.hpp"

namespace pitl::cma {

/// Lower bound applied to step size and every variance after each update.
inline constexpr double kNumericalFloor = 1e-20;

/// Seedable normal source. The distribution object caches the second value
/// of each Box-Muller pair, so it is part of the reproducible state.
struct Rng {
  std::mt19937_64 engine;
  std::normal_distribution<double> normal{0.0, 1.0};

  explicit Rng(std::uint64_t seed = 0) : engine(seed) {}

  double gaussian() { return normal(engine); }

  std::string serialize() const {
    std::ostringstream os;
    os << engine << ' ' << normal;
    return os.str();
  }
  static Rng deserialize(const std::string& text) {
    Rng r;
    std::istringstream is(text);
    is >> r.engine >> r.normal;
    if (!is) throw InvalidArgument("corrupt rng state");
    return r;
  }

  friend bool operator==(const Rng&, const Rng&) = default;
};

/// Strategy constants. Build with make_params(); the fields are public so a
/// caller can inspect them, not so they can be hand-tuned after the fact.
struct StrategyParams {
  std::size_t n = 0;
  std::size_t lambda = 0;
  std::size_t mu = 0;
  std::vector<double> weights;
  double mu_eff = 0.0;
  double c_sigma = 0.0;
  double d_sigma = 0.0;
  double c_c = 0.0;
  double mu_cov = 0.0;
  double c_cov_sep = 0.0;
  double chi_n = 0.0;  // E||N(0,I)||
};

struct OptimizerState {
  std::vector<double> mean;
  double step_size = 1.0;
  std::vector<double> cov_diag;
  std::vector<double> path_sigma;
  std::vector<double> path_c;
  std::uint64_t generation = 1;
  Rng rng;

  std::size_t dimension() const { return mean.size(); }
  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

/// x = mean + step_size * step, recorded at sampling time.
struct RankedCandidate {
  std::vector<double> vector;
  std::vector<double> step;
  double fitness = std::numeric_limits<double>::quiet_NaN();
  std::size_t index = 0;  // sampling order within the generation
};

/// lambda = 4 + floor(3 ln n).
inline std::size_t default_lambda(std::size_t n) {
  if (n == 0) throw InvalidArgument("dimension must be at least 1");
  return 4 + static_cast<std::size_t>(std::floor(3.0 * std::log(static_cast<double>(n))));
}

/// Default sep-CMA-ES constants for dimension n. lambda defaults to
/// default_lambda(n); an explicit value must be at least 2.
inline StrategyParams make_params(std::size_t n, std::optional<std::size_t> lambda = std::nullopt) {
  if (n == 0) throw InvalidArgument("dimension must be at least 1");
  StrategyParams p;
  p.n = n;
  p.lambda = lambda.value_or(default_lambda(n));
  if (p.lambda < 2) throw InvalidArgument("population size must be at least 2");
  p.mu = p.lambda / 2;

  // Log-linear recombination weights w_i ∝ ln(mu + 1/2) - ln(i), i = 1..mu.
  p.weights.resize(p.mu);
  for (std::size_t i = 0; i < p.mu; ++i) {
    p.weights[i] = std::log(static_cast<double>(p.mu) + 0.5) - std::log(static_cast<double>(i + 1));
  }
  const double wsum = std::accumulate(p.weights.begin(), p.weights.end(), 0.0);
  for (double& w : p.weights) w /= wsum;
  double sq = 0.0;
  for (double w : p.weights) sq += w * w;
  p.mu_eff = 1.0 / sq;

  const double nd = static_cast<double>(n);
  // Cumulation for step-size control: c_sigma = (mu_eff + 2) / (n + mu_eff + 3).
  p.c_sigma = (p.mu_eff + 2.0) / (nd + p.mu_eff + 3.0);
  // Damping: d_sigma = 1 + 2 max(0, sqrt((mu_eff - 1)/(n + 1)) - 1) + c_sigma.
  p.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((p.mu_eff - 1.0) / (nd + 1.0)) - 1.0) + p.c_sigma;
  // Cumulation for the rank-one path: c_c = 4 / (n + 4).
  p.c_c = 4.0 / (nd + 4.0);
  // Covariance learning rate of full CMA-ES,
  //   c_cov = 1/mu_cov * 2/(n+sqrt2)^2 + (1 - 1/mu_cov) min(1, (2 mu_cov - 1)/((n+2)^2 + mu_cov)),
  // with mu_cov = mu_eff, then scaled by (n + 2)/3 for the diagonal model.
  p.mu_cov = p.mu_eff;
  const double c_cov = (1.0 / p.mu_cov) * 2.0 / ((nd + std::sqrt(2.0)) * (nd + std::sqrt(2.0))) +
                       (1.0 - 1.0 / p.mu_cov) *
                           std::min(1.0, (2.0 * p.mu_cov - 1.0) / ((nd + 2.0) * (nd + 2.0) + p.mu_cov));
  p.c_cov_sep = std::min(1.0, c_cov * (nd + 2.0) / 3.0);
  p.chi_n = std::sqrt(nd) * (1.0 - 1.0 / (4.0 * nd) + 1.0 / (21.0 * nd * nd));
  return p;
}

inline OptimizerState init(std::size_t n, std::span<const double> initial_mean, double initial_sigma,
                           std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("dimension must be at least 1");
  if (initial_mean.size() != n) throw InvalidArgument("initial mean has wrong dimension");
  if (!(initial_sigma > 0.0) || !std::isfinite(initial_sigma)) {
    throw InvalidArgument("initial step size must be positive and finite");
  }
  OptimizerState s;
  s.mean.assign(initial_mean.begin(), initial_mean.end());
  s.step_size = initial_sigma;
  s.cov_diag.assign(n, 1.0);
  s.path_sigma.assign(n, 0.0);
  s.path_c.assign(n, 0.0);
  s.generation = 1;
  s.rng = Rng(seed);
  return s;
}

inline void validate(const OptimizerState& s, const StrategyParams& p) {
  const std::size_t n = s.dimension();
  if (n == 0 || n != p.n) throw InvalidArgument("optimizer state and parameters disagree on dimension");
  if (s.cov_diag.size() != n || s.path_sigma.size() != n || s.path_c.size() != n) {
    throw InvalidArgument("optimizer state vectors have inconsistent lengths");
  }
  if (!(s.step_size > 0.0) || !std::isfinite(s.step_size)) {
    throw InvalidArgument("step size must be positive and finite");
  }
  for (double c : s.cov_diag) {
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("covariance entries must be positive");
  }
}

/// Draws lambda candidates: step ~ N(0, diag(cov_diag)), vector = mean + sigma * step.
inline std::vector<RankedCandidate> sample_population(OptimizerState& s, const StrategyParams& p) {
  validate(s, p);
  const std::size_t n = s.dimension();
  std::vector<double> sd(n);
  for (std::size_t i = 0; i < n; ++i) sd[i] = std::sqrt(s.cov_diag[i]);

  std::vector<RankedCandidate> pop(p.lambda);
  for (std::size_t k = 0; k < p.lambda; ++k) {
    auto& c = pop[k];
    c.index = k;
    c.step.resize(n);
    c.vector.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      c.step[i] = sd[i] * s.rng.gaussian();
      c.vector[i] = s.mean[i] + s.step_size * c.step[i];
    }
  }
  return pop;
}

/// Stable ascending sort by fitness; NaN ranks last.
inline void rank(std::vector<RankedCandidate>& pop) {
  for (auto& c : pop) {
    if (std::isnan(c.fitness)) c.fitness = std::numeric_limits<double>::infinity();
  }
  std::stable_sort(pop.begin(), pop.end(),
                   [](const RankedCandidate& a, const RankedCandidate& b) { return a.fitness < b.fitness; });
}

/// One generation of mean, path, step-size and diagonal covariance
/// adaptation. `ranked` must hold exactly lambda candidates sorted by
/// ascending fitness.
inline void update(OptimizerState& s, const StrategyParams& p, const std::vector<RankedCandidate>& ranked) {
  validate(s, p);
  const std::size_t n = s.dimension();
  if (ranked.size() != p.lambda) {
    throw ContractViolation("update expects exactly " + std::to_string(p.lambda) + " candidates, got " +
                            std::to_string(ranked.size()));
  }
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    if (std::isnan(ranked[k].fitness)) throw ContractViolation("candidate fitness is NaN");
    if (ranked[k].step.size() != n || ranked[k].vector.size() != n) {
      throw ContractViolation("candidate has wrong dimension");
    }
    if (k > 0 && ranked[k].fitness < ranked[k - 1].fitness) {
      throw ContractViolation("candidates are not sorted by ascending fitness");
    }
  }

  // y_w = sum_i w_i y_{i:lambda};  m <- m + sigma * y_w
  std::vector<double> y_w(n, 0.0);
  for (std::size_t i = 0; i < p.mu; ++i) {
    const auto& y = ranked[i].step;
    for (std::size_t j = 0; j < n; ++j) y_w[j] += p.weights[i] * y[j];
  }
  for (std::size_t j = 0; j < n; ++j) s.mean[j] += s.step_size * y_w[j];

  // p_sigma <- (1 - c_sigma) p_sigma + sqrt(c_sigma (2 - c_sigma) mu_eff) C^{-1/2} y_w
  const double ps_coef = std::sqrt(p.c_sigma * (2.0 - p.c_sigma) * p.mu_eff);
  double ps_norm2 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    s.path_sigma[j] = (1.0 - p.c_sigma) * s.path_sigma[j] + ps_coef * y_w[j] / std::sqrt(s.cov_diag[j]);
    ps_norm2 += s.path_sigma[j] * s.path_sigma[j];
  }
  const double ps_norm = std::sqrt(ps_norm2);

  // Stall the rank-one path while ||p_sigma|| is large:
  // h_sigma = [ ||p_sigma|| / sqrt(1 - (1 - c_sigma)^(2g)) < (1.4 + 2/(n+1)) E||N|| ].
  const double g = static_cast<double>(s.generation);
  const double ps_bias = std::sqrt(1.0 - std::pow(1.0 - p.c_sigma, 2.0 * g));
  const bool h_sigma = ps_norm / ps_bias < (1.4 + 2.0 / (static_cast<double>(n) + 1.0)) * p.chi_n;

  // p_c <- (1 - c_c) p_c + h_sigma sqrt(c_c (2 - c_c) mu_eff) y_w
  const double pc_coef = h_sigma ? std::sqrt(p.c_c * (2.0 - p.c_c) * p.mu_eff) : 0.0;
  for (std::size_t j = 0; j < n; ++j) s.path_c[j] = (1.0 - p.c_c) * s.path_c[j] + pc_coef * y_w[j];

  // C <- (1 - c_cov) C
  //      + c_cov/mu_cov (p_c^2 + (1 - h_sigma) c_c (2 - c_c) C)
  //      + c_cov (1 - 1/mu_cov) sum_i w_i y_i^2            (all elementwise)
  const double c1 = p.c_cov_sep / p.mu_cov;
  const double cmu = p.c_cov_sep * (1.0 - 1.0 / p.mu_cov);
  const double stall = h_sigma ? 0.0 : p.c_c * (2.0 - p.c_c);
  for (std::size_t j = 0; j < n; ++j) {
    double rank_mu = 0.0;
    for (std::size_t i = 0; i < p.mu; ++i) {
      const double y = ranked[i].step[j];
      rank_mu += p.weights[i] * y * y;
    }
    const double c = s.cov_diag[j];
    const double next = (1.0 - p.c_cov_sep) * c + c1 * (s.path_c[j] * s.path_c[j] + stall * c) + cmu * rank_mu;
    s.cov_diag[j] = std::max(next, kNumericalFloor);
  }

  // sigma <- sigma exp((c_sigma / d_sigma) (||p_sigma|| / E||N|| - 1))
  s.step_size *= std::exp((p.c_sigma / p.d_sigma) * (ps_norm / p.chi_n - 1.0));
  if (!std::isfinite(s.step_size)) throw Error("step size diverged");
  s.step_size = std::max(s.step_size, kNumericalFloor);

  ++s.generation;
}

/// Per-generation record produced by minimize().
struct GenerationRecord {
  std::uint64_t generation = 0;
  std::size_t evaluations = 0;
  double best_in_generation = 0.0;
  double best_so_far = 0.0;
};

struct MinimizeResult {
  std::vector<double> best_x;
  double best_f = std::numeric_limits<double>::infinity();
  std::vector<GenerationRecord> trace;
  OptimizerState final_state;
  bool reached_target = false;
};

/// Convenience driver for closed-form objectives. Stops after
/// `max_generations` or as soon as the best-so-far value drops below
/// `target` (when given).
inline MinimizeResult minimize(const std::function<double(std::span<const double>)>& f,
                               std::span<const double> mean0, double sigma0, std::uint64_t seed,
                               std::size_t max_generations, std::optional<double> target = std::nullopt,
                               std::optional<std::size_t> lambda = std::nullopt) {
  const std::size_t n = mean0.size();
  const StrategyParams params = make_params(n, lambda);
  MinimizeResult r;
  r.final_state = init(n, mean0, sigma0, seed);
  std::size_t evals = 0;
  for (std::size_t g = 0; g < max_generations; ++g) {
    auto pop = sample_population(r.final_state, params);
    for (auto& c : pop) c.fitness = f(c.vector);
    evals += pop.size();
    rank(pop);
    if (pop.front().fitness < r.best_f) {
      r.best_f = pop.front().fitness;
      r.best_x = pop.front().vector;
    }
    r.trace.push_back({r.final_state.generation, evals, pop.front().fitness, r.best_f});
    update(r.final_state, params, pop);
    if (target && r.best_f < *target) {
      r.reached_target = true;
      break;
    }
  }
  return r;
}

}  // namespace pitl::cma

#endif  // PITL_SEP_CMAES_HPP_
