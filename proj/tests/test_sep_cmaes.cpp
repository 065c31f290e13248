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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "pitl/commands.hpp"
#include "pitl/sep_cmaes.hpp"

namespace cma = pitl::cma;
using pitl::cli::ellipsoid;
using pitl::cli::sphere;

namespace {

// Sample moments of (vector - mean) over `draws` generations.
struct Moments {
  std::vector<double> mean, var;
};

Moments sample_moments(cma::OptimizerState s, const cma::StrategyParams& p, std::size_t draws) {
  const std::size_t n = s.dimension();
  Moments m{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  std::size_t count = 0;
  while (count < draws) {
    for (const auto& c : cma::sample_population(s, p)) {
      for (std::size_t i = 0; i < n; ++i) {
        const double d = c.vector[i] - s.mean[i];
        m.mean[i] += d;
        m.var[i] += d * d;
      }
      ++count;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    m.mean[i] /= count;
    m.var[i] = m.var[i] / count - m.mean[i] * m.mean[i];
  }
  return m;
}

}  // namespace

TEST(DefaultLambda, MatchesFormula) {
  EXPECT_EQ(cma::default_lambda(1), 4u);
  // 3 ln 3000 = 24.019..., 3 ln 12000 = 28.178...
  EXPECT_EQ(cma::default_lambda(3000), 28u);
  EXPECT_EQ(cma::default_lambda(12000), 32u);
  EXPECT_EQ(cma::default_lambda(48), 15u);  // 3 ln 48 = 11.61
  EXPECT_THROW(cma::default_lambda(0), pitl::InvalidArgument);
}

TEST(DefaultLambda, RangeForTypicalRegionSizes) {
  for (std::size_t r = 1000; r <= 5000; r += 1) {
    const auto l = cma::default_lambda(3 * r);
    ASSERT_GE(l, 28u);
    ASSERT_LE(l, 32u);
  }
}

TEST(StrategyParams, Invariants) {
  for (std::size_t n : {1u, 2u, 5u, 48u, 100u, 3000u, 12000u}) {
    const auto p = cma::make_params(n);
    EXPECT_EQ(p.mu, p.lambda / 2);
    const double sum = std::accumulate(p.weights.begin(), p.weights.end(), 0.0);
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_TRUE(std::is_sorted(p.weights.rbegin(), p.weights.rend()));
    for (double w : p.weights) EXPECT_GT(w, 0.0);
    EXPECT_GT(p.c_sigma, 0.0);
    EXPECT_LT(p.c_sigma, 1.0);
    EXPECT_GT(p.c_c, 0.0);
    EXPECT_LT(p.c_c, 1.0);
    EXPECT_GT(p.c_cov_sep, 0.0);
    EXPECT_LE(p.c_cov_sep, 1.0);
    EXPECT_GE(p.d_sigma, 1.0);
  }
}

TEST(StrategyParams, SeparableSpeedupOnCovarianceRate) {
  // n = 10, lambda = 10, mu = 5: compare against the full-CMA rate times (n+2)/3.
  const auto p = cma::make_params(10);
  const double n = 10.0;
  const double mc = p.mu_eff;
  const double full = (1.0 / mc) * 2.0 / std::pow(n + std::sqrt(2.0), 2) +
                      (1.0 - 1.0 / mc) * std::min(1.0, (2.0 * mc - 1.0) / (std::pow(n + 2.0, 2) + mc));
  EXPECT_NEAR(p.c_cov_sep, full * (n + 2.0) / 3.0, 1e-15);
  EXPECT_THROW(cma::make_params(10, 1), pitl::InvalidArgument);
}

TEST(Init, MeanStepAndIdentityCovariance) {
  const std::vector<double> m{1, 1, 1};
  const auto s = cma::init(3, m, 1.0, 7);
  EXPECT_EQ(s.cov_diag, (std::vector<double>{1, 1, 1}));
  EXPECT_EQ(s.path_sigma, (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(s.path_c, (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(s.generation, 1u);
  EXPECT_EQ(s.mean, m);
  EXPECT_DOUBLE_EQ(s.step_size, 1.0);

  const std::vector<double> z{0.0};
  const auto s1 = cma::init(1, z, 0.5, 1);
  EXPECT_EQ(s1.cov_diag, std::vector<double>{1.0});
}

TEST(Init, RejectsBadSigmaAndDimension) {
  const std::vector<double> m{1, 1, 1};
  EXPECT_THROW(cma::init(3, m, 0.0, 1), pitl::InvalidArgument);
  EXPECT_THROW(cma::init(3, m, -1.0, 1), pitl::InvalidArgument);
  EXPECT_THROW(cma::init(2, m, 1.0, 1), pitl::InvalidArgument);
  EXPECT_THROW(cma::init(0, {}, 1.0, 1), pitl::InvalidArgument);
}

TEST(Sampling, MatchesStandardNormal) {
  const std::vector<double> m{0, 0};
  const auto s = cma::init(2, m, 1.0, 12345);
  const auto p = cma::make_params(2);
  const auto mo = sample_moments(s, p, 100000);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(mo.mean[i], 0.0, 0.02);
    EXPECT_NEAR(mo.var[i], 1.0, 0.05);
  }
}

TEST(Sampling, VectorEqualsMeanPlusSigmaStep) {
  const std::vector<double> m{5, -2, 0.25};
  auto s = cma::init(3, m, 0.7, 3);
  s.cov_diag = {4.0, 0.25, 1.0};
  const auto p = cma::make_params(3);
  for (const auto& c : cma::sample_population(s, p)) {
    for (int i = 0; i < 3; ++i) EXPECT_EQ(c.vector[i], s.mean[i] + s.step_size * c.step[i]);
  }
}

TEST(Sampling, HalvingSigmaHalvesSpread) {
  const std::vector<double> m(4, 1.0);
  const auto p = cma::make_params(4);
  auto a = cma::init(4, m, 1.0, 99);
  auto b = cma::init(4, m, 0.5, 100);
  const auto ma = sample_moments(a, p, 100000);
  const auto mb = sample_moments(b, p, 100000);
  for (int i = 0; i < 4; ++i) {
    const double ratio = std::sqrt(mb.var[i]) / std::sqrt(ma.var[i]);
    EXPECT_NEAR(ratio, 0.5, 0.5 * 0.05);
  }
}

TEST(Sampling, DeterministicFromClonedState) {
  const std::vector<double> m(6, 0.0);
  const auto p = cma::make_params(6);
  const auto s = cma::init(6, m, 1.0, 2024);
  auto a = s;
  auto b = s;
  const auto pa = cma::sample_population(a, p);
  const auto pb = cma::sample_population(b, p);
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t k = 0; k < pa.size(); ++k) EXPECT_EQ(pa[k].vector, pb[k].vector);
  EXPECT_EQ(a, b);

  // Different seeds diverge.
  auto c = cma::init(6, m, 1.0, 2025);
  EXPECT_NE(cma::sample_population(c, p)[0].vector, pa[0].vector);
}

TEST(Sampling, RejectsInvalidState) {
  const std::vector<double> m{5, 5};
  auto s = cma::init(2, m, 1.0, 1);
  const auto p = cma::make_params(2);
  s.step_size = 0.0;
  EXPECT_THROW(cma::sample_population(s, p), pitl::InvalidArgument);
  s.step_size = 1.0;
  s.cov_diag[1] = 0.0;
  EXPECT_THROW(cma::sample_population(s, p), pitl::InvalidArgument);
}

TEST(RngState, SerializationRoundTrips) {
  cma::Rng r(77);
  r.gaussian();  // leaves a cached Box-Muller value behind
  const auto copy = cma::Rng::deserialize(r.serialize());
  EXPECT_EQ(copy, r);
  auto a = r;
  auto b = copy;
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.gaussian(), b.gaussian());
}

TEST(Update, IdenticalCandidatesKeepMean) {
  const std::vector<double> m{0.3, -1.5, 2.0};
  auto s = cma::init(3, m, 1.0, 5);
  const auto p = cma::make_params(3);
  std::vector<cma::RankedCandidate> pop(p.lambda);
  for (std::size_t k = 0; k < pop.size(); ++k) {
    pop[k].vector = m;
    pop[k].step = {0.0, 0.0, 0.0};
    pop[k].fitness = 1.0;
    pop[k].index = k;
  }
  cma::update(s, p, pop);
  EXPECT_EQ(s.mean, m);
  EXPECT_EQ(s.generation, 2u);
}

TEST(Update, ContractViolations) {
  const std::vector<double> m{0, 0};
  auto s = cma::init(2, m, 1.0, 5);
  const auto p = cma::make_params(2);
  auto pop = cma::sample_population(s, p);
  for (std::size_t k = 0; k < pop.size(); ++k) pop[k].fitness = static_cast<double>(pop.size() - k);
  EXPECT_THROW(cma::update(s, p, pop), pitl::ContractViolation);  // descending
  cma::rank(pop);
  auto shorter = pop;
  shorter.pop_back();
  EXPECT_THROW(cma::update(s, p, shorter), pitl::ContractViolation);
  auto nan = pop;
  nan.back().fitness = std::nan("");
  EXPECT_THROW(cma::update(s, p, nan), pitl::ContractViolation);
  EXPECT_NO_THROW(cma::update(s, p, pop));
}

TEST(Update, TiesKeepSamplingOrder) {
  const std::vector<double> m{0, 0, 0};
  auto s = cma::init(3, m, 1.0, 8);
  const auto p = cma::make_params(3);
  auto pop = cma::sample_population(s, p);
  for (auto& c : pop) c.fitness = 1.0;
  cma::rank(pop);
  for (std::size_t k = 0; k < pop.size(); ++k) EXPECT_EQ(pop[k].index, k);
}

TEST(Update, GenerationIncrementsByOne) {
  const std::vector<double> m(5, 1.0);
  auto s = cma::init(5, m, 1.0, 1);
  const auto p = cma::make_params(5);
  for (std::uint64_t g = 1; g <= 20; ++g) {
    EXPECT_EQ(s.generation, g);
    auto pop = cma::sample_population(s, p);
    for (auto& c : pop) c.fitness = sphere(c.vector);
    cma::rank(pop);
    cma::update(s, p, pop);
  }
}

TEST(Update, PositivityUnderFlatAndExtremeFitness) {
  const std::vector<double> m(8, 0.0);
  const auto p = cma::make_params(8);
  auto s = cma::init(8, m, 1.0, 3);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int g = 0; g < 3000; ++g) {
    auto pop = cma::sample_population(s, p);
    // Alternate flat plateaus, random fitness and a sharp quadratic.
    for (auto& c : pop) c.fitness = g % 3 == 0 ? 0.0 : g % 3 == 1 ? u(rng) : 1e12 * sphere(c.vector);
    cma::rank(pop);
    cma::update(s, p, pop);
    ASSERT_GT(s.step_size, 0.0);
    for (double c : s.cov_diag) ASSERT_GT(c, 0.0);
  }
}

TEST(Update, NumericalFloorHolds) {
  const std::vector<double> m(3, 0.0);
  const auto p = cma::make_params(3);
  auto s = cma::init(3, m, 1e-19, 3);
  s.cov_diag = {1e-20, 1e-20, 1e-20};
  for (int g = 0; g < 200; ++g) {
    auto pop = cma::sample_population(s, p);
    for (auto& c : pop) c.fitness = sphere(c.vector);
    cma::rank(pop);
    cma::update(s, p, pop);
    ASSERT_GE(s.step_size, cma::kNumericalFloor);
    for (double c : s.cov_diag) ASSERT_GE(c, cma::kNumericalFloor);
  }
}

TEST(Determinism, IdenticalTrajectories) {
  const std::vector<double> m0(10, 3.0);
  const auto a = cma::minimize(pitl::cli::rosenbrock, m0, 1.0, 42, 300);
  const auto b = cma::minimize(pitl::cli::rosenbrock, m0, 1.0, 42, 300);
  EXPECT_EQ(a.final_state, b.final_state);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].best_in_generation, b.trace[i].best_in_generation);
}

TEST(Invariance, TranslationGivesSameFitnessTrace) {
  const std::size_t n = 12;
  const std::vector<double> c(n, 8.0);
  std::vector<double> m0(n, 3.0), m0c(n);
  for (std::size_t i = 0; i < n; ++i) m0c[i] = m0[i] + c[i];
  auto shifted = [&](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - c[i]) * (x[i] - c[i]);
    return s;
  };
  const auto a = cma::minimize(sphere, m0, 1.0, 9, 60);
  const auto b = cma::minimize(shifted, m0c, 1.0, 9, 60);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  // Equal up to rounding of the shift itself.
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_NEAR(a.trace[i].best_in_generation, b.trace[i].best_in_generation,
                1e-9 * std::max(1.0, a.trace[i].best_in_generation));
  }
}

TEST(Benchmark, BestSoFarIsMonotone) {
  const std::vector<double> m0(10, 3.0);
  const auto r = cma::minimize(pitl::cli::rosenbrock, m0, 1.0, 1, 500);
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i].best_so_far, r.trace[i - 1].best_so_far);
}

TEST(Benchmark, Sphere40) {
  const std::vector<double> m0(40, 3.0);
  const auto r = cma::minimize(sphere, m0, 1.0, 1, 5000, 1e-10);
  EXPECT_TRUE(r.reached_target);
  EXPECT_LT(r.best_f, 1e-10);
}

TEST(Benchmark, SphereBeatsRandomSearchByTwoOrdersOfMagnitude) {
  const std::size_t n = 40;
  const std::vector<double> m0(n, 3.0);
  const auto r = cma::minimize(sphere, m0, 1.0, 1, 5000, 1e-2);
  ASSERT_TRUE(r.reached_target);
  const std::size_t cma_evals = r.trace.back().evaluations;

  // Random search from the same initial distribution, 100x the budget.
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0.0, 1.0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> x(n);
  for (std::size_t e = 0; e < 100 * cma_evals; ++e) {
    for (std::size_t i = 0; i < n; ++i) x[i] = m0[i] + z(rng);
    best = std::min(best, sphere(x));
  }
  EXPECT_GT(best, 1e-2) << "random search reached the target within 100x the CMA budget";
}

TEST(Benchmark, Ellipsoid20AdaptsDiagonal) {
  const std::vector<double> m0(20, 3.0);
  const auto r = cma::minimize(ellipsoid, m0, 1.0, 1, 20000, 1e-8);
  EXPECT_TRUE(r.reached_target);
  EXPECT_LT(r.best_f, 1e-8);
  const auto& c = r.final_state.cov_diag;
  const double spread = *std::max_element(c.begin(), c.end()) / *std::min_element(c.begin(), c.end());
  EXPECT_GT(spread, 1e3);
  // Variances follow the inverse axis scaling: the stiffest axis gets the smallest one.
  EXPECT_LT(c.back(), c.front());
}
