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

// Minimizes a 10-dimensional shifted sphere and prints the trajectory.

#include <cstdio>
#include <vector>

#include "pitl/sep_cmaes.hpp"

int main() {
  auto f = [](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - 0.5 * i) * (x[i] - 0.5 * i);
    return s;
  };
  const std::vector<double> m0(10, 0.0);
  const auto r = pitl::cma::minimize(f, m0, 1.0, 42, 2000, 1e-12);
  for (std::size_t g = 0; g < r.trace.size(); g += 50) {
    std::printf("gen %4zu  f_best %.3e\n", g + 1, r.trace[g].best_so_far);
  }
  std::printf("final %.3e after %zu generations\n", r.best_f, r.trace.size());
  for (double v : r.best_x) std::printf("%.6f ", v);
  std::printf("\n");
  return r.reached_target ? 0 : 1;
}
