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

// Disappearance attack against the brightness-biased victim on a 32x32 locker
// scene, with a 4x4 projector grid.

#include <cstdio>

#include "pitl/attack.hpp"
#include "pitl/presets.hpp"

int main() {
  const auto s = pitl::presets::make_scene("locker", 32, 1);
  pitl::SceneModel scene;
  scene.reflectance = s.reflectance;
  scene.ambient = pitl::uniform_ambient(32, 32, 0.3);
  scene.depth_orig = s.depth_orig;
  scene.depth_back = s.depth_back;
  scene.region = pitl::RegionMask::grid(32, 32, pitl::RegionMask::members_from(s.region), 4, 4);

  pitl::AttackConfig cfg;
  cfg.g_max = 200;
  cfg.seed = 7;
  cfg.victim.kind = pitl::VictimKind::kBrightnessBiased;
  cfg.victim.gamma = 1.0;

  pitl::RunControl control;
  control.on_generation = [](const pitl::TraceRecord& t) {
    if (t.generation % 20 == 0) {
      std::printf("gen %3llu  f %.4f  e %.4f\n", static_cast<unsigned long long>(t.generation), t.f_best_so_far,
                  t.e_best_gen);
    }
  };
  const auto r = pitl::run_attack(cfg, scene, control);
  std::printf("best f %.4f  e %.4f  (%llu victim calls)\n", r.best_objective, r.best_presence,
              static_cast<unsigned long long>(r.evaluations));
  for (int c = 0; c < 4 * 4; ++c) {
    std::printf("cell %2d  rgb %.3f %.3f %.3f\n", c, r.best_pattern.values[3 * c], r.best_pattern.values[3 * c + 1],
                r.best_pattern.values[3 * c + 2]);
  }
  return 0;
}
