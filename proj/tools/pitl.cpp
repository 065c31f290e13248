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

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pitl/commands.hpp"

int main(int argc, char** argv) {
  pitl::cli::setup_logging();

  CLI::App app{"Projected-light adversarial attacks on monocular depth estimators"};
  app.require_subcommand(1);

  pitl::cli::AttackOptions attack;
  std::string resume;
  std::uint64_t stop_after = 0;
  auto* a = app.add_subcommand("attack", "run the optimization loop described by a config file");
  a->add_option("--config", attack.config, "run configuration (JSON)")->required();
  a->add_option("--out", attack.out, "output directory")->required();
  a->add_option("--resume", resume, "checkpoint to continue from");
  a->add_option("--stop-after", stop_after, "stop after this generation, leaving a checkpoint");

  pitl::cli::BenchOptions bench;
  auto* b = app.add_subcommand("bench", "run sep-CMA-ES on a standard test function");
  b->add_option("--suite", bench.suite, "sphere | ellipsoid | rosenbrock")->required();
  b->add_option("--n", bench.n, "dimension (>= 2)")->required();
  b->add_option("--seed", bench.seed, "random seed")->default_val(1);
  b->add_option("--budget", bench.budget, "maximum generations")->default_val(5000);

  pitl::cli::EvalOptions eval;
  std::string tgt;
  std::string eval_region;
  auto* e = app.add_subcommand("eval", "score a saved depth map (objective f and presence rate e)");
  e->add_option("--est", eval.est, "estimated depth (PFM)")->required();
  e->add_option("--orig", eval.orig, "depth with the object present (PFM)")->required();
  e->add_option("--back", eval.back, "background-only depth (PFM)")->required();
  e->add_option("--tgt", tgt, "target depth (PFM); defaults to --back");
  e->add_option("--region", eval.region, "region mask (PGM, nonzero = member)")->required();
  e->add_option("--eval-region", eval_region, "separate region for the presence rate (PGM)");

  pitl::cli::MakeSceneOptions make;
  auto* m = app.add_subcommand("make-scene", "write a synthetic scene bundle");
  m->add_option("--preset", make.preset, "locker | stove | sofa-like")->required();
  m->add_option("--size", make.size, "image width and height in pixels")->required();
  m->add_option("--seed", make.seed, "random seed")->default_val(1);
  m->add_option("--out", make.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : pitl::cli::kExitConfig;
  }

  if (*a) {
    if (!resume.empty()) attack.resume = resume;
    if (a->count("--stop-after") > 0) attack.stop_after = stop_after;
    return pitl::cli::cmd_attack(attack);
  }
  if (*b) return pitl::cli::cmd_bench(bench, std::cout);
  if (*e) {
    if (!tgt.empty()) eval.tgt = tgt;
    if (!eval_region.empty()) eval.eval_region = eval_region;
    return pitl::cli::cmd_eval(eval, std::cout);
  }
  if (*m) return pitl::cli::cmd_make_scene(make);
  return pitl::cli::kExitConfig;
}
