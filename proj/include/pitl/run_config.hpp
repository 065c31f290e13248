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

// JSON run configuration. Sections: scene, victim, attack, output. Paths are
// relative to the configuration file; unknown keys are rejected.
//
//   {
//     "scene":  {"reflectance": "reflectance.ppm", "depth_orig": "depth_orig.pfm",
//                "depth_back": "depth_back.pfm", "region": "region.pgm",
//                "eval_region": "...pgm", "target": "...pfm",
//                "ambient": 0.3, "noise_stddev": 0.01, "cell_grid": [4, 4]},
//     "victim": {"kind": "brightness_biased", "gamma": 1.0},
//     "attack": {"g_max": 200, "lambda": null, "sigma0": 1.0, "mean0": "max_rgb",
//                "bound_policy": "clamp_eval", "seed": 1, "workers": 1},
//     "output": {"checkpoint_every": 10, "reevaluate": 0}
//   }

#ifndef PITL_RUN_CONFIG_HPP_
#define PITL_RUN_CONFIG_HPP_

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pitl/attack.hpp"
#include "pitl/errors.hpp"
#include "pitl/hash.hpp"
#include "pitl/netpbm.hpp"
#include "pitl/scene.hpp"
#include "pitl/victim.hpp"

namespace pitl {

struct OutputSettings {
  std::uint64_t checkpoint_every = 10;
  std::size_t reevaluate = 0;
};

struct RunConfig {
  std::filesystem::path path;
  SceneModel scene;
  AttackConfig attack;
  OutputSettings output;
  nlohmann::json document;
  /// Referenced file (as written in the config) -> git blob hash.
  std::map<std::string, std::string> file_hashes;
  /// Changes iff the config bytes or any referenced file's content change.
  std::string config_hash;
};

namespace config_detail {

using json = nlohmann::json;

inline void allow_keys(const json& obj, const std::string& section, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError("'" + section + "' must be an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in '" + section + "'");
  }
}

class Loader {
 public:
  explicit Loader(const std::filesystem::path& config_path) : base_(config_path.parent_path()) {}

  std::filesystem::path resolve(const json& j, const std::string& key) {
    if (!j.is_string()) throw ConfigError("'" + key + "' must be a path string");
    const std::string rel = j.get<std::string>();
    const std::filesystem::path p = base_ / rel;
    if (!std::filesystem::is_regular_file(p)) throw ConfigError("missing file for '" + key + "': " + p.string());
    hashes_[rel] = git_blob_hash_file(p);
    return p;
  }

  std::map<std::string, std::string> hashes() const { return hashes_; }

 private:
  std::filesystem::path base_;
  std::map<std::string, std::string> hashes_;
};

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key) || obj[key].is_null()) return fallback;
  try {
    return obj[key].get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

inline DepthMap load_depth(Loader& ld, const json& j, const std::string& key) {
  try {
    auto img = netpbm::read_pfm(ld.resolve(j, key));
    if (img.channels() != 1) throw ConfigError("'" + key + "' must be a single-channel PFM");
    return img;
  } catch (const FormatError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

inline std::vector<std::uint8_t> load_mask(Loader& ld, const json& j, const std::string& key) {
  try {
    return RegionMask::members_from(netpbm::read_pgm(ld.resolve(j, key)));
  } catch (const FormatError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

inline VictimDescriptor parse_victim(Loader& ld, const json& v) {
  allow_keys(v, "victim", {"kind", "value", "depth", "gamma", "weights", "bias", "params", "command", "timeout_s",
                           "serial_only"});
  VictimDescriptor d;
  d.kind = parse_victim_kind(get_or<std::string>(v, "kind", ""));

  // Parameter bundle (as written by make-scene): {"<kind>": {...}}.
  json params = json::object();
  if (v.contains("params")) {
    const auto p = ld.resolve(v["params"], "victim.params");
    try {
      const auto bundle = json::parse(read_file_bytes(p));
      if (bundle.contains(to_string(d.kind))) params = bundle[to_string(d.kind)];
    } catch (const json::exception& e) {
      throw ConfigError(std::string("victim.params: ") + e.what());
    }
  }
  auto pick = [&](const char* key) -> const json* {
    if (v.contains(key)) return &v[key];
    if (params.contains(key)) return &params[key];
    return nullptr;
  };

  switch (d.kind) {
    case VictimKind::kConstant:
      if (v.contains("depth")) {
        d.constant_map = load_depth(ld, v["depth"], "victim.depth");
      } else if (const json* val = pick("value")) {
        d.constant_value = val->get<double>();
      } else {
        throw ConfigError("constant victim needs 'value' or 'depth'");
      }
      break;
    case VictimKind::kBrightnessBiased:
      if (const json* g = pick("gamma")) d.gamma = g->get<double>();
      break;
    case VictimKind::kPatchLinear: {
      const json* w = pick("weights");
      if (!w) throw ConfigError("patch_linear victim needs 'weights' (or a 'params' bundle)");
      d.weights = w->get<std::vector<double>>();
      if (d.weights.size() != static_cast<std::size_t>(kPatchWeights)) {
        throw ConfigError("patch_linear victim needs " + std::to_string(kPatchWeights) + " weights");
      }
      if (const json* b = pick("bias")) d.bias = b->get<double>();
      break;
    }
    case VictimKind::kExternal: {
      const json* cmd = pick("command");
      if (!cmd || !cmd->is_array() || cmd->empty()) throw ConfigError("external victim needs a non-empty 'command' array");
      d.command = cmd->get<std::vector<std::string>>();
      if (const json* t = pick("timeout_s")) d.timeout_s = t->get<double>();
      if (const json* s = pick("serial_only")) d.serial_only = s->get<bool>();
      if (!(d.timeout_s > 0.0)) throw ConfigError("external victim timeout must be positive");
      break;
    }
  }
  return d;
}

}  // namespace config_detail

/// Loads and validates a run configuration, including every referenced
/// file. Throws ConfigError (or DegenerateScene) on any problem.
inline RunConfig load_run_config(const std::filesystem::path& path) {
  using config_detail::allow_keys;
  using config_detail::get_or;
  using json = nlohmann::json;

  if (!std::filesystem::is_regular_file(path)) throw ConfigError("config file not found: " + path.string());
  const std::string bytes = read_file_bytes(path);
  RunConfig rc;
  rc.path = path;
  try {
    rc.document = json::parse(bytes);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  const json& doc = rc.document;
  allow_keys(doc, "config", {"scene", "victim", "attack", "output"});
  for (const char* s : {"scene", "victim", "attack"}) {
    if (!doc.contains(s)) throw ConfigError(std::string("config lacks the '") + s + "' section");
  }
  config_detail::Loader ld(path);

  try {
    // scene
    const json& sc = doc["scene"];
    allow_keys(sc, "scene", {"reflectance", "depth_orig", "depth_back", "region", "eval_region", "target", "ambient",
                             "noise_stddev", "cell_grid"});
    for (const char* k : {"reflectance", "depth_orig", "depth_back", "region"}) {
      if (!sc.contains(k)) throw ConfigError(std::string("scene lacks '") + k + "'");
    }
    SceneModel& scene = rc.scene;
    try {
      scene.reflectance = netpbm::read_ppm(ld.resolve(sc["reflectance"], "scene.reflectance"));
    } catch (const FormatError& e) {
      throw ConfigError(std::string("scene.reflectance: ") + e.what());
    }
    scene.depth_orig = config_detail::load_depth(ld, sc["depth_orig"], "scene.depth_orig");
    scene.depth_back = config_detail::load_depth(ld, sc["depth_back"], "scene.depth_back");
    const int w = scene.reflectance.width();
    const int h = scene.reflectance.height();

    const auto member = config_detail::load_mask(ld, sc["region"], "scene.region");
    if (member.size() != static_cast<std::size_t>(w) * h) throw ConfigError("scene.region size differs from the scene");
    const json grid = sc.contains("cell_grid") ? sc["cell_grid"] : json::array({4, 4});
    if (grid.is_string() && grid.get<std::string>() == "per_pixel") {
      scene.region = RegionMask::per_pixel(w, h, member);
    } else if (grid.is_array() && grid.size() == 2 && grid[0].is_number_integer() && grid[1].is_number_integer()) {
      scene.region = RegionMask::grid(w, h, member, grid[0].get<int>(), grid[1].get<int>());
    } else {
      throw ConfigError("cell_grid must be [rows, cols] or \"per_pixel\"");
    }
    if (sc.contains("eval_region")) {
      const auto em = config_detail::load_mask(ld, sc["eval_region"], "scene.eval_region");
      if (em.size() != static_cast<std::size_t>(w) * h) throw ConfigError("scene.eval_region size differs from the scene");
      scene.eval_region = RegionMask::per_pixel(w, h, em);
    }
    if (sc.contains("target")) rc.attack.target = config_detail::load_depth(ld, sc["target"], "scene.target");

    const json amb = sc.contains("ambient") ? sc["ambient"] : json(0.3);
    scene.ambient = make_rgb(w, h);
    if (amb.is_number()) {
      for (double& v : scene.ambient.values()) v = amb.get<double>();
    } else if (amb.is_array() && amb.size() == 3) {
      for (std::size_t p = 0; p < scene.ambient.pixel_count(); ++p) {
        for (int c = 0; c < 3; ++c) scene.ambient[3 * p + c] = amb[c].get<double>();
      }
    } else {
      throw ConfigError("ambient must be a number or [r, g, b]");
    }
    scene.noise_stddev = get_or<double>(sc, "noise_stddev", 0.01);

    try {
      validate_scene(scene);
    } catch (const DegenerateScene&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string("scene: ") + e.what());
    }
    if (rc.attack.target) require_same_extent(*rc.attack.target, scene.depth_orig, "scene.target");

    // victim
    rc.attack.victim = config_detail::parse_victim(ld, doc["victim"]);

    // attack
    const json& at = doc["attack"];
    allow_keys(at, "attack", {"g_max", "lambda", "sigma0", "mean0", "bound_policy", "seed", "workers"});
    AttackConfig& ac = rc.attack;
    const long long g_max = get_or<long long>(at, "g_max", 200);
    if (g_max < 1) throw ConfigError("g_max must be at least 1");
    ac.g_max = static_cast<std::uint64_t>(g_max);
    if (at.contains("lambda") && !at["lambda"].is_null()) {
      const long long l = get_or<long long>(at, "lambda", 0);
      if (l < 2) throw ConfigError("lambda must be at least 2");
      ac.lambda_override = static_cast<std::size_t>(l);
    }
    ac.sigma0 = get_or<double>(at, "sigma0", 1.0);
    if (!(ac.sigma0 > 0.0)) throw ConfigError("sigma0 must be positive");
    const json m0 = at.contains("mean0") ? at["mean0"] : json("max_rgb");
    if (m0.is_string() && m0 == "max_rgb") {
      ac.mean0_policy = Mean0Policy::kMaxRgb;
    } else if (m0.is_string() && m0 == "mid_rgb") {
      ac.mean0_policy = Mean0Policy::kMidRgb;
    } else if (m0.is_array()) {
      ac.mean0_policy = Mean0Policy::kExplicit;
      ac.mean0 = m0.get<std::vector<double>>();
      initial_mean(ac, scene.region.dimension());  // validates the length
    } else {
      throw ConfigError("mean0 must be \"max_rgb\", \"mid_rgb\" or an array");
    }
    if (get_or<std::string>(at, "bound_policy", "clamp_eval") != "clamp_eval") {
      throw ConfigError("bound_policy must be \"clamp_eval\"");
    }
    ac.seed = get_or<std::uint64_t>(at, "seed", 1);
    const long long workers = get_or<long long>(at, "workers", 1);
    if (workers < 1) throw ConfigError("workers must be at least 1");
    ac.workers = static_cast<unsigned>(workers);

    // output
    if (doc.contains("output")) {
      const json& out = doc["output"];
      allow_keys(out, "output", {"checkpoint_every", "reevaluate"});
      rc.output.checkpoint_every = get_or<std::uint64_t>(out, "checkpoint_every", 10);
      rc.output.reevaluate = get_or<std::size_t>(out, "reevaluate", 0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  rc.file_hashes = ld.hashes();
  Sha1 h;
  h.update(bytes);
  for (const auto& [name, digest] : rc.file_hashes) h.update("\n" + name + " " + digest);
  rc.config_hash = h.hex();
  return rc;
}

}  // namespace pitl

#endif  // PITL_RUN_CONFIG_HPP_
