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

// Victim depth estimators. Only depth maps come back; nothing else about the
// model is observable.

#ifndef PITL_VICTIM_HPP_
#define PITL_VICTIM_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pitl/errors.hpp"
#include "pitl/hash.hpp"
#include "pitl/image.hpp"
#include "pitl/scene.hpp"
#include "pitl/subprocess.hpp"
#include "pitl/victim_protocol.hpp"

namespace pitl {

enum class VictimKind { kConstant, kBrightnessBiased, kPatchLinear, kExternal };

inline std::string to_string(VictimKind k) {
  switch (k) {
    case VictimKind::kConstant: return "constant";
    case VictimKind::kBrightnessBiased: return "brightness_biased";
    case VictimKind::kPatchLinear: return "patch_linear";
    case VictimKind::kExternal: return "external";
  }
  return "?";
}

inline VictimKind parse_victim_kind(const std::string& s) {
  if (s == "constant") return VictimKind::kConstant;
  if (s == "brightness_biased") return VictimKind::kBrightnessBiased;
  if (s == "patch_linear") return VictimKind::kPatchLinear;
  if (s == "external") return VictimKind::kExternal;
  throw ConfigError("unknown victim kind '" + s + "'");
}

inline constexpr int kPatchSize = 5;
inline constexpr int kPatchWeights = kPatchSize * kPatchSize * 3;

/// Everything needed to rebuild a victim. Kind-specific fields are ignored
/// by the other kinds.
struct VictimDescriptor {
  VictimKind kind = VictimKind::kBrightnessBiased;

  // constant: a uniform value, or a full map when `constant_map` is set.
  double constant_value = 0.0;
  std::optional<DepthMap> constant_map;

  // brightness_biased
  double gamma = 1.0;

  // patch_linear: 5x5 RGB patch weights ordered (dy, dx, channel), dy and dx
  // running over -2..2.
  std::vector<double> weights;
  double bias = 0.0;

  // external
  std::vector<std::string> command;
  double timeout_s = 60.0;
  /// Declares the endpoint serial-only (e.g. real hardware).
  bool serial_only = false;

  /// Canonical form used for hashing and manifests.
  nlohmann::json to_json() const {
    nlohmann::json j{{"kind", to_string(kind)}};
    switch (kind) {
      case VictimKind::kConstant:
        if (constant_map) {
          j["depth_sha1"] = Sha1().update(constant_map->values()).hex();
          j["width"] = constant_map->width();
          j["height"] = constant_map->height();
        } else {
          j["value"] = constant_value;
        }
        break;
      case VictimKind::kBrightnessBiased: j["gamma"] = gamma; break;
      case VictimKind::kPatchLinear:
        j["weights"] = weights;
        j["bias"] = bias;
        break;
      case VictimKind::kExternal:
        j["command"] = command;
        j["timeout_s"] = timeout_s;
        j["serial_only"] = serial_only;
        break;
    }
    return j;
  }
};

/// Seeded random patch_linear parameters. Weight scale is chosen so that a
/// mid-grey patch yields a response of order one depth unit.
inline void randomize_patch_linear(VictimDescriptor& d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> w(0.0, 1.0 / std::sqrt(static_cast<double>(kPatchWeights)));
  d.weights.resize(kPatchWeights);
  for (double& v : d.weights) v = 4.0 * w(rng);
  d.bias = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
}

class Victim {
 public:
  virtual ~Victim() = default;
  /// Depth map with the same width and height as `image`.
  virtual DepthMap estimate(const RgbImage& image) = 0;
  /// True when estimate() may be called from several threads at once.
  virtual bool concurrent_safe() const = 0;
  virtual std::string name() const = 0;
};

class ConstantVictim final : public Victim {
 public:
  explicit ConstantVictim(double value) : value_(static_cast<float>(value)) {
    if (!(value >= 0.0) || !std::isfinite(value)) throw ConfigError("constant victim needs a non-negative value");
  }
  explicit ConstantVictim(DepthMap map) : map_(std::move(map)) { validate_depth(*map_, "constant victim map"); }

  DepthMap estimate(const RgbImage& image) override {
    if (map_) {
      require_same_extent(image, *map_, "constant victim");
      return *map_;
    }
    return make_depth(image.width(), image.height(), value_);
  }
  bool concurrent_safe() const override { return true; }
  std::string name() const override { return "constant"; }

 private:
  float value_ = 0.0f;
  std::optional<DepthMap> map_;
};

/// depth = d_obj + gamma (d_back - d_obj) clamp(L, 0, 1) on object pixels,
/// d_back elsewhere. L is Rec. 709 luminance of the capture; object pixels are
/// those where the object and background depths differ.
class BrightnessBiasedVictim final : public Victim {
 public:
  BrightnessBiasedVictim(DepthMap d_obj, DepthMap d_back, double gamma)
      : d_obj_(std::move(d_obj)), d_back_(std::move(d_back)), gamma_(gamma) {
    require_same_extent(d_obj_, d_back_, "brightness_biased victim");
    if (!std::isfinite(gamma)) throw ConfigError("brightness_biased gamma must be finite");
  }

  DepthMap estimate(const RgbImage& image) override {
    require_same_extent(image, d_obj_, "brightness_biased victim");
    DepthMap out = d_back_;
    for (std::size_t p = 0; p < out.pixel_count(); ++p) {
      const double obj = d_obj_[p];
      const double back = d_back_[p];
      if (obj == back) continue;
      const double l = std::clamp(luminance(image[3 * p], image[3 * p + 1], image[3 * p + 2]), 0.0, 1.0);
      out[p] = static_cast<float>(std::max(0.0, obj + gamma_ * (back - obj) * l));
    }
    return out;
  }
  bool concurrent_safe() const override { return true; }
  std::string name() const override { return "brightness_biased"; }

 private:
  DepthMap d_obj_;
  DepthMap d_back_;
  double gamma_;
};

/// depth = d_back + mask relu(w . patch + b) over a 5x5 RGB neighbourhood
/// (edge pixels replicated). Not monotone in brightness.
class PatchLinearVictim final : public Victim {
 public:
  PatchLinearVictim(DepthMap d_obj, DepthMap d_back, std::vector<double> weights, double bias)
      : d_back_(std::move(d_back)), weights_(std::move(weights)), bias_(bias) {
    require_same_extent(d_obj, d_back_, "patch_linear victim");
    if (weights_.size() != static_cast<std::size_t>(kPatchWeights)) {
      throw ConfigError("patch_linear victim needs " + std::to_string(kPatchWeights) + " weights");
    }
    mask_.resize(d_obj.pixel_count());
    for (std::size_t p = 0; p < mask_.size(); ++p) mask_[p] = d_obj[p] != d_back_[p];
  }

  DepthMap estimate(const RgbImage& image) override {
    require_same_extent(image, d_back_, "patch_linear victim");
    const int w = image.width();
    const int h = image.height();
    const int r = kPatchSize / 2;
    DepthMap out = d_back_;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        if (!mask_[p]) continue;
        double acc = bias_;
        std::size_t k = 0;
        for (int dy = -r; dy <= r; ++dy) {
          const int yy = std::clamp(y + dy, 0, h - 1);
          for (int dx = -r; dx <= r; ++dx) {
            const int xx = std::clamp(x + dx, 0, w - 1);
            for (int c = 0; c < 3; ++c) acc += weights_[k++] * image.at(xx, yy, c);
          }
        }
        out[p] = static_cast<float>(d_back_[p] + std::max(0.0, acc));
      }
    }
    return out;
  }
  bool concurrent_safe() const override { return true; }
  std::string name() const override { return "patch_linear"; }

 private:
  DepthMap d_back_;
  std::vector<bool> mask_;
  std::vector<double> weights_;
  double bias_;
};

/// Child process speaking the version-1 JSON-lines protocol. One request in
/// flight at a time; estimate() serializes callers.
class ExternalVictim final : public Victim {
 public:
  explicit ExternalVictim(std::vector<std::string> command, double timeout_s = 60.0, bool serial_only = false)
      : command_(std::move(command)),
        timeout_(std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000.0))),
        serial_only_(serial_only),
        proc_(command_) {
    if (!(timeout_s > 0.0)) throw ConfigError("external victim timeout must be positive");
    caps_ = handshake();
  }

  const protocol::Capabilities& capabilities() const { return caps_; }

  DepthMap estimate(const RgbImage& image) override {
    std::lock_guard lock(mu_);
    if (image.width() > caps_.max_width || image.height() > caps_.max_height) {
      throw VictimFailure("image " + std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                          " exceeds the adapter limit " + std::to_string(caps_.max_width) + "x" +
                          std::to_string(caps_.max_height));
    }
    proc_.write_line(protocol::encode_estimate_request(image));
    return protocol::decode_estimate_reply(proc_.read_line(timeout_), image.width(), image.height());
  }
  bool concurrent_safe() const override { return false; }
  bool serial_only() const { return serial_only_; }
  std::string name() const override { return "external:" + caps_.model_name; }

 private:
  protocol::Capabilities handshake() {
    proc_.write_line(protocol::encode_hello());
    return protocol::decode_hello_reply(proc_.read_line(timeout_));
  }

  std::vector<std::string> command_;
  std::chrono::milliseconds timeout_;
  bool serial_only_;
  LineProcess proc_;
  protocol::Capabilities caps_;
  std::mutex mu_;
};

/// Spawns the adapter, performs the hello exchange and returns what it
/// declared. The process is shut down again before returning.
inline protocol::Capabilities external_handshake(const std::vector<std::string>& command, double timeout_s = 60.0) {
  ExternalVictim v(command, timeout_s);
  return v.capabilities();
}

/// Builds the victim a descriptor names. Built-in analytic victims take their
/// object and background depths from the scene.
inline std::unique_ptr<Victim> make_victim(const VictimDescriptor& d, const SceneModel& scene) {
  switch (d.kind) {
    case VictimKind::kConstant:
      if (d.constant_map) return std::make_unique<ConstantVictim>(*d.constant_map);
      return std::make_unique<ConstantVictim>(d.constant_value);
    case VictimKind::kBrightnessBiased:
      return std::make_unique<BrightnessBiasedVictim>(scene.depth_orig, scene.depth_back, d.gamma);
    case VictimKind::kPatchLinear:
      return std::make_unique<PatchLinearVictim>(scene.depth_orig, scene.depth_back, d.weights, d.bias);
    case VictimKind::kExternal:
      return std::make_unique<ExternalVictim>(d.command, d.timeout_s, d.serial_only);
  }
  throw ConfigError("unhandled victim kind");
}

}  // namespace pitl

#endif  // PITL_VICTIM_HPP_
