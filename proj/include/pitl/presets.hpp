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

// Synthetic indoor scenes: a piece of furniture in front of a wall and floor.
// Everything is a deterministic function of (preset, size, seed).

#ifndef PITL_PRESETS_HPP_
#define PITL_PRESETS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pitl/errors.hpp"
#include "pitl/image.hpp"
#include "pitl/scene.hpp"
#include "pitl/victim.hpp"

namespace pitl::presets {

inline constexpr int kMinSize = 16;

struct SyntheticScene {
  RgbImage reflectance;
  DepthMap depth_orig;
  DepthMap depth_back;
  Image<double> region;  // 1 inside R, 0 elsewhere
  VictimDescriptor patch_linear;
};

inline const std::vector<std::string>& names() {
  static const std::vector<std::string> kNames{"locker", "stove", "sofa-like"};
  return kNames;
}

namespace detail {

struct Box {
  double x0, y0, x1, y1;  // fractions of the image size
  bool contains(double u, double v) const { return u >= x0 && u < x1 && v >= y0 && v < y1; }
};

// Wall at constant depth, floor below the horizon getting nearer toward the
// bottom edge.
inline void background(SyntheticScene& s, int size, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(-0.03, 0.03);
  const double horizon = 0.7;
  for (int y = 0; y < size; ++y) {
    const double v = (y + 0.5) / size;
    for (int x = 0; x < size; ++x) {
      float d = 4.0f;
      double base = 0.55;  // wall paint
      if (v > horizon) {
        d = static_cast<float>(4.0 - 1.5 * (v - horizon) / (1.0 - horizon));
        base = 0.35;  // floor
      }
      s.depth_back.at(x, y) = d;
      for (int c = 0; c < 3; ++c) s.reflectance.at(x, y, c) = std::clamp(base + jitter(rng), 0.0, 1.0);
    }
  }
}

inline void paint_object(SyntheticScene& s, int size, const Box& body, double depth, double tilt,
                         const double rgb[3], double texture, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(-texture, texture);
  for (int y = 0; y < size; ++y) {
    const double v = (y + 0.5) / size;
    for (int x = 0; x < size; ++x) {
      const double u = (x + 0.5) / size;
      if (!body.contains(u, v)) continue;
      s.depth_orig.at(x, y) = static_cast<float>(depth + tilt * (u - 0.5));
      const double j = jitter(rng);
      for (int c = 0; c < 3; ++c) s.reflectance.at(x, y, c) = std::clamp(rgb[c] + j, 0.0, 1.0);
    }
  }
}

inline void mark_region(SyntheticScene& s, int size, const Box& r) {
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      if (r.contains((x + 0.5) / size, (y + 0.5) / size)) s.region.at(x, y) = 1.0;
    }
  }
}

}  // namespace detail

/// Builds a preset scene of size x size pixels.
inline SyntheticScene make_scene(const std::string& preset, int size, std::uint64_t seed) {
  if (size < kMinSize || size > 4096) {
    throw InvalidArgument("scene size must be in [" + std::to_string(kMinSize) + ", 4096]");
  }
  if (std::find(names().begin(), names().end(), preset) == names().end()) {
    throw InvalidArgument("unknown preset '" + preset + "'");
  }
  std::mt19937_64 rng(seed);
  SyntheticScene s;
  s.reflectance = make_rgb(size, size);
  s.depth_back = make_depth(size, size);
  s.region = Image<double>(size, size, 1, 0.0);
  detail::background(s, size, rng);
  s.depth_orig = s.depth_back;

  std::uniform_real_distribution<double> tilt(-0.2, 0.2);
  if (preset == "locker") {
    // Tall light-grey steel locker; R covers the door.
    const double steel[3] = {0.95, 0.95, 0.94};
    detail::paint_object(s, size, {0.25, 0.12, 0.75, 0.92}, 2.0, tilt(rng), steel, 0.02, rng);
    detail::mark_region(s, size, {0.31, 0.2, 0.69, 0.82});
  } else if (preset == "stove") {
    // Low white enamel stove; R is the oven door below the control strip.
    const double enamel[3] = {0.96, 0.96, 0.95};
    detail::paint_object(s, size, {0.2, 0.45, 0.8, 0.95}, 2.4, tilt(rng), enamel, 0.015, rng);
    const double knobs[3] = {0.15, 0.15, 0.15};
    detail::paint_object(s, size, {0.2, 0.45, 0.8, 0.52}, 2.4, 0.0, knobs, 0.01, rng);
    detail::mark_region(s, size, {0.26, 0.56, 0.74, 0.9});
  } else {
    // Wide beige sofa: back rest behind a nearer seat; R spans the back rest.
    const double fabric[3] = {0.9, 0.85, 0.75};
    detail::paint_object(s, size, {0.1, 0.35, 0.9, 0.65}, 2.6, tilt(rng), fabric, 0.03, rng);
    detail::paint_object(s, size, {0.1, 0.65, 0.9, 0.85}, 2.2, 0.0, fabric, 0.03, rng);
    detail::mark_region(s, size, {0.15, 0.4, 0.85, 0.62});
  }

  s.patch_linear.kind = VictimKind::kPatchLinear;
  randomize_patch_linear(s.patch_linear, seed ^ 0x70a7c41eull);
  return s;
}

}  // namespace pitl::presets

#endif  // PITL_PRESETS_HPP_
