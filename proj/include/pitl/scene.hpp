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

// Simulated projector/camera loop.
//
// A perturbation pattern assigns an RGB projector intensity to each cell of a
// grid laid over the attack region. The captured image is
//
//   clamp(reflectance * clamp(ambient + light, 0, 1) + noise, 0, 1)
//
// so projected light can only brighten a surface, and the surface colour
// always modulates what the camera sees. Projector and camera share pixel
// coordinates.

#ifndef PITL_SCENE_HPP_
#define PITL_SCENE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pitl/errors.hpp"
#include "pitl/image.hpp"

namespace pitl {

/// Attack region R and its partition into projection cells.
class RegionMask {
 public:
  RegionMask() = default;

  /// Splits the bounding box of the member pixels into rows x cols equal
  /// cells. Every member pixel lands in exactly one cell.
  static RegionMask grid(int width, int height, std::span<const std::uint8_t> member, int rows, int cols) {
    RegionMask r = from_members(width, height, member);
    const int bw = r.bbox_x1_ - r.bbox_x0_;
    const int bh = r.bbox_y1_ - r.bbox_y0_;
    if (rows < 1 || cols < 1 || rows > bh || cols > bw) {
      throw InvalidArgument("cell grid " + std::to_string(rows) + "x" + std::to_string(cols) +
                            " does not fit the region's " + std::to_string(bh) + "x" + std::to_string(bw) +
                            " bounding box");
    }
    r.rows_ = rows;
    r.cols_ = cols;
    r.cells_ = static_cast<std::size_t>(rows) * cols;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * width + x;
        if (!r.member_[p]) continue;
        const int cr = (y - r.bbox_y0_) * rows / bh;
        const int cc = (x - r.bbox_x0_) * cols / bw;
        r.cell_of_[p] = cr * cols + cc;
      }
    }
    return r;
  }

  /// One cell per member pixel (raster order), so the pattern has 3|R|
  /// variables. Reported as a 1 x |R| grid.
  static RegionMask per_pixel(int width, int height, std::span<const std::uint8_t> member) {
    RegionMask r = from_members(width, height, member);
    int next = 0;
    for (std::size_t p = 0; p < r.member_.size(); ++p) {
      if (r.member_[p]) r.cell_of_[p] = next++;
    }
    r.rows_ = 1;
    r.cols_ = next;
    r.cells_ = static_cast<std::size_t>(next);
    return r;
  }

  /// Member set from a grey image: nonzero = member.
  static std::vector<std::uint8_t> members_from(const Image<double>& grey) {
    if (grey.channels() != 1) throw ShapeError("region mask must be single channel");
    std::vector<std::uint8_t> m(grey.pixel_count());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = grey[i] != 0.0 ? 1 : 0;
    return m;
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t cell_count() const { return cells_; }
  std::size_t member_count() const { return count_; }
  /// Decision-vector length for an RGB pattern over this region.
  std::size_t dimension() const { return 3 * cells_; }

  bool contains(int x, int y) const { return member_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  bool contains(std::size_t pixel) const { return member_[pixel] != 0; }
  /// Cell index of a pixel, or -1 outside R.
  int cell_of(std::size_t pixel) const { return cell_of_[pixel]; }
  std::span<const std::uint8_t> members() const { return member_; }

  template <typename T>
  bool matches(const Image<T>& img) const {
    return img.width() == width_ && img.height() == height_;
  }

  friend bool operator==(const RegionMask&, const RegionMask&) = default;

 private:
  static RegionMask from_members(int width, int height, std::span<const std::uint8_t> member) {
    if (width <= 0 || height <= 0) throw ShapeError("region must have positive size");
    if (member.size() != static_cast<std::size_t>(width) * height) throw ShapeError("region mask size mismatch");
    RegionMask r;
    r.width_ = width;
    r.height_ = height;
    r.member_.assign(member.begin(), member.end());
    r.cell_of_.assign(member.size(), -1);
    r.bbox_x0_ = width;
    r.bbox_y0_ = height;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        auto& m = r.member_[static_cast<std::size_t>(y) * width + x];
        m = m ? 1 : 0;
        if (!m) continue;
        ++r.count_;
        r.bbox_x0_ = std::min(r.bbox_x0_, x);
        r.bbox_y0_ = std::min(r.bbox_y0_, y);
        r.bbox_x1_ = std::max(r.bbox_x1_, x + 1);
        r.bbox_y1_ = std::max(r.bbox_y1_, y + 1);
      }
    }
    if (r.count_ == 0) throw InvalidArgument("region has no member pixels");
    return r;
  }

  int width_ = 0;
  int height_ = 0;
  int rows_ = 0;
  int cols_ = 0;
  std::size_t cells_ = 0;
  std::size_t count_ = 0;
  int bbox_x0_ = 0, bbox_y0_ = 0, bbox_x1_ = 0, bbox_y1_ = 0;
  std::vector<std::uint8_t> member_;
  std::vector<int> cell_of_;
};

/// Per-cell RGB projector intensities, cell-major: values[3 * cell + channel].
/// Optimizer-space values may leave [0,1]; projection clamps them.
struct PerturbationPattern {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  static PerturbationPattern filled(const RegionMask& region, double v) {
    return {region.rows(), region.cols(), std::vector<double>(region.dimension(), v)};
  }
  static PerturbationPattern from_vector(const RegionMask& region, std::span<const double> x) {
    if (x.size() != region.dimension()) throw ShapeError("pattern vector has wrong length");
    return {region.rows(), region.cols(), std::vector<double>(x.begin(), x.end())};
  }

  double& cell(int r, int c, int ch) { return values[3 * (static_cast<std::size_t>(r) * cols + c) + ch]; }
  double cell(int r, int c, int ch) const { return values[3 * (static_cast<std::size_t>(r) * cols + c) + ch]; }

  /// Copy with every value clamped to [0,1].
  PerturbationPattern clamped() const {
    PerturbationPattern p = *this;
    for (double& v : p.values) v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
    return p;
  }
};

struct SceneModel {
  RgbImage reflectance;
  RgbImage ambient;  // per-pixel, per-channel
  DepthMap depth_orig;
  DepthMap depth_back;
  RegionMask region;
  /// Region for the presence rate; the attack region when empty.
  std::optional<RegionMask> eval_region;
  double noise_stddev = 0.01;

  int width() const { return reflectance.width(); }
  int height() const { return reflectance.height(); }
  const RegionMask& presence_region() const { return eval_region ? *eval_region : region; }
};

inline RgbImage uniform_ambient(int width, int height, double level) { return make_rgb(width, height, level); }

/// Checks shapes, value ranges and the presence-rate denominators.
inline void validate_scene(const SceneModel& s) {
  const int w = s.width();
  const int h = s.height();
  if (w <= 0 || h <= 0 || s.reflectance.channels() != 3) throw ShapeError("reflectance must be a non-empty RGB image");
  if (!s.ambient.same_shape(s.reflectance)) throw ShapeError("ambient must match reflectance");
  require_same_extent(s.depth_orig, s.reflectance, "depth_orig");
  require_same_extent(s.depth_back, s.reflectance, "depth_back");
  validate_depth(s.depth_orig, "depth_orig");
  validate_depth(s.depth_back, "depth_back");
  if (!s.region.matches(s.reflectance)) throw ShapeError("region mask does not match scene size");
  if (s.eval_region && !s.eval_region->matches(s.reflectance)) {
    throw ShapeError("evaluation region does not match scene size");
  }
  for (double v : s.reflectance.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("reflectance must lie in [0,1]");
  }
  for (double v : s.ambient.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("ambient must lie in [0,1]");
  }
  if (!(s.noise_stddev >= 0.0) || !std::isfinite(s.noise_stddev)) {
    throw InvalidArgument("noise_stddev must be non-negative");
  }
  const RegionMask& er = s.presence_region();
  std::size_t degenerate = 0;
  for (std::size_t p = 0; p < s.depth_orig.pixel_count(); ++p) {
    if (er.contains(p) && s.depth_orig[p] == s.depth_back[p]) ++degenerate;
  }
  if (degenerate > 0) {
    throw DegenerateScene(std::to_string(degenerate) +
                          " region pixel(s) have equal object and background depth");
  }
}

/// Maps cells onto image pixels: clamp(cell, 0, 1) inside R, 0 elsewhere.
inline RgbImage pattern_to_light(const RegionMask& region, const PerturbationPattern& pattern) {
  if (pattern.values.size() != region.dimension() || pattern.rows != region.rows() ||
      pattern.cols != region.cols()) {
    throw ShapeError("pattern does not match region cell grid");
  }
  RgbImage light = make_rgb(region.width(), region.height());
  for (std::size_t p = 0; p < light.pixel_count(); ++p) {
    const int cell = region.cell_of(p);
    if (cell < 0) continue;
    for (int ch = 0; ch < 3; ++ch) {
      const double v = pattern.values[3 * static_cast<std::size_t>(cell) + ch];
      light[3 * p + ch] = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
    }
  }
  return light;
}

/// reflectance * clamp(ambient + light, 0, 1), before noise.
inline RgbImage composite_noiseless(const SceneModel& scene, const RgbImage& light) {
  if (!light.same_shape(scene.reflectance)) throw ShapeError("light field does not match scene");
  RgbImage out = make_rgb(scene.width(), scene.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double l = std::isnan(light[i]) ? 0.0 : light[i];
    out[i] = scene.reflectance[i] * std::clamp(scene.ambient[i] + l, 0.0, 1.0);
  }
  return out;
}

/// Adds i.i.d. N(0, stddev^2) per channel and clamps to [0,1].
template <typename Engine>
void add_sensor_noise(RgbImage& img, double stddev, Engine& rng) {
  if (stddev > 0.0) {
    std::normal_distribution<double> noise(0.0, stddev);
    for (double& v : img.values()) v += noise(rng);
  }
  for (double& v : img.values()) v = std::clamp(v, 0.0, 1.0);
}

template <typename Engine>
RgbImage compose_light(const SceneModel& scene, const RgbImage& light, Engine& rng) {
  RgbImage out = composite_noiseless(scene, light);
  add_sensor_noise(out, scene.noise_stddev, rng);
  return out;
}

/// Projects `pattern` onto the scene and returns the simulated capture.
template <typename Engine>
RgbImage compose_projection(const SceneModel& scene, const PerturbationPattern& pattern, Engine& rng) {
  return compose_light(scene, pattern_to_light(scene.region, pattern), rng);
}

/// The capture with the projector dark and no sensor noise.
inline RgbImage benign_capture(const SceneModel& scene) {
  return composite_noiseless(scene, make_rgb(scene.width(), scene.height()));
}

/// Rec. 709 luminance.
inline double luminance(double r, double g, double b) { return 0.2126 * r + 0.7152 * g + 0.0722 * b; }

}  // namespace pitl

#endif  // PITL_SCENE_HPP_
