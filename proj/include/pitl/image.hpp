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

#ifndef PITL_IMAGE_HPP_
#define PITL_IMAGE_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pitl/errors.hpp"

namespace pitl {

/// Row-major, channel-interleaved pixel buffer.
template <typename T>
class Image {
 public:
  using value_type = T;

  Image() = default;
  Image(int width, int height, int channels, T fill = T{})
      : width_(width), height_(height), channels_(channels) {
    if (width < 0 || height < 0 || channels <= 0) {
      throw ShapeError("image dimensions must be non-negative with at least one channel");
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  bool same_shape(const Image& o) const {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }
  template <typename U>
  bool same_extent(const Image<U>& o) const {
    return width_ == o.width() && height_ == o.height();
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

/// Three-channel linear RGB in [0,1].
using RgbImage = Image<double>;

/// Single-channel depth, stored at float precision so that it survives PFM and
/// the victim wire protocol without loss.
using DepthMap = Image<float>;

inline DepthMap make_depth(int width, int height, float fill = 0.0f) {
  return DepthMap(width, height, 1, fill);
}

inline RgbImage make_rgb(int width, int height, double fill = 0.0) {
  return RgbImage(width, height, 3, fill);
}

/// Throws unless every value is finite and non-negative.
inline void validate_depth(const DepthMap& d, const std::string& what) {
  if (d.channels() != 1) throw ShapeError(what + ": depth map must have one channel");
  for (float v : d.values()) {
    if (!std::isfinite(v) || v < 0.0f) {
      throw InvalidArgument(what + ": depth values must be finite and non-negative");
    }
  }
}

template <typename A, typename B>
void require_same_extent(const Image<A>& a, const Image<B>& b, const std::string& what) {
  if (!a.same_extent(b)) {
    throw ShapeError(what + ": size mismatch (" + std::to_string(a.width()) + "x" +
                     std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                     std::to_string(b.height()) + ")");
  }
}

}  // namespace pitl

#endif  // PITL_IMAGE_HPP_
