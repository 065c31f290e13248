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

#ifndef PITL_METRICS_HPP_
#define PITL_METRICS_HPP_

#include <cmath>
#include <string>

#include "pitl/errors.hpp"
#include "pitl/image.hpp"
#include "pitl/scene.hpp"

namespace pitl {

/// Attack objective: sum over R of |d_est - d_tgt|.
inline double objective(const DepthMap& d_est, const DepthMap& d_tgt, const RegionMask& region) {
  require_same_extent(d_est, d_tgt, "objective");
  if (!region.matches(d_est)) throw ShapeError("objective: region does not match depth maps");
  double sum = 0.0;
  for (std::size_t p = 0; p < d_est.pixel_count(); ++p) {
    if (region.contains(p)) {
      sum += std::abs(static_cast<double>(d_est[p]) - static_cast<double>(d_tgt[p]));
    }
  }
  return sum;
}

/// Presence rate: mean over R of |d_est - d_back| / |d_orig - d_back|.
/// 1 when the object is estimated where it is, 0 when it reads as
/// background. Not clamped; overshoot past the object gives values above 1.
inline double presence_rate(const DepthMap& d_est, const DepthMap& d_orig, const DepthMap& d_back,
                            const RegionMask& region) {
  require_same_extent(d_est, d_orig, "presence_rate");
  require_same_extent(d_est, d_back, "presence_rate");
  if (!region.matches(d_est)) throw ShapeError("presence_rate: region does not match depth maps");
  double sum = 0.0;
  for (std::size_t p = 0; p < d_est.pixel_count(); ++p) {
    if (!region.contains(p)) continue;
    const double back = d_back[p];
    const double denom = std::abs(static_cast<double>(d_orig[p]) - back);
    if (denom == 0.0) {
      throw DegenerateScene("presence_rate: object and background depth coincide at pixel " + std::to_string(p));
    }
    sum += std::abs(static_cast<double>(d_est[p]) - back) / denom;
  }
  return sum / static_cast<double>(region.member_count());
}

}  // namespace pitl

#endif  // PITL_METRICS_HPP_
