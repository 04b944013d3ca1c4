/*
 * Copyright 2026 The rcbev Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <vector>

#include <Eigen/Core>

#include "rcbev/bev.hpp"
#include "rcbev/geometry.hpp"

namespace rcbev {

// Backbone output on a strided pixel grid. `stride` is raw-image pixels per
// feature cell.
struct ImageFeatureMap {
  int channels = 0;
  int height = 0;  // H'
  int width = 0;   // W'
  int stride = 1;
  std::vector<float> data;  // [channels][height][width]

  float at(int c, int h, int w) const {
    return data[(static_cast<std::size_t>(c) * height + h) * width + w];
  }
};

// Per-pixel categorical distribution over depth bins.
struct DepthDistribution {
  int bins = 0;    // D
  int height = 0;  // H'
  int width = 0;   // W'
  std::vector<float> probs;        // [bins][height][width]
  std::vector<double> bin_depths;  // ascending, meters

  float prob(int d, int h, int w) const {
    return probs[(static_cast<std::size_t>(d) * height + h) * width + w];
  }

  // Throws std::invalid_argument on negative probs, per-pixel sums off by
  // more than 1e-5, or non-increasing bin depths.
  void validate() const;
};

// Frustum of depth-weighted pseudo points. Points are ordered pixel-major
// (h, then w) with the depth bins innermost.
struct LiftedPoints {
  std::vector<Eigen::Vector3d> positions;  // ego frame
  std::vector<float> features;             // [count][channels]
  int channels = 0;

  std::size_t count() const { return positions.size(); }
};

// Lift step: every (pixel, depth bin) pair becomes one pseudo point at the
// unprojected pixel center carrying prob-weighted pixel features. Output size
// is exactly bins * height * width. Throws std::invalid_argument if the
// feature and depth maps disagree on height or width.
LiftedPoints lift(const ImageFeatureMap& features, const DepthDistribution& depth,
                  const CameraModel& camera);

// Splat step: sums each pseudo point's feature into the BEV cell containing
// its (x, y); z is discarded and out-of-grid points are dropped. Accumulation
// follows input order, so identical inputs produce bit-identical maps.
BevFeatureMap splat(const LiftedPoints& points, const GridConfig& grid);

}  // namespace rcbev
