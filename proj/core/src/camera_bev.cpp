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

#include "rcbev/camera_bev.hpp"

#include <cmath>
#include <stdexcept>

namespace rcbev {

void DepthDistribution::validate() const {
  if (static_cast<int>(bin_depths.size()) != bins) {
    throw std::invalid_argument("DepthDistribution: bin_depths size does not match bins");
  }
  for (int d = 1; d < bins; ++d) {
    if (!(bin_depths[d] > bin_depths[d - 1])) {
      throw std::invalid_argument("DepthDistribution: bin depths must be strictly increasing");
    }
  }
  if (probs.size() != static_cast<std::size_t>(bins) * height * width) {
    throw std::invalid_argument("DepthDistribution: probs size does not match dims");
  }
  for (int h = 0; h < height; ++h) {
    for (int w = 0; w < width; ++w) {
      double sum = 0.0;
      for (int d = 0; d < bins; ++d) {
        const float p = prob(d, h, w);
        if (p < 0.0f) throw std::invalid_argument("DepthDistribution: negative probability");
        sum += p;
      }
      if (!(std::abs(sum - 1.0) <= 1e-5)) {  // NaN-safe
        throw std::invalid_argument("DepthDistribution: per-pixel probabilities must sum to 1");
      }
    }
  }
}

LiftedPoints lift(const ImageFeatureMap& features, const DepthDistribution& depth,
                  const CameraModel& camera) {
  if (features.height != depth.height || features.width != depth.width) {
    throw std::invalid_argument("lift: feature and depth maps disagree on H' or W'");
  }

  LiftedPoints out;
  out.channels = features.channels;
  const std::size_t count =
      static_cast<std::size_t>(depth.bins) * features.height * features.width;
  out.positions.reserve(count);
  out.features.resize(count * features.channels);

  // Precompute the camera->ego transform once; the per-bin positions along a
  // pixel ray are scalar multiples of the same unit-depth camera point.
  const Pose cam_to_ego = camera.extrinsics.inverse();

  std::size_t index = 0;
  for (int h = 0; h < features.height; ++h) {
    for (int w = 0; w < features.width; ++w) {
      // Pixel centers, not corners.
      const double u = (w + 0.5) * features.stride;
      const double v = (h + 0.5) * features.stride;
      const double ray_x = (u - camera.cx()) / camera.fx();
      const double ray_y = (v - camera.cy()) / camera.fy();
      for (int d = 0; d < depth.bins; ++d) {
        const double z = depth.bin_depths[d];
        out.positions.push_back(cam_to_ego * Eigen::Vector3d(ray_x * z, ray_y * z, z));
        const float weight = depth.prob(d, h, w);
        float* dst = out.features.data() + index * features.channels;
        for (int c = 0; c < features.channels; ++c) {
          dst[c] = weight * features.at(c, h, w);
        }
        ++index;
      }
    }
  }
  return out;
}

BevFeatureMap splat(const LiftedPoints& points, const GridConfig& grid) {
  BevFeatureMap map = BevFeatureMap::zeros(points.channels, grid);
  const int rows = grid.rows();
  const int cols = grid.cols();
  for (std::size_t i = 0; i < points.count(); ++i) {
    const auto cell = grid.cell_of(points.positions[i].x(), points.positions[i].y());
    if (!cell) continue;
    const auto [row, col] = *cell;
    const float* src = points.features.data() + i * points.channels;
    for (int c = 0; c < points.channels; ++c) {
      map.data[(static_cast<std::size_t>(c) * rows + row) * cols + col] += src[c];
    }
  }
  return map;
}

}  // namespace rcbev
