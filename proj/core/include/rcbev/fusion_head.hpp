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

#include <cstdint>
#include <span>
#include <vector>

#include "rcbev/bev.hpp"
#include "rcbev/geometry.hpp"

namespace rcbev {

// Channel-concatenates two BEV maps over the same grid, camera channels
// first. Throws std::invalid_argument naming the differing dimension.
BevFeatureMap concat_bev(const BevFeatureMap& camera_map, const BevFeatureMap& radar_map);

// Regression map channel layout.
enum RegChannel : int {
  kRegDx = 0,    // sub-cell center offset along x, in cells
  kRegDy = 1,    // sub-cell center offset along y, in cells
  kRegZ = 2,     // center height, meters
  kRegLogL = 3,
  kRegLogW = 4,
  kRegLogH = 5,
  kRegSinYaw = 6,
  kRegCosYaw = 7,
  kRegVx = 8,
  kRegVy = 9,
};
inline constexpr int kNumRegChannels = 10;

// Dense training targets for the center-heatmap head. The heatmap value at
// each annotated center cell is exactly 1; regression targets are written at
// center cells only and flagged by `mask`. `attributes` carries the per-object
// class attribute (-1 where none).
struct TargetMaps {
  int num_classes = 0;
  GridConfig grid;
  std::vector<float> heatmaps;      // [num_classes][rows][cols]
  std::vector<double> regressions;  // [kNumRegChannels][rows][cols]
  std::vector<std::uint8_t> mask;   // [rows][cols]
  std::vector<std::int32_t> attributes;  // [rows][cols]
};

struct HeatmapParams {
  double min_overlap = 0.1;  // overlap target of the radius rule
  int min_radius = 2;        // cells
};

// Gaussian splat radius (cells) that keeps the overlap rule satisfied for a
// box footprint of the given size in cells.
double gaussian_radius(double length_cells, double width_cells, double min_overlap);

// Renders per-class center heatmaps (combined by elementwise max) and
// regression targets at center cells. Boxes must lie inside the grid; callers
// pre-filter.
TargetMaps render_targets(std::span<const Box3D> boxes, const GridConfig& grid, int num_classes,
                          const HeatmapParams& params = {});

// Penalty-reduced focal loss over heatmaps, alpha=2 on the probability term
// and beta=4 on the (1-target) penalty, normalized by the number of unit
// peaks (minimum 1). `pred` must be strictly inside (0, 1); callers clamp at
// 1e-6. Throws std::invalid_argument on shape mismatch.
double gaussian_focal_loss(std::span<const float> pred, std::span<const float> target);

// Mean absolute error over masked cells and channels; zero if the mask is
// empty.
double l1_regression_loss(std::span<const double> pred, std::span<const double> target,
                          std::span<const std::uint8_t> mask, int channels);

struct Detection {
  Box3D box;  // score set
  int row = 0;
  int col = 0;
};

struct DecodeParams {
  double score_threshold = 0.3;
  int max_detections = 100;
  int nms_kernel = 3;  // odd window for local-maximum suppression
};

// Extracts boxes from head outputs: per-class local maxima above the score
// threshold (ties broken toward the lower row/col index), top
// `max_detections` by score overall. `attributes` may be empty.
std::vector<Detection> decode_detections(std::span<const float> heatmaps, int num_classes,
                                         std::span<const double> regressions,
                                         std::span<const std::int32_t> attributes,
                                         const GridConfig& grid, const DecodeParams& params);

}  // namespace rcbev
