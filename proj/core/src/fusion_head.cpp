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

#include "rcbev/fusion_head.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rcbev {

BevFeatureMap concat_bev(const BevFeatureMap& camera_map, const BevFeatureMap& radar_map) {
  const auto check = [](auto lhs, auto rhs, const char* what) {
    if (lhs != rhs) {
      throw std::invalid_argument(std::string("concat_bev: ") + what + " mismatch: " +
                                  std::to_string(lhs) + " vs " + std::to_string(rhs));
    }
  };
  check(camera_map.grid.rows(), radar_map.grid.rows(), "rows");
  check(camera_map.grid.cols(), radar_map.grid.cols(), "cols");
  check(camera_map.grid.x_min, radar_map.grid.x_min, "x_min");
  check(camera_map.grid.y_min, radar_map.grid.y_min, "y_min");
  check(camera_map.grid.step, radar_map.grid.step, "step");

  BevFeatureMap out;
  out.channels = camera_map.channels + radar_map.channels;
  out.grid = camera_map.grid;
  out.data.reserve(camera_map.data.size() + radar_map.data.size());
  out.data.insert(out.data.end(), camera_map.data.begin(), camera_map.data.end());
  out.data.insert(out.data.end(), radar_map.data.begin(), radar_map.data.end());
  return out;
}

double gaussian_radius(double length_cells, double width_cells, double min_overlap) {
  const double h = length_cells;
  const double w = width_cells;

  const double a1 = 1.0;
  const double b1 = h + w;
  const double c1 = w * h * (1.0 - min_overlap) / (1.0 + min_overlap);
  const double r1 = (b1 + std::sqrt(b1 * b1 - 4.0 * a1 * c1)) / 2.0;

  const double a2 = 4.0;
  const double b2 = 2.0 * (h + w);
  const double c2 = (1.0 - min_overlap) * w * h;
  const double r2 = (b2 + std::sqrt(b2 * b2 - 4.0 * a2 * c2)) / 2.0;

  const double a3 = 4.0 * min_overlap;
  const double b3 = -2.0 * min_overlap * (h + w);
  const double c3 = (min_overlap - 1.0) * w * h;
  const double r3 = (b3 + std::sqrt(b3 * b3 - 4.0 * a3 * c3)) / 2.0;

  return std::min({r1, r2, r3});
}

namespace {

void draw_gaussian(std::vector<float>& heatmap, int rows, int cols, std::size_t class_offset,
                   int center_row, int center_col, int radius) {
  const double diameter = 2.0 * radius + 1.0;
  const double sigma = diameter / 6.0;
  const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
  for (int dr = -radius; dr <= radius; ++dr) {
    const int row = center_row + dr;
    if (row < 0 || row >= rows) continue;
    for (int dc = -radius; dc <= radius; ++dc) {
      const int col = center_col + dc;
      if (col < 0 || col >= cols) continue;
      const float value =
          static_cast<float>(std::exp(-(dr * dr + dc * dc) * inv_two_sigma_sq));
      float& cell = heatmap[class_offset + static_cast<std::size_t>(row) * cols + col];
      cell = std::max(cell, value);
    }
  }
}

}  // namespace

TargetMaps render_targets(std::span<const Box3D> boxes, const GridConfig& grid, int num_classes,
                          const HeatmapParams& params) {
  const int rows = grid.rows();
  const int cols = grid.cols();
  const std::size_t cells = static_cast<std::size_t>(rows) * cols;

  TargetMaps maps;
  maps.num_classes = num_classes;
  maps.grid = grid;
  maps.heatmaps.assign(static_cast<std::size_t>(num_classes) * cells, 0.0f);
  maps.regressions.assign(static_cast<std::size_t>(kNumRegChannels) * cells, 0.0);
  maps.mask.assign(cells, 0);
  maps.attributes.assign(cells, -1);

  for (const Box3D& box : boxes) {
    const double row_f = (box.center.x() - grid.x_min) / grid.step;
    const double col_f = (box.center.y() - grid.y_min) / grid.step;
    if (!std::isfinite(row_f) || !std::isfinite(col_f)) continue;
    const int row = static_cast<int>(std::floor(row_f));
    const int col = static_cast<int>(std::floor(col_f));
    if (row < 0 || row >= rows || col < 0 || col >= cols) continue;

    const double radius_f =
        gaussian_radius(box.length() / grid.step, box.width() / grid.step, params.min_overlap);
    const int radius = std::max(params.min_radius, static_cast<int>(radius_f));

    const int class_index = static_cast<int>(box.class_id);
    draw_gaussian(maps.heatmaps, rows, cols, static_cast<std::size_t>(class_index) * cells, row,
                  col, radius);

    const std::size_t cell = static_cast<std::size_t>(row) * cols + col;
    maps.regressions[kRegDx * cells + cell] = row_f - row;
    maps.regressions[kRegDy * cells + cell] = col_f - col;
    maps.regressions[kRegZ * cells + cell] = box.center.z();
    maps.regressions[kRegLogL * cells + cell] = std::log(box.length());
    maps.regressions[kRegLogW * cells + cell] = std::log(box.width());
    maps.regressions[kRegLogH * cells + cell] = std::log(box.height());
    maps.regressions[kRegSinYaw * cells + cell] = std::sin(box.yaw);
    maps.regressions[kRegCosYaw * cells + cell] = std::cos(box.yaw);
    maps.regressions[kRegVx * cells + cell] = box.velocity.x();
    maps.regressions[kRegVy * cells + cell] = box.velocity.y();
    maps.mask[cell] = 1;
    maps.attributes[cell] = box.attribute_id;
  }
  return maps;
}

double gaussian_focal_loss(std::span<const float> pred, std::span<const float> target) {
  if (pred.size() != target.size()) {
    throw std::invalid_argument("gaussian_focal_loss: shape mismatch");
  }
  double loss = 0.0;
  std::int64_t peaks = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = pred[i];
    const double t = target[i];
    if (t == 1.0f) {
      ++peaks;
      loss -= (1.0 - p) * (1.0 - p) * std::log(p);
    } else {
      const double penalty = std::pow(1.0 - t, 4.0);
      loss -= penalty * p * p * std::log(1.0 - p);
    }
  }
  return loss / static_cast<double>(std::max<std::int64_t>(peaks, 1));
}

double l1_regression_loss(std::span<const double> pred, std::span<const double> target,
                          std::span<const std::uint8_t> mask, int channels) {
  if (pred.size() != target.size()) {
    throw std::invalid_argument("l1_regression_loss: shape mismatch");
  }
  const std::size_t cells = mask.size();
  double total = 0.0;
  std::int64_t active = 0;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    if (!mask[cell]) continue;
    ++active;
    for (int c = 0; c < channels; ++c) {
      total += std::abs(pred[c * cells + cell] - target[c * cells + cell]);
    }
  }
  if (active == 0) return 0.0;
  return total / (static_cast<double>(active) * channels);
}

namespace {

// Local maximum with deterministic tie-break: an equal-valued neighbor wins
// iff it has the lower (row, col) index.
bool is_local_max(std::span<const float> heat, std::size_t class_offset, int rows, int cols,
                  int row, int col, int radius) {
  const float value = heat[class_offset + static_cast<std::size_t>(row) * cols + col];
  for (int dr = -radius; dr <= radius; ++dr) {
    const int r = row + dr;
    if (r < 0 || r >= rows) continue;
    for (int dc = -radius; dc <= radius; ++dc) {
      const int c = col + dc;
      if (c < 0 || c >= cols || (dr == 0 && dc == 0)) continue;
      const float other = heat[class_offset + static_cast<std::size_t>(r) * cols + c];
      if (other > value) return false;
      if (other == value && (r < row || (r == row && c < col))) return false;
    }
  }
  return true;
}

}  // namespace

std::vector<Detection> decode_detections(std::span<const float> heatmaps, int num_classes,
                                         std::span<const double> regressions,
                                         std::span<const std::int32_t> attributes,
                                         const GridConfig& grid, const DecodeParams& params) {
  if (params.nms_kernel < 1 || params.nms_kernel % 2 == 0) {
    throw std::invalid_argument("decode_detections: nms_kernel must be odd and positive");
  }
  const int rows = grid.rows();
  const int cols = grid.cols();
  const std::size_t cells = static_cast<std::size_t>(rows) * cols;
  if (heatmaps.size() != static_cast<std::size_t>(num_classes) * cells ||
      regressions.size() != static_cast<std::size_t>(kNumRegChannels) * cells) {
    throw std::invalid_argument("decode_detections: map shapes do not match grid");
  }
  const int radius = params.nms_kernel / 2;

  std::vector<Detection> candidates;
  for (int k = 0; k < num_classes; ++k) {
    const std::size_t class_offset = static_cast<std::size_t>(k) * cells;
    for (int row = 0; row < rows; ++row) {
      for (int col = 0; col < cols; ++col) {
        const float score = heatmaps[class_offset + static_cast<std::size_t>(row) * cols + col];
        if (score < params.score_threshold) continue;
        if (!is_local_max(heatmaps, class_offset, rows, cols, row, col, radius)) continue;

        const std::size_t cell = static_cast<std::size_t>(row) * cols + col;
        Detection det;
        det.row = row;
        det.col = col;
        det.box.class_id = static_cast<ClassId>(k);
        det.box.score = score;
        det.box.center.x() = (row + regressions[kRegDx * cells + cell]) * grid.step + grid.x_min;
        det.box.center.y() = (col + regressions[kRegDy * cells + cell]) * grid.step + grid.y_min;
        det.box.center.z() = regressions[kRegZ * cells + cell];
        det.box.size = Eigen::Vector3d(std::exp(regressions[kRegLogL * cells + cell]),
                                       std::exp(regressions[kRegLogW * cells + cell]),
                                       std::exp(regressions[kRegLogH * cells + cell]));
        det.box.yaw = normalize_yaw(std::atan2(regressions[kRegSinYaw * cells + cell],
                                               regressions[kRegCosYaw * cells + cell]));
        det.box.velocity = Eigen::Vector2d(regressions[kRegVx * cells + cell],
                                           regressions[kRegVy * cells + cell]);
        if (!attributes.empty()) det.box.attribute_id = attributes[cell];
        candidates.push_back(det);
      }
    }
  }

  // Candidates are generated class-major then row-major, so a stable sort by
  // score keeps the result deterministic under ties.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Detection& a, const Detection& b) { return *a.box.score > *b.box.score; });
  if (static_cast<int>(candidates.size()) > params.max_detections) {
    candidates.resize(params.max_detections);
  }
  return candidates;
}

}  // namespace rcbev
