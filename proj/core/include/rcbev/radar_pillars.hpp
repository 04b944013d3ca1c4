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

#include <Eigen/Core>

#include "rcbev/bev.hpp"
#include "rcbev/geometry.hpp"

namespace rcbev {

// Whether the radar measures elevation. 2+1D clouds have no z component and
// produce 9-dim augmented features; 3+1D clouds produce 11-dim features.
enum class RadarDims {
  k2_1d,
  k3_1d,
};

inline constexpr int feature_dim(RadarDims dims) { return dims == RadarDims::k3_1d ? 11 : 9; }

// One radar return. `v_r` is the ego-motion-compensated relative radial
// velocity (compensation happens at ingestion); `t` is the offset to the key
// frame timestamp in seconds, <= 0 for past sweeps. `z` is ignored in 2+1D
// mode.
struct RadarPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double rcs = 0.0;   // dBsm
  double v_r = 0.0;   // m/s
  double t = 0.0;     // s
};

struct RadarSweepCloud {
  std::vector<RadarPoint> points;
  Pose ego_pose;           // sweep ego frame -> world
  double timestamp = 0.0;  // s
};

struct AccumulatedCloud {
  std::vector<RadarPoint> points;
  int sweeps_used = 0;
};

// Merges the newest `num_sweeps` sweeps into a single cloud expressed in the
// key ego frame. Sweeps must be ordered newest-first; if fewer sweeps are
// available than requested, all of them are used (see `sweeps_used`). Point
// order is sweep-major with input order preserved within each sweep.
AccumulatedCloud accumulate_sweeps(std::span<const RadarSweepCloud> sweeps, const Pose& key_pose,
                                   double key_time, int num_sweeps);

// Dense pillar tensor. Feature layout per point:
//   3+1D: x, y, z, rcs, v_r, t, x_c, y_c, z_c, x_p, y_p   (11)
//   2+1D: x, y,    rcs, v_r, t, x_c, y_c,      x_p, y_p   (9)
// where (x_c, y_c[, z_c]) are offsets to the arithmetic mean of the pillar's
// retained points and (x_p, y_p) offsets to the pillar center. Padding slots
// are exactly zero.
struct PillarTensor {
  int feat_dim = 0;
  int max_points_per_pillar = 0;
  std::vector<float> features;                    // [num_pillars][max_points][feat_dim]
  std::vector<std::pair<int, int>> pillar_coords; // (row, col), unique
  std::vector<int> point_counts;                  // per pillar, >= 1

  // points_in_grid == sum(point_counts) + points_dropped.
  std::int64_t points_in_grid = 0;
  std::int64_t points_dropped = 0;  // truncation and pillar-overflow drops

  int num_pillars() const { return static_cast<int>(pillar_coords.size()); }
  std::span<const float> pillar_features(int pillar) const {
    return std::span<const float>(features)
        .subspan(static_cast<std::size_t>(pillar) * max_points_per_pillar * feat_dim,
                 static_cast<std::size_t>(max_points_per_pillar) * feat_dim);
  }
};

// Bins points into grid pillars and augments them with mean and pillar-center
// offsets. Points outside the grid are discarded. Overflowing points within a
// pillar and overflowing pillars are resolved by seeded uniform subsampling,
// keeping input order among survivors; the same inputs and seed always yield
// a bit-identical tensor. Augmentation statistics are computed over the
// retained points only.
//
// Throws std::invalid_argument if a capacity is zero or the grid is invalid.
PillarTensor pillarize(std::span<const RadarPoint> points, RadarDims dims,
                       const GridConfig& grid, int max_points_per_pillar, int max_pillars,
                       std::uint32_t seed);

// Shared linear layer of the pillar encoder: out = relu(linear^T * f + bias)
// followed by an elementwise max over the occupied slots of each pillar.
struct PointNetWeights {
  Eigen::MatrixXf linear;  // [feat_dim x out_channels]
  Eigen::VectorXf bias;    // [out_channels]

  // Identity-like fallback: copies the first min(feat_dim, out_channels)
  // features through, zero bias.
  static PointNetWeights identity(int feat_dim, int out_channels);
};

struct PillarFeatures {
  std::vector<float> features;  // [num_pillars][out_channels]
  int out_channels = 0;
};

// Padding slots never participate in the max: with a single occupied slot the
// output equals relu of that point's features, even if all of them are
// negative. Throws std::invalid_argument on weight shape mismatch.
PillarFeatures pointnet_encode(const PillarTensor& pillars, const PointNetWeights& weights);

// Writes each pillar's encoded feature into its grid cell; all other cells
// stay zero. Throws std::logic_error on duplicate coordinates (pillarize
// guarantees uniqueness) and std::invalid_argument on out-of-grid coords.
BevFeatureMap scatter_to_bev(const PillarFeatures& pillar_features,
                             std::span<const std::pair<int, int>> pillar_coords,
                             const GridConfig& grid);

}  // namespace rcbev
