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

#include "rcbev/radar_pillars.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

namespace rcbev {

namespace {

// Unbiased bounded draw (multiply-shift). mt19937 is fully specified by the
// standard, so results are reproducible across platforms.
std::uint32_t draw_below(std::mt19937& rng, std::uint32_t n) {
  const std::uint64_t product = static_cast<std::uint64_t>(rng()) * n;
  return static_cast<std::uint32_t>(product >> 32);
}

// Selects `keep` of `n` indices uniformly at random, returned in ascending
// order so survivors preserve input order.
std::vector<int> sample_indices(int n, int keep, std::mt19937& rng) {
  std::vector<int> indices(n);
  for (int i = 0; i < n; ++i) indices[i] = i;
  for (int i = 0; i < keep; ++i) {
    const int j = i + static_cast<int>(draw_below(rng, static_cast<std::uint32_t>(n - i)));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(keep);
  std::sort(indices.begin(), indices.end());
  return indices;
}

}  // namespace

AccumulatedCloud accumulate_sweeps(std::span<const RadarSweepCloud> sweeps, const Pose& key_pose,
                                   double key_time, int num_sweeps) {
  if (num_sweeps < 1) throw std::invalid_argument("accumulate_sweeps: num_sweeps must be >= 1");
  AccumulatedCloud out;
  out.sweeps_used = std::min<int>(num_sweeps, static_cast<int>(sweeps.size()));
  const Pose key_inverse = key_pose.inverse();
  for (int s = 0; s < out.sweeps_used; ++s) {
    const RadarSweepCloud& sweep = sweeps[s];
    const Pose to_key = key_inverse * sweep.ego_pose;
    const double dt = sweep.timestamp - key_time;
    for (const RadarPoint& p : sweep.points) {
      const Eigen::Vector3d moved = to_key * Eigen::Vector3d(p.x, p.y, p.z);
      RadarPoint q = p;
      q.x = moved.x();
      q.y = moved.y();
      q.z = moved.z();
      q.t = dt;
      out.points.push_back(q);
    }
  }
  return out;
}

PillarTensor pillarize(std::span<const RadarPoint> points, RadarDims dims,
                       const GridConfig& grid, int max_points_per_pillar, int max_pillars,
                       std::uint32_t seed) {
  if (max_points_per_pillar <= 0 || max_pillars <= 0) {
    throw std::invalid_argument("pillarize: pillar capacities must be positive");
  }
  grid.validate();

  // Bin in-grid points, keeping pillars in first-occurrence order.
  std::map<std::pair<int, int>, int> pillar_index;
  std::vector<std::pair<int, int>> coords;
  std::vector<std::vector<int>> members;
  std::int64_t in_grid = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto cell = grid.cell_of(points[i].x, points[i].y);
    if (!cell) continue;
    ++in_grid;
    auto [it, inserted] = pillar_index.try_emplace(*cell, static_cast<int>(coords.size()));
    if (inserted) {
      coords.push_back(*cell);
      members.emplace_back();
    }
    members[it->second].push_back(static_cast<int>(i));
  }

  std::mt19937 rng(seed);
  std::int64_t dropped = 0;

  // Pillar overflow first, so per-pillar subsampling only runs for survivors.
  std::vector<int> kept_pillars(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) kept_pillars[i] = static_cast<int>(i);
  if (static_cast<int>(coords.size()) > max_pillars) {
    kept_pillars = sample_indices(static_cast<int>(coords.size()), max_pillars, rng);
    std::vector<bool> keep(coords.size(), false);
    for (int idx : kept_pillars) keep[idx] = true;
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (!keep[i]) dropped += static_cast<std::int64_t>(members[i].size());
    }
  }

  PillarTensor tensor;
  tensor.feat_dim = feature_dim(dims);
  tensor.max_points_per_pillar = max_points_per_pillar;
  tensor.pillar_coords.reserve(kept_pillars.size());
  tensor.point_counts.reserve(kept_pillars.size());
  tensor.features.assign(
      kept_pillars.size() * static_cast<std::size_t>(max_points_per_pillar) * tensor.feat_dim,
      0.0f);
  tensor.points_in_grid = in_grid;

  const bool has_z = dims == RadarDims::k3_1d;
  for (std::size_t out_idx = 0; out_idx < kept_pillars.size(); ++out_idx) {
    const int pillar = kept_pillars[out_idx];
    std::vector<int>& slot = members[pillar];
    if (static_cast<int>(slot.size()) > max_points_per_pillar) {
      const auto survivors = sample_indices(static_cast<int>(slot.size()),
                                            max_points_per_pillar, rng);
      std::vector<int> retained;
      retained.reserve(survivors.size());
      for (int s : survivors) retained.push_back(slot[s]);
      dropped += static_cast<std::int64_t>(slot.size() - retained.size());
      slot = std::move(retained);
    }

    // Mean over the retained points only, so stored offsets are consistent
    // with the stored set.
    double mean_x = 0.0, mean_y = 0.0, mean_z = 0.0;
    for (int p : slot) {
      mean_x += points[p].x;
      mean_y += points[p].y;
      mean_z += points[p].z;
    }
    const double inv_count = 1.0 / static_cast<double>(slot.size());
    mean_x *= inv_count;
    mean_y *= inv_count;
    mean_z *= inv_count;

    const auto [row, col] = coords[pillar];
    const double center_x = grid.cell_center_x(row);
    const double center_y = grid.cell_center_y(col);

    float* base = tensor.features.data() +
                  out_idx * static_cast<std::size_t>(max_points_per_pillar) * tensor.feat_dim;
    for (std::size_t k = 0; k < slot.size(); ++k) {
      const RadarPoint& p = points[slot[k]];
      float* f = base + k * tensor.feat_dim;
      int c = 0;
      f[c++] = static_cast<float>(p.x);
      f[c++] = static_cast<float>(p.y);
      if (has_z) f[c++] = static_cast<float>(p.z);
      f[c++] = static_cast<float>(p.rcs);
      f[c++] = static_cast<float>(p.v_r);
      f[c++] = static_cast<float>(p.t);
      f[c++] = static_cast<float>(p.x - mean_x);
      f[c++] = static_cast<float>(p.y - mean_y);
      if (has_z) f[c++] = static_cast<float>(p.z - mean_z);
      f[c++] = static_cast<float>(p.x - center_x);
      f[c++] = static_cast<float>(p.y - center_y);
    }
    tensor.pillar_coords.push_back(coords[pillar]);
    tensor.point_counts.push_back(static_cast<int>(slot.size()));
  }
  tensor.points_dropped = dropped;
  return tensor;
}

PointNetWeights PointNetWeights::identity(int feat_dim, int out_channels) {
  PointNetWeights w;
  w.linear = Eigen::MatrixXf::Zero(feat_dim, out_channels);
  for (int i = 0; i < std::min(feat_dim, out_channels); ++i) w.linear(i, i) = 1.0f;
  w.bias = Eigen::VectorXf::Zero(out_channels);
  return w;
}

PillarFeatures pointnet_encode(const PillarTensor& pillars, const PointNetWeights& weights) {
  if (weights.linear.rows() != pillars.feat_dim) {
    throw std::invalid_argument("pointnet_encode: weight rows do not match feature dim");
  }
  if (weights.bias.size() != weights.linear.cols()) {
    throw std::invalid_argument("pointnet_encode: bias size does not match output channels");
  }
  const int out_channels = static_cast<int>(weights.linear.cols());

  PillarFeatures out;
  out.out_channels = out_channels;
  out.features.assign(static_cast<std::size_t>(pillars.num_pillars()) * out_channels, 0.0f);

  Eigen::VectorXf encoded(out_channels);
  for (int pillar = 0; pillar < pillars.num_pillars(); ++pillar) {
    const std::span<const float> feats = pillars.pillar_features(pillar);
    float* dst = out.features.data() + static_cast<std::size_t>(pillar) * out_channels;
    for (int slot = 0; slot < pillars.point_counts[pillar]; ++slot) {
      const Eigen::Map<const Eigen::VectorXf> point(feats.data() +
                                                        static_cast<std::size_t>(slot) *
                                                            pillars.feat_dim,
                                                    pillars.feat_dim);
      encoded.noalias() = weights.linear.transpose() * point;
      encoded += weights.bias;
      encoded = encoded.cwiseMax(0.0f);
      if (slot == 0) {
        Eigen::Map<Eigen::VectorXf>(dst, out_channels) = encoded;
      } else {
        Eigen::Map<Eigen::VectorXf> acc(dst, out_channels);
        acc = acc.cwiseMax(encoded);
      }
    }
  }
  return out;
}

BevFeatureMap scatter_to_bev(const PillarFeatures& pillar_features,
                             std::span<const std::pair<int, int>> pillar_coords,
                             const GridConfig& grid) {
  const int channels = pillar_features.out_channels;
  BevFeatureMap map = BevFeatureMap::zeros(channels, grid);
  std::vector<bool> occupied(static_cast<std::size_t>(grid.rows()) * grid.cols(), false);
  for (std::size_t pillar = 0; pillar < pillar_coords.size(); ++pillar) {
    const auto [row, col] = pillar_coords[pillar];
    if (row < 0 || row >= grid.rows() || col < 0 || col >= grid.cols()) {
      throw std::invalid_argument("scatter_to_bev: pillar coordinate outside grid");
    }
    const std::size_t cell = static_cast<std::size_t>(row) * grid.cols() + col;
    if (occupied[cell]) throw std::logic_error("scatter_to_bev: duplicate pillar coordinate");
    occupied[cell] = true;
    const float* src = pillar_features.features.data() + pillar * channels;
    for (int c = 0; c < channels; ++c) map.at(c, row, col) = src[c];
  }
  return map;
}

}  // namespace rcbev
