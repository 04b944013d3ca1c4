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
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rcbev/geometry.hpp"
#include "rcbev/radar_pillars.hpp"

namespace rcbev {

// One radar sweep reference inside a frame: the blob path is relative to the
// manifest directory and stores little-endian float32 records, column layout
// x, y[, z], rcs, v_r (4 floats per point for 2+1D, 5 for 3+1D).
struct SweepRef {
  std::int64_t timestamp_us = 0;
  Pose ego_pose;  // sweep ego frame -> world
  std::string blob;
};

// Canonical frame, one JSON object per manifest line. Camera, ego pose and
// tensor references are optional; pipeline stages check for what they need.
struct FrameRecord {
  std::string frame_id;
  std::int64_t timestamp_us = 0;
  std::optional<Pose> ego_pose;
  std::optional<CameraModel> camera;
  std::vector<SweepRef> radar_sweeps;  // newest first
  std::vector<Box3D> annotations;
  RadarDims radar_dims = RadarDims::k3_1d;
  std::string image_features;  // tensor file path, "" when absent
  std::string depth_dist;
  int feature_stride = 1;
};

// Streaming manifest reader (JSON lines). Validation errors carry the
// frame_id and field. Blank lines are skipped.
class FrameReader {
 public:
  explicit FrameReader(const std::filesystem::path& manifest_path);

  std::optional<FrameRecord> next();
  const std::filesystem::path& root() const { return root_; }

 private:
  std::ifstream stream_;
  std::filesystem::path root_;
  std::filesystem::path manifest_path_;
  int line_number_ = 0;
};

std::vector<FrameRecord> load_frames(const std::filesystem::path& manifest_path);

// Atomic JSON-lines writer; load_frames(write_frames(x)) is bit-exact.
void write_frames(const std::filesystem::path& manifest_path,
                  std::span<const FrameRecord> frames);

std::vector<RadarPoint> load_radar_blob(const std::filesystem::path& path, RadarDims dims);
void write_radar_blob(const std::filesystem::path& path, std::span<const RadarPoint> points,
                      RadarDims dims);

// Keeps boxes whose center projects to a valid in-image pixel with positive
// depth. Output order follows input order; the operation is idempotent.
std::vector<Box3D> filter_fov(std::span<const Box3D> boxes, const CameraModel& camera);

// Class-balanced resampling configuration. Groups must partition the class
// set. A group's duplication factor is (largest group share / own share) ^
// temperature, capped at max_factor; fractional parts are resolved by a
// seeded Bernoulli draw.
struct ClassGroupConfig {
  std::vector<std::vector<ClassId>> groups = {
      {ClassId::kPedestrian}, {ClassId::kCyclist}, {ClassId::kCar}};
  double temperature = 1.0;
  double max_factor = 5.0;
};

// Returns frame indices with under-represented groups duplicated; every
// original index appears at least once and identity is returned when groups
// are balanced. Deterministic under seed.
std::vector<int> cbgs_resample(std::span<const FrameRecord> frames,
                               const ClassGroupConfig& config, std::uint32_t seed);

// Removes the ego motion's line-of-sight contribution from a raw radial
// velocity: compensated = raw + dot(ego_velocity, unit(point_position)).
double compensate_radial_velocity(double raw_v_r, const Eigen::Vector3d& point_position,
                                  const Eigen::Vector3d& ego_velocity);

}  // namespace rcbev
