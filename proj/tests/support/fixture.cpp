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

#include "support/fixture.hpp"

#include <array>
#include <fstream>
#include <random>
#include <vector>

#include <json.hpp>

#include "support/test_util.hpp"
#include "rcbev/dataset_io.hpp"
#include "rcbev/geometry.hpp"
#include "rcbev/tensor_file.hpp"

namespace rcbev::testing {

namespace {

constexpr int kFeatureChannels = 4;
constexpr int kFeatureHeight = 6;
constexpr int kFeatureWidth = 10;
constexpr int kFeatureStride = 64;
constexpr int kDepthBins = 12;
constexpr double kDepthFirst = 2.0;
constexpr double kDepthStep = 4.0;
constexpr int kPointNetChannels = 8;
constexpr int kSweepsPerFrame = 5;
constexpr std::int64_t kSweepSpacingUs = 70000;

CameraModel fixture_camera() {
  CameraModel camera;
  camera.intrinsics << 600.0, 0.0, 400.0, 0.0, 600.0, 225.0, 0.0, 0.0, 1.0;
  camera.width = 800;
  camera.height = 450;
  // Ego (x forward, y left, z up) to camera (x right, y down, z forward).
  camera.extrinsics.rotation << 0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0;
  camera.extrinsics.translation.setZero();
  return camera;
}

Box3D make_object(std::mt19937_64& rng, ClassId class_id,
                  const std::vector<Box3D>& placed) {
  static const std::array<Eigen::Vector3d, kNumClasses> kTypicalSize = {
      Eigen::Vector3d(0.7, 0.7, 1.7), Eigen::Vector3d(1.8, 0.6, 1.6),
      Eigen::Vector3d(4.5, 1.9, 1.6)};
  Box3D box;
  box.class_id = class_id;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double x = uniform(rng, 10.0, 45.0);
    const double y_limit = std::min(10.0, 0.5 * x);
    const double y = uniform(rng, -y_limit, y_limit);
    bool clear = true;
    for (const Box3D& other : placed) {
      if (std::hypot(other.center.x() - x, other.center.y() - y) < 6.0) {
        clear = false;
        break;
      }
    }
    if (!clear) continue;
    box.center = Eigen::Vector3d(x, y, uniform(rng, 0.4, 1.1));
    break;
  }
  const Eigen::Vector3d& base = kTypicalSize[static_cast<int>(class_id)];
  box.size = base * uniform(rng, 0.9, 1.15);
  box.yaw = normalize_yaw(uniform(rng, -3.1, 3.1));
  box.velocity = Eigen::Vector2d(uniform(rng, -3, 3), uniform(rng, -3, 3));
  box.attribute_id = uniform_int(rng, 0, 3);
  return box;
}

}  // namespace

FixturePaths build_fixture(const std::filesystem::path& dir, const FixtureOptions& options) {
  std::filesystem::create_directories(dir / "blobs");
  std::filesystem::create_directories(dir / "tensors");
  std::filesystem::create_directories(dir / "weights");
  std::mt19937_64 rng(options.seed);

  const CameraModel camera = fixture_camera();
  std::vector<FrameRecord> frames;

  for (int j = 0; j < options.num_frames; ++j) {
    FrameRecord frame;
    frame.frame_id = "frame_" + std::string(4 - std::to_string(j).size(), '0') +
                     std::to_string(j);
    frame.timestamp_us = 1700000000000000ll + j * 500000ll;
    frame.camera = camera;
    frame.radar_dims = RadarDims::k3_1d;
    frame.image_features = "tensors/" + frame.frame_id + ".feat.rcbt";
    frame.depth_dist = "tensors/" + frame.frame_id + ".depth.rcbt";
    frame.feature_stride = kFeatureStride;

    const Pose key_pose =
        Pose::from_yaw(0.03 * j, Eigen::Vector3d(1.5 * j, 0.2 * j, 0.0));
    frame.ego_pose = key_pose;

    // One object per class per frame, plus an extra on odd frames.
    std::vector<Box3D> objects;
    for (int k = 0; k < kNumClasses; ++k) {
      objects.push_back(make_object(rng, static_cast<ClassId>(k), objects));
    }
    if (j % 2 == 1) {
      objects.push_back(
          make_object(rng, static_cast<ClassId>(uniform_int(rng, 0, kNumClasses - 1)), objects));
    }
    frame.annotations = objects;

    // Radar sweeps, newest first; the scene is static in the world frame.
    for (int s = 0; s < kSweepsPerFrame; ++s) {
      SweepRef sweep;
      sweep.timestamp_us = frame.timestamp_us - s * kSweepSpacingUs;
      sweep.ego_pose = Pose::from_yaw(
          0.03 * j - 0.01 * s,
          key_pose.translation - key_pose.rotation * Eigen::Vector3d(0.4 * s, 0.0, 0.0));
      sweep.blob = "blobs/" + frame.frame_id + "_s" + std::to_string(s) + ".f32";

      const Pose key_to_sweep = sweep.ego_pose.inverse() * key_pose;
      std::vector<RadarPoint> points;
      for (const Box3D& box : objects) {
        for (int p = 0; p < options.points_per_box; ++p) {
          const Eigen::Vector3d on_box =
              box.center + Eigen::Vector3d(uniform(rng, -0.45, 0.45) * box.length(),
                                           uniform(rng, -0.45, 0.45) * box.width(),
                                           uniform(rng, -0.45, 0.45) * box.height());
          const Eigen::Vector3d in_sweep = key_to_sweep * on_box;
          RadarPoint point;
          point.x = in_sweep.x();
          point.y = in_sweep.y();
          point.z = in_sweep.z();
          point.rcs = uniform(rng, -5.0, 20.0);
          point.v_r = uniform(rng, -2.0, 2.0);
          points.push_back(point);
        }
      }
      for (int p = 0; p < options.clutter_points_per_sweep; ++p) {
        const Eigen::Vector3d in_key(uniform(rng, 0.0, 55.0), uniform(rng, -28.0, 28.0),
                                     uniform(rng, 0.0, 3.0));
        const Eigen::Vector3d in_sweep = key_to_sweep * in_key;
        RadarPoint point;
        point.x = in_sweep.x();
        point.y = in_sweep.y();
        point.z = in_sweep.z();
        point.rcs = uniform(rng, -10.0, 10.0);
        point.v_r = uniform(rng, -5.0, 5.0);
        points.push_back(point);
      }
      write_radar_blob(dir / sweep.blob, points, frame.radar_dims);
      frame.radar_sweeps.push_back(std::move(sweep));
    }

    // Camera feature map and per-pixel depth distribution.
    std::vector<float> features(static_cast<std::size_t>(kFeatureChannels) * kFeatureHeight *
                                kFeatureWidth);
    for (float& value : features) value = static_cast<float>(uniform(rng, 0.0, 1.0));
    write_tensor(dir / frame.image_features,
                 std::array<std::int64_t, 3>{kFeatureChannels, kFeatureHeight, kFeatureWidth},
                 std::span<const float>(features));

    std::vector<float> depth(static_cast<std::size_t>(kDepthBins) * kFeatureHeight *
                             kFeatureWidth);
    for (int h = 0; h < kFeatureHeight; ++h) {
      for (int w = 0; w < kFeatureWidth; ++w) {
        std::array<double, kDepthBins> raw;
        double sum = 0.0;
        for (double& value : raw) {
          value = uniform(rng, 0.05, 1.0);
          sum += value;
        }
        for (int d = 0; d < kDepthBins; ++d) {
          depth[(static_cast<std::size_t>(d) * kFeatureHeight + h) * kFeatureWidth + w] =
              static_cast<float>(raw[d] / sum);
        }
      }
    }
    write_tensor(dir / frame.depth_dist,
                 std::array<std::int64_t, 3>{kDepthBins, kFeatureHeight, kFeatureWidth},
                 std::span<const float>(depth));

    frames.push_back(std::move(frame));
  }

  FixturePaths paths;
  paths.root = dir;
  paths.manifest = dir / "manifest.jsonl";
  write_frames(paths.manifest, frames);

  // Pillar encoder weights.
  std::vector<float> linear(11 * kPointNetChannels);
  for (float& value : linear) value = static_cast<float>(uniform(rng, -0.5, 0.5));
  write_tensor(dir / "weights/pointnet_linear.rcbt",
               std::array<std::int64_t, 2>{11, kPointNetChannels},
               std::span<const float>(linear));
  std::vector<float> bias(kPointNetChannels);
  for (float& value : bias) value = static_cast<float>(uniform(rng, -0.2, 0.2));
  write_tensor(dir / "weights/pointnet_bias.rcbt",
               std::array<std::int64_t, 1>{kPointNetChannels}, std::span<const float>(bias));

  using Json = nlohmann::ordered_json;
  Json config;
  config["grid"] = {{"x_min", 0.0}, {"x_max", 51.2}, {"y_min", -25.6}, {"y_max", 25.6},
                    {"step", 0.1}};
  config["num_sweeps"] = 5;
  config["use_radar"] = true;
  config["use_camera"] = true;
  config["pillars"] = {{"max_points_per_pillar", 32},
                       {"max_pillars", 8192},
                       {"out_channels", kPointNetChannels},
                       {"weights", "weights/pointnet_linear.rcbt"},
                       {"bias", "weights/pointnet_bias.rcbt"}};
  config["depth_bins"] = {{"first", kDepthFirst}, {"step", kDepthStep}, {"count", kDepthBins}};
  config["heatmap"] = {{"min_overlap", 0.1}, {"min_radius", 2}};
  config["decode"] = {{"score_threshold", 0.3}, {"max_detections", 50}, {"nms_kernel", 3}};
  config["eval"] = {{"protocol", "nuscenes"},
                    {"center_distance_thresholds", Json::array({0.5, 1.0, 2.0, 4.0})},
                    {"tp_error_threshold", 2.0},
                    {"iou_thresholds",
                     {{"pedestrian", 0.25}, {"cyclist", 0.25}, {"car", 0.5}}}};
  config["cbgs"] = {{"groups", Json::array({Json::array({"pedestrian"}),
                                            Json::array({"cyclist"}), Json::array({"car"})})},
                    {"temperature", 1.0},
                    {"max_factor", 5.0}};
  config["seed"] = 7;
  paths.config = dir / "config.json";
  {
    const std::filesystem::path tmp = paths.config.string() + ".tmp";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << config.dump(2) << "\n";
    out.close();
    std::filesystem::rename(tmp, paths.config);
  }
  return paths;
}

}  // namespace rcbev::testing
