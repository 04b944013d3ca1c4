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

#include <gtest/gtest.h>

#include "support/test_util.hpp"

namespace rcbev {
namespace {

using testing::uniform;

CameraModel simple_camera(double fx = 100.0, double cx = 8.0, double cy = 8.0) {
  CameraModel camera;
  camera.intrinsics << fx, 0, cx, 0, fx, cy, 0, 0, 1;
  camera.width = 1000;
  camera.height = 1000;
  return camera;
}

ImageFeatureMap one_pixel_features(std::vector<float> channels, int stride = 16) {
  ImageFeatureMap features;
  features.channels = static_cast<int>(channels.size());
  features.height = 1;
  features.width = 1;
  features.stride = stride;
  features.data = std::move(channels);
  return features;
}

DepthDistribution one_pixel_depth(std::vector<float> probs, std::vector<double> depths) {
  DepthDistribution depth;
  depth.bins = static_cast<int>(probs.size());
  depth.height = 1;
  depth.width = 1;
  depth.probs = std::move(probs);
  depth.bin_depths = std::move(depths);
  return depth;
}

TEST(LiftTest, OneHotDepthYieldsSingleNonzeroPoint) {
  const auto features = one_pixel_features({2.0f});
  const auto depth = one_pixel_depth({0, 0, 1, 0}, {5, 10, 15, 20});
  const auto lifted = lift(features, depth, simple_camera());

  ASSERT_EQ(lifted.count(), 4u);
  int nonzero = -1;
  for (int d = 0; d < 4; ++d) {
    if (lifted.features[d] != 0.0f) {
      EXPECT_EQ(nonzero, -1);
      nonzero = d;
    }
  }
  EXPECT_EQ(nonzero, 2);
  EXPECT_FLOAT_EQ(lifted.features[2], 2.0f);
  // Pixel center (8, 8) is the principal point, so the ray is the optical
  // axis and the point sits at the bin depth.
  EXPECT_NEAR(lifted.positions[2].z(), 15.0, 1e-12);
  EXPECT_NEAR(lifted.positions[2].x(), 0.0, 1e-12);
  EXPECT_NEAR(lifted.positions[2].y(), 0.0, 1e-12);
}

TEST(LiftTest, UniformDepthSplitsFeatureMass) {
  const auto features = one_pixel_features({3.0f});
  const auto depth =
      one_pixel_depth({1.0f / 3, 1.0f / 3, 1.0f / 3}, {5, 10, 15});
  const auto lifted = lift(features, depth, simple_camera());
  ASSERT_EQ(lifted.count(), 3u);
  float total = 0.0f;
  for (int d = 0; d < 3; ++d) {
    EXPECT_FLOAT_EQ(lifted.features[d], 1.0f);
    total += lifted.features[d];
  }
  EXPECT_FLOAT_EQ(total, 3.0f);
}

TEST(LiftTest, PrincipalPointUnprojectsAlongAxis) {
  // Identity extrinsics: ego frame == camera frame.
  const auto features = one_pixel_features({1.0f});
  const auto depth = one_pixel_depth({1.0f}, {10.0});
  const auto lifted = lift(features, depth, simple_camera());
  ASSERT_EQ(lifted.count(), 1u);
  EXPECT_NEAR((lifted.positions[0] - Eigen::Vector3d(0, 0, 10)).norm(), 0.0, 1e-12);
}

TEST(LiftTest, ForwardLookingExtrinsicsMapToEgo) {
  CameraModel camera = simple_camera();
  // Ego (x forward, y left, z up) to camera (x right, y down, z forward).
  camera.extrinsics.rotation << 0, -1, 0, 0, 0, -1, 1, 0, 0;
  const auto features = one_pixel_features({1.0f});
  const auto depth = one_pixel_depth({1.0f}, {12.0});
  const auto lifted = lift(features, depth, camera);
  EXPECT_NEAR((lifted.positions[0] - Eigen::Vector3d(12, 0, 0)).norm(), 0.0, 1e-12);
}

TEST(LiftTest, OutputCountIsBinsTimesPixels) {
  ImageFeatureMap features;
  features.channels = 2;
  features.height = 3;
  features.width = 5;
  features.stride = 4;
  features.data.assign(2 * 3 * 5, 1.0f);
  DepthDistribution depth;
  depth.bins = 7;
  depth.height = 3;
  depth.width = 5;
  depth.probs.assign(7 * 3 * 5, 1.0f / 7);
  depth.bin_depths = {1, 2, 3, 4, 5, 6, 7};
  const auto lifted = lift(features, depth, simple_camera());
  EXPECT_EQ(lifted.count(), 7u * 3u * 5u);
}

TEST(LiftTest, RejectsMismatchedShapes) {
  const auto features = one_pixel_features({1.0f});
  DepthDistribution depth;
  depth.bins = 2;
  depth.height = 2;  // features have height 1
  depth.width = 1;
  depth.probs.assign(4, 0.5f);
  depth.bin_depths = {1, 2};
  EXPECT_THROW(lift(features, depth, simple_camera()), std::invalid_argument);
}

TEST(DepthDistributionTest, ValidateChecksNormalizationAndOrder) {
  auto depth = one_pixel_depth({0.5f, 0.5f}, {1, 2});
  EXPECT_NO_THROW(depth.validate());

  auto unnormalized = one_pixel_depth({0.5f, 0.6f}, {1, 2});
  EXPECT_THROW(unnormalized.validate(), std::invalid_argument);

  auto unordered = one_pixel_depth({0.5f, 0.5f}, {2, 1});
  EXPECT_THROW(unordered.validate(), std::invalid_argument);

  auto negative = one_pixel_depth({-0.5f, 1.5f}, {1, 2});
  EXPECT_THROW(negative.validate(), std::invalid_argument);
}

TEST(SplatTest, SinglePointLandsInItsCell) {
  GridConfig grid;
  LiftedPoints points;
  points.channels = 2;
  points.positions = {Eigen::Vector3d(10.05, 3.14, 7.0)};  // z must be ignored
  points.features = {1.0f, 2.0f};
  const auto map = splat(points, grid);
  const auto cell = grid.cell_of(10.05, 3.14);
  ASSERT_TRUE(cell.has_value());
  EXPECT_FLOAT_EQ(map.at(0, cell->first, cell->second), 1.0f);
  EXPECT_FLOAT_EQ(map.at(1, cell->first, cell->second), 2.0f);
  double total = 0.0;
  for (float v : map.data) total += v;
  EXPECT_DOUBLE_EQ(total, 3.0);
}

TEST(SplatTest, SameCellAccumulates) {
  GridConfig grid;
  LiftedPoints points;
  points.channels = 1;
  points.positions = {Eigen::Vector3d(1.01, 0.01, 0), Eigen::Vector3d(1.09, 0.09, 5)};
  points.features = {1.5f, 2.5f};
  const auto map = splat(points, grid);
  const auto cell = grid.cell_of(1.01, 0.01);
  EXPECT_FLOAT_EQ(map.at(0, cell->first, cell->second), 4.0f);
}

TEST(SplatTest, OutOfGridPointsAreDropped) {
  GridConfig grid;
  LiftedPoints points;
  points.channels = 1;
  points.positions = {Eigen::Vector3d(-0.5, 0, 0)};
  points.features = {7.0f};
  const auto map = splat(points, grid);
  for (float v : map.data) EXPECT_EQ(v, 0.0f);
}

namespace {

struct RandomScene {
  ImageFeatureMap features;
  DepthDistribution depth;
  CameraModel camera;
};

// Geometry chosen so every pseudo point lands inside the default grid.
RandomScene make_in_grid_scene(std::mt19937_64& rng, int channels = 3, int height = 4,
                               int width = 6, int bins = 5) {
  RandomScene scene;
  scene.features.channels = channels;
  scene.features.height = height;
  scene.features.width = width;
  scene.features.stride = 8;
  scene.features.data.resize(static_cast<std::size_t>(channels) * height * width);
  for (float& v : scene.features.data) v = static_cast<float>(uniform(rng, 0.0, 1.0));

  scene.depth.bins = bins;
  scene.depth.height = height;
  scene.depth.width = width;
  scene.depth.probs.resize(static_cast<std::size_t>(bins) * height * width);
  for (int h = 0; h < height; ++h) {
    for (int w = 0; w < width; ++w) {
      double sum = 0.0;
      std::vector<double> raw(bins);
      for (double& v : raw) {
        v = uniform(rng, 0.01, 1.0);
        sum += v;
      }
      for (int d = 0; d < bins; ++d) {
        scene.depth.probs[(static_cast<std::size_t>(d) * height + h) * width + w] =
            static_cast<float>(raw[d] / sum);
      }
    }
  }
  for (int d = 0; d < bins; ++d) scene.depth.bin_depths.push_back(2.0 + 9.0 * d);

  const double image_w = width * scene.features.stride;
  const double image_h = height * scene.features.stride;
  scene.camera.intrinsics << image_w, 0, image_w / 2, 0, image_h, image_h / 2, 0, 0, 1;
  scene.camera.width = static_cast<int>(image_w);
  scene.camera.height = static_cast<int>(image_h);
  scene.camera.extrinsics.rotation << 0, -1, 0, 0, 0, -1, 1, 0, 0;
  return scene;
}

}  // namespace

TEST(SplatTest, MassConservationForInGridScenes) {
  std::mt19937_64 rng(31);
  const GridConfig grid;
  for (int round = 0; round < 10; ++round) {
    const RandomScene scene = make_in_grid_scene(rng);
    const auto lifted = lift(scene.features, scene.depth, scene.camera);
    for (const auto& p : lifted.positions) {
      ASSERT_TRUE(grid.cell_of(p.x(), p.y()).has_value());
    }
    const auto map = splat(lifted, grid);

    for (int c = 0; c < scene.features.channels; ++c) {
      double pixel_mass = 0.0;
      for (int h = 0; h < scene.features.height; ++h) {
        for (int w = 0; w < scene.features.width; ++w) pixel_mass += scene.features.at(c, h, w);
      }
      double cell_mass = 0.0;
      const std::size_t cells = static_cast<std::size_t>(grid.rows()) * grid.cols();
      for (std::size_t i = 0; i < cells; ++i) cell_mass += map.data[c * cells + i];
      EXPECT_NEAR(cell_mass, pixel_mass, 1e-4 * std::abs(pixel_mass));
    }
  }
}

TEST(SplatTest, LinearInDepthProbabilities) {
  std::mt19937_64 rng(32);
  const GridConfig grid;
  const RandomScene scene = make_in_grid_scene(rng);
  RandomScene doubled = scene;
  for (float& p : doubled.depth.probs) p *= 2.0f;

  const auto base = splat(lift(scene.features, scene.depth, scene.camera), grid);
  const auto twice = splat(lift(doubled.features, doubled.depth, doubled.camera), grid);
  ASSERT_EQ(base.data.size(), twice.data.size());
  for (std::size_t i = 0; i < base.data.size(); ++i) {
    EXPECT_EQ(twice.data[i], 2.0f * base.data[i]);  // exact: scaling by 2 is lossless
  }
}

TEST(SplatTest, DeterministicForIdenticalInput) {
  std::mt19937_64 rng(33);
  const GridConfig grid;
  const RandomScene scene = make_in_grid_scene(rng);
  const auto lifted = lift(scene.features, scene.depth, scene.camera);
  const auto a = splat(lifted, grid);
  const auto b = splat(lifted, grid);
  EXPECT_EQ(a.data, b.data);
}

}  // namespace
}  // namespace rcbev
