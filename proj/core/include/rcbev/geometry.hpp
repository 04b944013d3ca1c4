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

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace rcbev {

// Object classes evaluated by every pipeline in this library.
enum class ClassId : int {
  kPedestrian = 0,
  kCyclist = 1,
  kCar = 2,
};
inline constexpr int kNumClasses = 3;

const std::string& class_name(ClassId id);
std::optional<ClassId> class_from_name(const std::string& name);

// Rigid transform (rotation + translation). Rotation must be orthonormal
// with determinant +1; see is_valid().
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return Pose{}; }
  static Pose from_yaw(double yaw, const Eigen::Vector3d& translation = Eigen::Vector3d::Zero());

  Pose inverse() const;
  Pose operator*(const Pose& rhs) const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& point) const;

  bool is_valid(double tolerance = 1e-6) const;
};

// Pinhole camera: intrinsics plus the rigid transform mapping the ego frame
// into the camera frame (x right, y down, z forward).
struct CameraModel {
  Eigen::Matrix3d intrinsics = Eigen::Matrix3d::Identity();
  Pose extrinsics;  // ego -> camera
  int width = 0;
  int height = 0;

  double fx() const { return intrinsics(0, 0); }
  double fy() const { return intrinsics(1, 1); }
  double cx() const { return intrinsics(0, 2); }
  double cy() const { return intrinsics(1, 2); }

  bool is_valid() const;
};

// Oriented 3D box in the ego frame. `center` is the geometric center (not
// bottom-anchored), `size` is (length along heading, width, height), yaw is
// measured about +z from +x, counterclockwise, normalized to (-pi, pi].
struct Box3D {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d size = Eigen::Vector3d::Ones();  // (length, width, height)
  double yaw = 0.0;
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  ClassId class_id = ClassId::kCar;
  int attribute_id = -1;  // -1: no attribute
  std::optional<double> score;  // set for predictions, absent for ground truth

  double length() const { return size.x(); }
  double width() const { return size.y(); }
  double height() const { return size.z(); }

  bool is_valid() const;
};

// Regular BEV grid over the ground plane. Rows index x, columns index y.
// The default covers x in [0, 51.2], y in [-25.6, 25.6] at 0.1 m, i.e. a
// 512 x 512 grid.
struct GridConfig {
  double x_min = 0.0;
  double x_max = 51.2;
  double y_min = -25.6;
  double y_max = 25.6;
  double step = 0.1;

  int rows() const;
  int cols() const;

  // Cell index of a BEV position, or nullopt if outside the grid.
  std::optional<std::pair<int, int>> cell_of(double x, double y) const;
  double cell_center_x(int row) const { return x_min + (row + 0.5) * step; }
  double cell_center_y(int col) const { return y_min + (col + 0.5) * step; }

  bool operator==(const GridConfig&) const = default;

  // Throws std::invalid_argument if step <= 0 or the extents are not
  // integer multiples of step (within 1e-9).
  void validate() const;
};

// Wraps an angle into (-pi, pi].
double normalize_yaw(double yaw);

// Smallest absolute difference between two angles, in [0, pi].
double angle_difference(double a, double b);

std::vector<Eigen::Vector3d> transform_points(const Pose& pose,
                                              std::span<const Eigen::Vector3d> points);

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
  bool valid = false;
};

// Projects ego-frame points through the camera. A point is valid iff its
// camera-frame depth is positive and (u, v) lies inside the closed image
// bounds [0, width] x [0, height]. Invalid points are flagged, not dropped.
std::vector<PixelPoint> project_to_image(const CameraModel& camera,
                                         std::span<const Eigen::Vector3d> points_ego);

// Inverse of the pinhole projection: pixel (u, v) at the given depth,
// returned in the ego frame.
Eigen::Vector3d unproject_pixel(const CameraModel& camera, double u, double v, double depth);

// BEV footprint corners, counterclockwise, starting at (+length/2, +width/2)
// in the box frame.
std::array<Eigen::Vector2d, 4> box_corners_bev(const Box3D& box);

// 3D corners: the four BEV corners extruded to z = center.z -/+ height/2,
// bottom face first.
std::array<Eigen::Vector3d, 8> box_corners_3d(const Box3D& box);

}  // namespace rcbev
