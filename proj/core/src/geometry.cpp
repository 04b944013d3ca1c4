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

#include "rcbev/geometry.hpp"

#include <Eigen/LU>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rcbev {

namespace {
constexpr double kPi = std::numbers::pi;

const std::array<std::string, kNumClasses> kClassNames = {"pedestrian", "cyclist", "car"};
}  // namespace

const std::string& class_name(ClassId id) { return kClassNames[static_cast<int>(id)]; }

std::optional<ClassId> class_from_name(const std::string& name) {
  for (int i = 0; i < kNumClasses; ++i) {
    if (kClassNames[i] == name) return static_cast<ClassId>(i);
  }
  return std::nullopt;
}

Pose Pose::from_yaw(double yaw, const Eigen::Vector3d& translation) {
  Pose pose;
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  pose.rotation << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  pose.translation = translation;
  return pose;
}

Pose Pose::inverse() const {
  Pose inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

Pose Pose::operator*(const Pose& rhs) const {
  Pose out;
  out.rotation = rotation * rhs.rotation;
  out.translation = rotation * rhs.translation + translation;
  return out;
}

Eigen::Vector3d Pose::operator*(const Eigen::Vector3d& point) const {
  return rotation * point + translation;
}

bool Pose::is_valid(double tolerance) const {
  const Eigen::Matrix3d gram = rotation.transpose() * rotation;
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tolerance) return false;
  return std::abs(rotation.determinant() - 1.0) <= tolerance;
}

bool CameraModel::is_valid() const {
  if (width <= 0 || height <= 0) return false;
  if (fx() <= 0.0 || fy() <= 0.0) return false;
  if (cx() <= 0.0 || cx() >= width) return false;
  if (cy() <= 0.0 || cy() >= height) return false;
  return extrinsics.is_valid();
}

bool Box3D::is_valid() const {
  if (!(size.array() > 0.0).all()) return false;
  if (yaw <= -kPi || yaw > kPi) return false;
  if (score && (*score < 0.0 || *score > 1.0)) return false;
  return center.allFinite() && velocity.allFinite();
}

namespace {
int extent_cells(double lo, double hi, double step) {
  return static_cast<int>(std::llround((hi - lo) / step));
}
}  // namespace

int GridConfig::rows() const { return extent_cells(x_min, x_max, step); }
int GridConfig::cols() const { return extent_cells(y_min, y_max, step); }

std::optional<std::pair<int, int>> GridConfig::cell_of(double x, double y) const {
  if (!std::isfinite(x) || !std::isfinite(y)) return std::nullopt;
  const int row = static_cast<int>(std::floor((x - x_min) / step));
  const int col = static_cast<int>(std::floor((y - y_min) / step));
  if (row < 0 || row >= rows() || col < 0 || col >= cols()) return std::nullopt;
  return std::make_pair(row, col);
}

void GridConfig::validate() const {
  if (!(step > 0.0)) throw std::invalid_argument("GridConfig: step must be > 0");
  if (!(x_max > x_min) || !(y_max > y_min)) {
    throw std::invalid_argument("GridConfig: empty extent");
  }
  for (const auto& [lo, hi, axis] :
       {std::tuple{x_min, x_max, 'x'}, std::tuple{y_min, y_max, 'y'}}) {
    const double cells = (hi - lo) / step;
    if (std::abs(cells - std::round(cells)) > 1e-9) {
      throw std::invalid_argument(std::string("GridConfig: ") + axis +
                                  " extent is not an integer multiple of step");
    }
  }
}

double normalize_yaw(double yaw) {
  double wrapped = std::fmod(yaw + kPi, 2.0 * kPi);
  if (wrapped <= 0.0) wrapped += 2.0 * kPi;
  return wrapped - kPi;
}

double angle_difference(double a, double b) {
  const double diff = std::abs(normalize_yaw(a - b));
  // normalize_yaw maps to (-pi, pi], so |diff| is already in [0, pi].
  return diff;
}

std::vector<Eigen::Vector3d> transform_points(const Pose& pose,
                                              std::span<const Eigen::Vector3d> points) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(pose * p);
  return out;
}

std::vector<PixelPoint> project_to_image(const CameraModel& camera,
                                         std::span<const Eigen::Vector3d> points_ego) {
  std::vector<PixelPoint> out;
  out.reserve(points_ego.size());
  for (const auto& p : points_ego) {
    const Eigen::Vector3d pc = camera.extrinsics * p;
    PixelPoint pixel;
    pixel.depth = pc.z();
    if (pc.z() > 0.0) {
      pixel.u = camera.fx() * pc.x() / pc.z() + camera.cx();
      pixel.v = camera.fy() * pc.y() / pc.z() + camera.cy();
      // Closed bounds: points exactly on the border count as valid.
      pixel.valid = pixel.u >= 0.0 && pixel.u <= camera.width && pixel.v >= 0.0 &&
                    pixel.v <= camera.height;
    }
    out.push_back(pixel);
  }
  return out;
}

Eigen::Vector3d unproject_pixel(const CameraModel& camera, double u, double v, double depth) {
  const Eigen::Vector3d pc(depth * (u - camera.cx()) / camera.fx(),
                           depth * (v - camera.cy()) / camera.fy(), depth);
  return camera.extrinsics.inverse() * pc;
}

std::array<Eigen::Vector2d, 4> box_corners_bev(const Box3D& box) {
  const double hl = 0.5 * box.length();
  const double hw = 0.5 * box.width();
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const std::array<Eigen::Vector2d, 4> local = {
      Eigen::Vector2d(hl, hw), Eigen::Vector2d(-hl, hw), Eigen::Vector2d(-hl, -hw),
      Eigen::Vector2d(hl, -hw)};
  std::array<Eigen::Vector2d, 4> out;
  for (int i = 0; i < 4; ++i) {
    out[i] = Eigen::Vector2d(c * local[i].x() - s * local[i].y() + box.center.x(),
                             s * local[i].x() + c * local[i].y() + box.center.y());
  }
  return out;
}

std::array<Eigen::Vector3d, 8> box_corners_3d(const Box3D& box) {
  const auto bev = box_corners_bev(box);
  const double z_lo = box.center.z() - 0.5 * box.height();
  const double z_hi = box.center.z() + 0.5 * box.height();
  std::array<Eigen::Vector3d, 8> out;
  for (int i = 0; i < 4; ++i) {
    out[i] = Eigen::Vector3d(bev[i].x(), bev[i].y(), z_lo);
    out[i + 4] = Eigen::Vector3d(bev[i].x(), bev[i].y(), z_hi);
  }
  return out;
}

}  // namespace rcbev
