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

#include "rcbev/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rcbev/errors.hpp"

namespace rcbev {

namespace {

using Json = nlohmann::ordered_json;

// Field-path context for schema errors.
struct Ctx {
  std::string where;
  Ctx field(const std::string& name) const { return Ctx{where + "." + name}; }
  Ctx index(std::size_t i) const { return Ctx{where + "[" + std::to_string(i) + "]"}; }
  [[noreturn]] void fail(const std::string& message) const {
    throw FormatError(where + ": " + message);
  }
};

const Json& require(const Json& obj, const std::string& key, const Ctx& ctx) {
  const auto it = obj.find(key);
  if (it == obj.end()) ctx.fail("missing field '" + key + "'");
  return *it;
}

void check_keys(const Json& obj, std::initializer_list<const char*> allowed, const Ctx& ctx) {
  if (!obj.is_object()) ctx.fail("expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* k) { return key == k; }) == allowed.end()) {
      ctx.fail("unknown field '" + key + "'");
    }
  }
}

double as_number(const Json& value, const Ctx& ctx) {
  if (!value.is_number()) ctx.fail("expected a number");
  return value.get<double>();
}

Eigen::Vector3d parse_vec3(const Json& value, const Ctx& ctx) {
  if (!value.is_array() || value.size() != 3) ctx.fail("expected an array of 3 numbers");
  return {as_number(value[0], ctx), as_number(value[1], ctx), as_number(value[2], ctx)};
}

Eigen::Matrix3d parse_mat3(const Json& value, const Ctx& ctx) {
  if (!value.is_array() || value.size() != 3) ctx.fail("expected a 3x3 matrix");
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r) {
    const Json& row = value[r];
    if (!row.is_array() || row.size() != 3) ctx.fail("expected a 3x3 matrix");
    for (int c = 0; c < 3; ++c) m(r, c) = as_number(row[c], ctx);
  }
  return m;
}

Pose parse_pose(const Json& value, const Ctx& ctx) {
  check_keys(value, {"rotation", "translation"}, ctx);
  Pose pose;
  pose.rotation = parse_mat3(require(value, "rotation", ctx), ctx.field("rotation"));
  pose.translation = parse_vec3(require(value, "translation", ctx), ctx.field("translation"));
  if (!pose.is_valid()) ctx.fail("rotation is not orthonormal with determinant +1");
  return pose;
}

CameraModel parse_camera(const Json& value, const Ctx& ctx) {
  check_keys(value, {"intrinsics", "extrinsics", "width", "height"}, ctx);
  CameraModel camera;
  camera.intrinsics = parse_mat3(require(value, "intrinsics", ctx), ctx.field("intrinsics"));
  camera.extrinsics = parse_pose(require(value, "extrinsics", ctx), ctx.field("extrinsics"));
  camera.width = static_cast<int>(as_number(require(value, "width", ctx), ctx.field("width")));
  camera.height =
      static_cast<int>(as_number(require(value, "height", ctx), ctx.field("height")));
  if (camera.fx() <= 0.0 || camera.fy() <= 0.0) {
    ctx.field("intrinsics").fail("focal lengths must be positive");
  }
  if (!camera.is_valid()) ctx.fail("invalid camera (check principal point and image size)");
  return camera;
}

Box3D parse_box(const Json& value, const Ctx& ctx) {
  check_keys(value, {"center", "size", "yaw", "velocity", "class", "attribute", "score"}, ctx);
  Box3D box;
  box.center = parse_vec3(require(value, "center", ctx), ctx.field("center"));
  box.size = parse_vec3(require(value, "size", ctx), ctx.field("size"));
  if (!(box.size.array() > 0.0).all()) ctx.field("size").fail("sizes must be positive");
  box.yaw = normalize_yaw(as_number(require(value, "yaw", ctx), ctx.field("yaw")));
  const Json& vel = require(value, "velocity", ctx);
  if (!vel.is_array() || vel.size() != 2) {
    ctx.field("velocity").fail("expected an array of 2 numbers");
  }
  box.velocity = {as_number(vel[0], ctx.field("velocity")),
                  as_number(vel[1], ctx.field("velocity"))};
  const std::string class_str = require(value, "class", ctx).get<std::string>();
  const auto class_id = class_from_name(class_str);
  if (!class_id) ctx.field("class").fail("unknown class '" + class_str + "'");
  box.class_id = *class_id;
  if (value.contains("attribute")) {
    box.attribute_id = static_cast<int>(as_number(value["attribute"], ctx.field("attribute")));
  }
  if (value.contains("score")) {
    box.score = as_number(value["score"], ctx.field("score"));
    if (*box.score < 0.0 || *box.score > 1.0) ctx.field("score").fail("score must be in [0,1]");
  }
  return box;
}

FrameRecord parse_frame(const Json& value, int line_number) {
  Ctx ctx{"line " + std::to_string(line_number)};
  if (!value.is_object()) ctx.fail("expected a JSON object per line");
  if (value.contains("frame_id") && value["frame_id"].is_string()) {
    ctx.where = "frame '" + value["frame_id"].get<std::string>() + "'";
  }
  check_keys(value,
             {"frame_id", "timestamp_us", "ego_pose", "camera", "radar_dims", "radar_sweeps",
              "annotations", "image_features", "depth_dist", "feature_stride"},
             ctx);

  FrameRecord frame;
  frame.frame_id = require(value, "frame_id", ctx).get<std::string>();
  const Json& ts = require(value, "timestamp_us", ctx);
  if (!ts.is_number_integer()) ctx.field("timestamp_us").fail("expected an integer");
  frame.timestamp_us = ts.get<std::int64_t>();
  if (value.contains("ego_pose")) {
    frame.ego_pose = parse_pose(value["ego_pose"], ctx.field("ego_pose"));
  }
  if (value.contains("camera")) {
    frame.camera = parse_camera(value["camera"], ctx.field("camera"));
  }
  if (value.contains("radar_dims")) {
    const std::string dims = value["radar_dims"].get<std::string>();
    if (dims == "2+1d") {
      frame.radar_dims = RadarDims::k2_1d;
    } else if (dims == "3+1d") {
      frame.radar_dims = RadarDims::k3_1d;
    } else {
      ctx.field("radar_dims").fail("expected '2+1d' or '3+1d'");
    }
  }
  if (value.contains("radar_sweeps")) {
    const Json& sweeps = value["radar_sweeps"];
    const Ctx sweeps_ctx = ctx.field("radar_sweeps");
    if (!sweeps.is_array()) sweeps_ctx.fail("expected an array");
    for (std::size_t i = 0; i < sweeps.size(); ++i) {
      const Ctx sweep_ctx = sweeps_ctx.index(i);
      check_keys(sweeps[i], {"timestamp_us", "ego_pose", "blob"}, sweep_ctx);
      SweepRef sweep;
      const Json& sweep_ts = require(sweeps[i], "timestamp_us", sweep_ctx);
      if (!sweep_ts.is_number_integer()) {
        sweep_ctx.field("timestamp_us").fail("expected an integer");
      }
      sweep.timestamp_us = sweep_ts.get<std::int64_t>();
      if (sweep.timestamp_us > frame.timestamp_us) {
        sweep_ctx.field("timestamp_us").fail("sweep timestamp is after the frame timestamp");
      }
      sweep.ego_pose = parse_pose(require(sweeps[i], "ego_pose", sweep_ctx),
                                  sweep_ctx.field("ego_pose"));
      sweep.blob = require(sweeps[i], "blob", sweep_ctx).get<std::string>();
      frame.radar_sweeps.push_back(std::move(sweep));
    }
  }
  if (value.contains("annotations")) {
    const Json& annotations = value["annotations"];
    const Ctx ann_ctx = ctx.field("annotations");
    if (!annotations.is_array()) ann_ctx.fail("expected an array");
    for (std::size_t i = 0; i < annotations.size(); ++i) {
      frame.annotations.push_back(parse_box(annotations[i], ann_ctx.index(i)));
    }
  }
  if (value.contains("image_features")) {
    frame.image_features = value["image_features"].get<std::string>();
  }
  if (value.contains("depth_dist")) frame.depth_dist = value["depth_dist"].get<std::string>();
  if (value.contains("feature_stride")) {
    frame.feature_stride =
        static_cast<int>(as_number(value["feature_stride"], ctx.field("feature_stride")));
    if (frame.feature_stride < 1) ctx.field("feature_stride").fail("stride must be >= 1");
  }
  return frame;
}

Json pose_to_json(const Pose& pose) {
  Json out;
  out["rotation"] = {{pose.rotation(0, 0), pose.rotation(0, 1), pose.rotation(0, 2)},
                     {pose.rotation(1, 0), pose.rotation(1, 1), pose.rotation(1, 2)},
                     {pose.rotation(2, 0), pose.rotation(2, 1), pose.rotation(2, 2)}};
  out["translation"] = {pose.translation.x(), pose.translation.y(), pose.translation.z()};
  return out;
}

Json frame_to_json(const FrameRecord& frame) {
  Json out;
  out["frame_id"] = frame.frame_id;
  out["timestamp_us"] = frame.timestamp_us;
  if (frame.ego_pose) out["ego_pose"] = pose_to_json(*frame.ego_pose);
  if (frame.camera) {
    Json cam;
    cam["intrinsics"] = {
        {frame.camera->intrinsics(0, 0), frame.camera->intrinsics(0, 1),
         frame.camera->intrinsics(0, 2)},
        {frame.camera->intrinsics(1, 0), frame.camera->intrinsics(1, 1),
         frame.camera->intrinsics(1, 2)},
        {frame.camera->intrinsics(2, 0), frame.camera->intrinsics(2, 1),
         frame.camera->intrinsics(2, 2)}};
    cam["extrinsics"] = pose_to_json(frame.camera->extrinsics);
    cam["width"] = frame.camera->width;
    cam["height"] = frame.camera->height;
    out["camera"] = std::move(cam);
  }
  out["radar_dims"] = frame.radar_dims == RadarDims::k2_1d ? "2+1d" : "3+1d";
  if (!frame.radar_sweeps.empty()) {
    Json sweeps = Json::array();
    for (const SweepRef& sweep : frame.radar_sweeps) {
      Json s;
      s["timestamp_us"] = sweep.timestamp_us;
      s["ego_pose"] = pose_to_json(sweep.ego_pose);
      s["blob"] = sweep.blob;
      sweeps.push_back(std::move(s));
    }
    out["radar_sweeps"] = std::move(sweeps);
  }
  Json annotations = Json::array();
  for (const Box3D& box : frame.annotations) {
    Json b;
    b["center"] = {box.center.x(), box.center.y(), box.center.z()};
    b["size"] = {box.size.x(), box.size.y(), box.size.z()};
    b["yaw"] = box.yaw;
    b["velocity"] = {box.velocity.x(), box.velocity.y()};
    b["class"] = class_name(box.class_id);
    if (box.attribute_id >= 0) b["attribute"] = box.attribute_id;
    if (box.score) b["score"] = *box.score;
    annotations.push_back(std::move(b));
  }
  out["annotations"] = std::move(annotations);
  if (!frame.image_features.empty()) out["image_features"] = frame.image_features;
  if (!frame.depth_dist.empty()) out["depth_dist"] = frame.depth_dist;
  if (frame.feature_stride != 1) out["feature_stride"] = frame.feature_stride;
  return out;
}

}  // namespace

FrameReader::FrameReader(const std::filesystem::path& manifest_path)
    : stream_(manifest_path), manifest_path_(manifest_path) {
  if (!stream_) throw FormatError("cannot open manifest " + manifest_path.string());
  root_ = manifest_path.parent_path();
}

std::optional<FrameRecord> FrameReader::next() {
  std::string line;
  while (std::getline(stream_, line)) {
    ++line_number_;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json value;
    try {
      value = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw FormatError(manifest_path_.string() + ":" + std::to_string(line_number_) + ": " +
                        e.what());
    }
    return parse_frame(value, line_number_);
  }
  return std::nullopt;
}

std::vector<FrameRecord> load_frames(const std::filesystem::path& manifest_path) {
  FrameReader reader(manifest_path);
  std::vector<FrameRecord> frames;
  while (auto frame = reader.next()) frames.push_back(std::move(*frame));
  return frames;
}

void write_frames(const std::filesystem::path& manifest_path,
                  std::span<const FrameRecord> frames) {
  std::ostringstream body;
  for (const FrameRecord& frame : frames) body << frame_to_json(frame).dump() << "\n";
  const std::filesystem::path tmp = manifest_path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string());
    out << body.str();
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, manifest_path);
}

std::vector<RadarPoint> load_radar_blob(const std::filesystem::path& path, RadarDims dims) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw FormatError("cannot open radar blob " + path.string());
  const std::streamsize bytes = in.tellg();
  in.seekg(0);

  const int record_floats = dims == RadarDims::k3_1d ? 5 : 4;
  const std::streamsize record_bytes = record_floats * static_cast<std::streamsize>(sizeof(float));
  if (bytes % record_bytes != 0) {
    throw FormatError("radar blob " + path.string() + ": size " + std::to_string(bytes) +
                      " is not a multiple of the " + std::to_string(record_floats) +
                      "-float record");
  }
  const std::size_t count = static_cast<std::size_t>(bytes / record_bytes);
  std::vector<float> raw(count * record_floats);
  in.read(reinterpret_cast<char*>(raw.data()), bytes);
  if (!in) throw FormatError("truncated radar blob " + path.string());

  std::vector<RadarPoint> points(count);
  for (std::size_t i = 0; i < count; ++i) {
    const float* r = raw.data() + i * record_floats;
    RadarPoint& p = points[i];
    int c = 0;
    p.x = r[c++];
    p.y = r[c++];
    if (dims == RadarDims::k3_1d) p.z = r[c++];
    p.rcs = r[c++];
    p.v_r = r[c++];
  }
  return points;
}

void write_radar_blob(const std::filesystem::path& path, std::span<const RadarPoint> points,
                      RadarDims dims) {
  const int record_floats = dims == RadarDims::k3_1d ? 5 : 4;
  std::vector<float> raw;
  raw.reserve(points.size() * record_floats);
  for (const RadarPoint& p : points) {
    raw.push_back(static_cast<float>(p.x));
    raw.push_back(static_cast<float>(p.y));
    if (dims == RadarDims::k3_1d) raw.push_back(static_cast<float>(p.z));
    raw.push_back(static_cast<float>(p.rcs));
    raw.push_back(static_cast<float>(p.v_r));
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string());
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size() * sizeof(float)));
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<Box3D> filter_fov(std::span<const Box3D> boxes, const CameraModel& camera) {
  std::vector<Eigen::Vector3d> centers;
  centers.reserve(boxes.size());
  for (const Box3D& box : boxes) centers.push_back(box.center);
  const auto pixels = project_to_image(camera, centers);

  std::vector<Box3D> kept;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (pixels[i].valid) kept.push_back(boxes[i]);
  }
  return kept;
}

std::vector<int> cbgs_resample(std::span<const FrameRecord> frames,
                               const ClassGroupConfig& config, std::uint32_t seed) {
  // Groups must partition the class set.
  std::array<int, kNumClasses> group_of;
  group_of.fill(-1);
  for (std::size_t g = 0; g < config.groups.size(); ++g) {
    for (ClassId id : config.groups[g]) {
      const int k = static_cast<int>(id);
      if (group_of[k] != -1) {
        throw std::invalid_argument("cbgs_resample: class in more than one group");
      }
      group_of[k] = static_cast<int>(g);
    }
  }
  for (int k = 0; k < kNumClasses; ++k) {
    if (group_of[k] == -1) throw std::invalid_argument("cbgs_resample: class missing from groups");
  }
  if (config.max_factor < 1.0) {
    throw std::invalid_argument("cbgs_resample: max_factor must be >= 1");
  }
  if (frames.empty()) return {};

  // Frames containing at least one box of each group.
  const std::size_t num_groups = config.groups.size();
  std::vector<std::int64_t> group_frames(num_groups, 0);
  std::vector<std::vector<bool>> has_group(frames.size(),
                                           std::vector<bool>(num_groups, false));
  for (std::size_t i = 0; i < frames.size(); ++i) {
    for (const Box3D& box : frames[i].annotations) {
      has_group[i][group_of[static_cast<int>(box.class_id)]] = true;
    }
    for (std::size_t g = 0; g < num_groups; ++g) {
      if (has_group[i][g]) ++group_frames[g];
    }
  }
  const std::int64_t largest = *std::max_element(group_frames.begin(), group_frames.end());

  std::vector<double> factor(num_groups, 1.0);
  for (std::size_t g = 0; g < num_groups; ++g) {
    if (group_frames[g] > 0 && largest > 0) {
      factor[g] = std::min(config.max_factor,
                           std::pow(static_cast<double>(largest) / group_frames[g],
                                    config.temperature));
    }
  }

  std::mt19937 rng(seed);
  std::vector<int> indices;
  indices.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    double frame_factor = 1.0;
    for (std::size_t g = 0; g < num_groups; ++g) {
      if (has_group[i][g]) frame_factor = std::max(frame_factor, factor[g]);
    }
    const int whole = static_cast<int>(std::floor(frame_factor));
    const double fraction = frame_factor - whole;
    const double u = rng() / 4294967296.0;
    const int copies = whole + (u < fraction ? 1 : 0);
    for (int c = 0; c < copies; ++c) indices.push_back(static_cast<int>(i));
  }
  return indices;
}

double compensate_radial_velocity(double raw_v_r, const Eigen::Vector3d& point_position,
                                  const Eigen::Vector3d& ego_velocity) {
  const double range = point_position.norm();
  if (range < 1e-9) return raw_v_r;  // direction undefined at the sensor origin
  return raw_v_r + ego_velocity.dot(point_position) / range;
}

}  // namespace rcbev
