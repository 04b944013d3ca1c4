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

#include "rcbev/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "rcbev/camera_bev.hpp"
#include "rcbev/errors.hpp"
#include "rcbev/tensor_file.hpp"

namespace rcbev {

namespace {

using Json = nlohmann::ordered_json;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void write_text_atomic(const std::filesystem::path& path, const std::string& body) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string());
    out << body;
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void check_config_keys(const Json& obj, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* k) { return key == k; }) == allowed.end()) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read_into(const Json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

std::vector<double> DepthBinConfig::depths() const {
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = first + i * step;
  return out;
}

PipelineConfig PipelineConfig::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  Json root;
  try {
    root = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  check_config_keys(root,
                    {"grid", "num_sweeps", "use_radar", "use_camera", "pillars", "depth_bins",
                     "heatmap", "decode", "eval", "cbgs", "seed"},
                    path.string());

  PipelineConfig config;
  if (root.contains("grid")) {
    const Json& grid = root["grid"];
    check_config_keys(grid, {"x_min", "x_max", "y_min", "y_max", "step"}, "grid");
    read_into(grid, "x_min", config.grid.x_min);
    read_into(grid, "x_max", config.grid.x_max);
    read_into(grid, "y_min", config.grid.y_min);
    read_into(grid, "y_max", config.grid.y_max);
    read_into(grid, "step", config.grid.step);
  }
  read_into(root, "num_sweeps", config.num_sweeps);
  read_into(root, "use_radar", config.use_radar);
  read_into(root, "use_camera", config.use_camera);
  if (root.contains("pillars")) {
    const Json& pillars = root["pillars"];
    check_config_keys(pillars,
                      {"max_points_per_pillar", "max_pillars", "out_channels", "weights", "bias"},
                      "pillars");
    read_into(pillars, "max_points_per_pillar", config.pillars.max_points_per_pillar);
    read_into(pillars, "max_pillars", config.pillars.max_pillars);
    read_into(pillars, "out_channels", config.pillars.out_channels);
    read_into(pillars, "weights", config.pillars.weights);
    read_into(pillars, "bias", config.pillars.bias);
    // Weight paths are relative to the config file.
    for (std::string* p : {&config.pillars.weights, &config.pillars.bias}) {
      if (!p->empty() && std::filesystem::path(*p).is_relative()) {
        *p = (path.parent_path() / *p).string();
      }
    }
  }
  if (root.contains("depth_bins")) {
    const Json& bins = root["depth_bins"];
    check_config_keys(bins, {"first", "step", "count"}, "depth_bins");
    read_into(bins, "first", config.depth_bins.first);
    read_into(bins, "step", config.depth_bins.step);
    read_into(bins, "count", config.depth_bins.count);
  }
  if (root.contains("heatmap")) {
    const Json& heatmap = root["heatmap"];
    check_config_keys(heatmap, {"min_overlap", "min_radius"}, "heatmap");
    read_into(heatmap, "min_overlap", config.heatmap.min_overlap);
    read_into(heatmap, "min_radius", config.heatmap.min_radius);
  }
  if (root.contains("decode")) {
    const Json& decode = root["decode"];
    check_config_keys(decode, {"score_threshold", "max_detections", "nms_kernel"}, "decode");
    read_into(decode, "score_threshold", config.decode.score_threshold);
    read_into(decode, "max_detections", config.decode.max_detections);
    read_into(decode, "nms_kernel", config.decode.nms_kernel);
  }
  if (root.contains("eval")) {
    const Json& eval = root["eval"];
    check_config_keys(
        eval, {"protocol", "center_distance_thresholds", "tp_error_threshold", "iou_thresholds"},
        "eval");
    read_into(eval, "protocol", config.eval.protocol);
    read_into(eval, "center_distance_thresholds", config.eval.nuscenes.distance_thresholds);
    read_into(eval, "tp_error_threshold", config.eval.nuscenes.tp_error_threshold);
    if (eval.contains("iou_thresholds")) {
      const Json& thresholds = eval["iou_thresholds"];
      check_config_keys(thresholds, {"pedestrian", "cyclist", "car"}, "eval.iou_thresholds");
      for (int k = 0; k < kNumClasses; ++k) {
        const std::string& name = class_name(static_cast<ClassId>(k));
        if (thresholds.contains(name)) {
          config.eval.vod.iou_thresholds[k] = thresholds[name].get<double>();
        }
      }
    }
  }
  if (root.contains("cbgs")) {
    const Json& cbgs = root["cbgs"];
    check_config_keys(cbgs, {"groups", "temperature", "max_factor"}, "cbgs");
    if (cbgs.contains("groups")) {
      config.cbgs.groups.clear();
      for (const Json& group : cbgs["groups"]) {
        std::vector<ClassId> ids;
        for (const Json& name : group) {
          const auto id = class_from_name(name.get<std::string>());
          if (!id) throw ConfigError("cbgs.groups: unknown class '" + name.get<std::string>() + "'");
          ids.push_back(*id);
        }
        config.cbgs.groups.push_back(std::move(ids));
      }
    }
    read_into(cbgs, "temperature", config.cbgs.temperature);
    read_into(cbgs, "max_factor", config.cbgs.max_factor);
  }
  read_into(root, "seed", config.seed);

  config.validate();
  return config;
}

void PipelineConfig::validate() const {
  try {
    grid.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (num_sweeps < 1) throw ConfigError("num_sweeps must be >= 1");
  if (!use_radar && !use_camera) throw ConfigError("at least one modality must be enabled");
  if (pillars.max_points_per_pillar < 1 || pillars.max_pillars < 1) {
    throw ConfigError("pillar capacities must be >= 1");
  }
  if (pillars.out_channels < 1) throw ConfigError("pillars.out_channels must be >= 1");
  if (depth_bins.count < 1 || !(depth_bins.step > 0.0) || !(depth_bins.first > 0.0)) {
    throw ConfigError("depth_bins must have positive first depth, step, and count");
  }
  if (heatmap.min_overlap <= 0.0 || heatmap.min_overlap >= 1.0) {
    throw ConfigError("heatmap.min_overlap must be in (0, 1)");
  }
  if (heatmap.min_radius < 0) throw ConfigError("heatmap.min_radius must be >= 0");
  if (decode.score_threshold < 0.0 || decode.score_threshold > 1.0) {
    throw ConfigError("decode.score_threshold must be in [0, 1]");
  }
  if (decode.max_detections < 1) throw ConfigError("decode.max_detections must be >= 1");
  if (decode.nms_kernel < 1 || decode.nms_kernel % 2 == 0) {
    throw ConfigError("decode.nms_kernel must be odd and positive");
  }
  if (eval.protocol != "nuscenes" && eval.protocol != "vod") {
    throw ConfigError("eval.protocol must be 'nuscenes' or 'vod'");
  }
  if (eval.nuscenes.distance_thresholds.empty()) {
    throw ConfigError("eval.center_distance_thresholds must not be empty");
  }
  for (double t : eval.nuscenes.distance_thresholds) {
    if (!(t > 0.0)) throw ConfigError("eval.center_distance_thresholds must be positive");
  }
  if (!(eval.nuscenes.tp_error_threshold > 0.0)) {
    throw ConfigError("eval.tp_error_threshold must be positive");
  }
  for (double t : eval.vod.iou_thresholds) {
    if (t <= 0.0 || t > 1.0) throw ConfigError("eval.iou_thresholds must be in (0, 1]");
  }
  std::array<int, kNumClasses> seen{};
  for (const auto& group : cbgs.groups) {
    for (ClassId id : group) ++seen[static_cast<int>(id)];
  }
  for (int k = 0; k < kNumClasses; ++k) {
    if (seen[k] != 1) throw ConfigError("cbgs.groups must partition the class set");
  }
  if (cbgs.max_factor < 1.0) throw ConfigError("cbgs.max_factor must be >= 1");
  if (cbgs.temperature < 0.0) throw ConfigError("cbgs.temperature must be >= 0");
}

std::uint32_t frame_seed(std::uint32_t run_seed, const std::string& frame_id) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (const char c : frame_id) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return run_seed ^ static_cast<std::uint32_t>(h ^ (h >> 32));
}

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, count);
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const int i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        const std::scoped_lock lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (int w = 0; w < workers; ++w) threads.emplace_back(body);
  for (std::thread& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

namespace {

std::vector<float> tensor_as_f32(const Tensor& tensor) {
  if (tensor.dtype == TensorDtype::kFloat32) return tensor.f32;
  const std::vector<double> wide = tensor.as_f64();
  return std::vector<float>(wide.begin(), wide.end());
}

PointNetWeights load_pointnet_weights(const PillarConfig& pillars, int feat_dim) {
  if (pillars.weights.empty()) {
    return PointNetWeights::identity(feat_dim, pillars.out_channels);
  }
  const Tensor linear = read_tensor(pillars.weights);
  if (linear.dims.size() != 2 || linear.dims[0] != feat_dim ||
      linear.dims[1] != pillars.out_channels) {
    throw ConfigError("pillars.weights: expected shape [" + std::to_string(feat_dim) + ", " +
                      std::to_string(pillars.out_channels) + "]");
  }
  PointNetWeights weights;
  const std::vector<float> linear_data = tensor_as_f32(linear);
  weights.linear = Eigen::Map<
      const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      linear_data.data(), feat_dim, pillars.out_channels);
  if (pillars.bias.empty()) {
    weights.bias = Eigen::VectorXf::Zero(pillars.out_channels);
  } else {
    const Tensor bias = read_tensor(pillars.bias);
    if (bias.dims.size() != 1 || bias.dims[0] != pillars.out_channels) {
      throw ConfigError("pillars.bias: expected shape [" +
                        std::to_string(pillars.out_channels) + "]");
    }
    const std::vector<float> bias_data = tensor_as_f32(bias);
    weights.bias = Eigen::Map<const Eigen::VectorXf>(bias_data.data(), pillars.out_channels);
  }
  return weights;
}

BevFeatureMap radar_branch(const PipelineConfig& config, const FrameRecord& frame,
                           const std::filesystem::path& root, const PointNetWeights* weights,
                           PreprocessSummary& stats, std::mutex& stats_mutex) {
  if (!frame.ego_pose) {
    throw FormatError("frame '" + frame.frame_id + "': ego_pose required for sweep accumulation");
  }
  std::vector<RadarSweepCloud> sweeps;
  sweeps.reserve(frame.radar_sweeps.size());
  for (const SweepRef& ref : frame.radar_sweeps) {
    RadarSweepCloud sweep;
    sweep.points = load_radar_blob(root / ref.blob, frame.radar_dims);
    sweep.ego_pose = ref.ego_pose;
    sweep.timestamp = ref.timestamp_us * 1e-6;
    sweeps.push_back(std::move(sweep));
  }
  std::stable_sort(sweeps.begin(), sweeps.end(),
                   [](const RadarSweepCloud& a, const RadarSweepCloud& b) {
                     return a.timestamp > b.timestamp;
                   });

  const AccumulatedCloud cloud = accumulate_sweeps(sweeps, *frame.ego_pose,
                                                   frame.timestamp_us * 1e-6, config.num_sweeps);
  const PillarTensor pillars =
      pillarize(cloud.points, frame.radar_dims, config.grid, config.pillars.max_points_per_pillar,
                config.pillars.max_pillars, frame_seed(config.seed, frame.frame_id));

  PointNetWeights local;
  if (weights == nullptr) {
    local = PointNetWeights::identity(pillars.feat_dim, config.pillars.out_channels);
    weights = &local;
  }
  const PillarFeatures encoded = pointnet_encode(pillars, *weights);

  {
    const std::scoped_lock lock(stats_mutex);
    stats.radar_points_total += static_cast<std::int64_t>(cloud.points.size());
    stats.radar_points_in_grid += pillars.points_in_grid;
    stats.radar_points_dropped += pillars.points_dropped;
  }
  return scatter_to_bev(encoded, pillars.pillar_coords, config.grid);
}

BevFeatureMap camera_branch(const PipelineConfig& config, const FrameRecord& frame,
                            const std::filesystem::path& root) {
  if (!frame.camera) {
    throw FormatError("frame '" + frame.frame_id + "': camera required for the camera branch");
  }
  if (frame.image_features.empty() || frame.depth_dist.empty()) {
    throw FormatError("frame '" + frame.frame_id +
                      "': image_features and depth_dist tensors required");
  }
  const Tensor feat_tensor = read_tensor(root / frame.image_features);
  if (feat_tensor.dims.size() != 3 || feat_tensor.dtype != TensorDtype::kFloat32) {
    throw FormatError("frame '" + frame.frame_id + "': image_features must be a f32 [C,H,W] tensor");
  }
  ImageFeatureMap features;
  features.channels = static_cast<int>(feat_tensor.dims[0]);
  features.height = static_cast<int>(feat_tensor.dims[1]);
  features.width = static_cast<int>(feat_tensor.dims[2]);
  features.stride = frame.feature_stride;
  features.data = feat_tensor.f32;
  if (features.height * features.stride > frame.camera->height ||
      features.width * features.stride > frame.camera->width) {
    throw FormatError("frame '" + frame.frame_id +
                      "': feature map times stride exceeds the image size");
  }
  for (const float v : features.data) {
    if (!std::isfinite(v)) {
      throw FormatError("frame '" + frame.frame_id + "': non-finite image feature");
    }
  }

  const Tensor depth_tensor = read_tensor(root / frame.depth_dist);
  if (depth_tensor.dims.size() != 3 || depth_tensor.dtype != TensorDtype::kFloat32) {
    throw FormatError("frame '" + frame.frame_id + "': depth_dist must be a f32 [D,H,W] tensor");
  }
  DepthDistribution depth;
  depth.bins = static_cast<int>(depth_tensor.dims[0]);
  depth.height = static_cast<int>(depth_tensor.dims[1]);
  depth.width = static_cast<int>(depth_tensor.dims[2]);
  depth.probs = depth_tensor.f32;
  if (depth.bins != config.depth_bins.count) {
    throw ConfigError("frame '" + frame.frame_id + "': depth tensor has " +
                      std::to_string(depth.bins) + " bins, config expects " +
                      std::to_string(config.depth_bins.count));
  }
  depth.bin_depths = config.depth_bins.depths();
  depth.validate();

  return splat(lift(features, depth, *frame.camera), config.grid);
}

struct TargetStats {
  std::int64_t boxes_total = 0;
  std::int64_t dropped_fov = 0;
  std::int64_t dropped_grid = 0;
};

TargetMaps frame_targets(const PipelineConfig& config, const FrameRecord& frame,
                         TargetStats& stats) {
  std::vector<Box3D> boxes(frame.annotations.begin(), frame.annotations.end());
  stats.boxes_total += static_cast<std::int64_t>(boxes.size());
  if (frame.camera) {
    const std::size_t before = boxes.size();
    boxes = filter_fov(boxes, *frame.camera);
    stats.dropped_fov += static_cast<std::int64_t>(before - boxes.size());
  }
  std::vector<Box3D> in_grid;
  for (const Box3D& box : boxes) {
    if (config.grid.cell_of(box.center.x(), box.center.y())) in_grid.push_back(box);
  }
  stats.dropped_grid += static_cast<std::int64_t>(boxes.size() - in_grid.size());
  return render_targets(in_grid, config.grid, kNumClasses, config.heatmap);
}

void write_target_tensors(const TargetMaps& targets, const std::filesystem::path& out_dir,
                          const std::string& frame_id) {
  const std::int64_t rows = targets.grid.rows();
  const std::int64_t cols = targets.grid.cols();
  const std::int64_t classes = targets.num_classes;
  write_tensor(out_dir / (frame_id + ".heatmap.rcbt"),
               std::array<std::int64_t, 3>{classes, rows, cols}, targets.heatmaps);
  write_tensor(out_dir / (frame_id + ".reg.rcbt"),
               std::array<std::int64_t, 3>{kNumRegChannels, rows, cols}, targets.regressions);
  std::vector<std::int32_t> mask(targets.mask.begin(), targets.mask.end());
  write_tensor(out_dir / (frame_id + ".mask.rcbt"), std::array<std::int64_t, 2>{rows, cols},
               std::span<const std::int32_t>(mask));
  write_tensor(out_dir / (frame_id + ".attr.rcbt"), std::array<std::int64_t, 2>{rows, cols},
               std::span<const std::int32_t>(targets.attributes));
}

}  // namespace

PreprocessSummary run_preprocess(const PipelineConfig& config,
                                 const std::filesystem::path& dataset_manifest,
                                 const std::filesystem::path& out_dir, int workers,
                                 std::ostream& log) {
  config.validate();
  FrameReader reader(dataset_manifest);
  const std::filesystem::path root = reader.root();
  std::vector<FrameRecord> frames;
  while (auto frame = reader.next()) frames.push_back(std::move(*frame));
  std::filesystem::create_directories(out_dir);

  PreprocessSummary summary;
  summary.frames = static_cast<int>(frames.size());
  std::mutex stats_mutex;

  // Weights depend on the radar feature width; load per distinct dims.
  std::map<RadarDims, PointNetWeights> weights;
  if (config.use_radar) {
    for (const FrameRecord& frame : frames) {
      if (!weights.contains(frame.radar_dims)) {
        weights.emplace(frame.radar_dims,
                        load_pointnet_weights(config.pillars, feature_dim(frame.radar_dims)));
      }
    }
  }

  parallel_for(static_cast<int>(frames.size()), workers, [&](int i) {
    const FrameRecord& frame = frames[i];

    BevFeatureMap fused;
    bool have_map = false;
    if (config.use_camera) {
      const auto start = std::chrono::steady_clock::now();
      fused = camera_branch(config, frame, root);
      have_map = true;
      const std::scoped_lock lock(stats_mutex);
      summary.seconds_camera += seconds_since(start);
    }
    if (config.use_radar) {
      const auto start = std::chrono::steady_clock::now();
      BevFeatureMap radar_map =
          radar_branch(config, frame, root, weights.contains(frame.radar_dims)
                                                ? &weights.at(frame.radar_dims)
                                                : nullptr,
                       summary, stats_mutex);
      fused = have_map ? concat_bev(fused, radar_map) : std::move(radar_map);
      have_map = true;
      const std::scoped_lock lock(stats_mutex);
      summary.seconds_radar += seconds_since(start);
    }

    TargetStats target_stats;
    const auto targets_start = std::chrono::steady_clock::now();
    const TargetMaps targets = frame_targets(config, frame, target_stats);
    {
      const std::scoped_lock lock(stats_mutex);
      summary.seconds_targets += seconds_since(targets_start);
      summary.boxes_total += target_stats.boxes_total;
      summary.boxes_dropped_fov += target_stats.dropped_fov;
      summary.boxes_dropped_grid += target_stats.dropped_grid;
    }

    const auto io_start = std::chrono::steady_clock::now();
    write_tensor(out_dir / (frame.frame_id + ".fused.rcbt"),
                 std::array<std::int64_t, 3>{fused.channels, fused.grid.rows(),
                                             fused.grid.cols()},
                 fused.data);
    write_target_tensors(targets, out_dir, frame.frame_id);
    const std::scoped_lock lock(stats_mutex);
    summary.seconds_io += seconds_since(io_start);
  });

  log << "preprocess: " << summary.frames << " frames -> " << out_dir.string() << "\n"
      << "  radar:   " << std::fixed << std::setprecision(3) << summary.seconds_radar
      << " s  (points: " << summary.radar_points_total << " accumulated, "
      << summary.radar_points_in_grid << " in grid, " << summary.radar_points_dropped
      << " dropped by capacity)\n"
      << "  camera:  " << summary.seconds_camera << " s\n"
      << "  targets: " << summary.seconds_targets << " s  (boxes: " << summary.boxes_total
      << " total, " << summary.boxes_dropped_fov << " outside fov, "
      << summary.boxes_dropped_grid << " outside grid)\n"
      << "  io:      " << summary.seconds_io << " s\n";
  return summary;
}

void run_render_targets(const PipelineConfig& config,
                        const std::filesystem::path& dataset_manifest,
                        const std::filesystem::path& out_dir, int workers, std::ostream& log) {
  config.validate();
  const std::vector<FrameRecord> frames = load_frames(dataset_manifest);
  std::filesystem::create_directories(out_dir);

  std::mutex stats_mutex;
  TargetStats stats;
  parallel_for(static_cast<int>(frames.size()), workers, [&](int i) {
    TargetStats local;
    const TargetMaps targets = frame_targets(config, frames[i], local);
    write_target_tensors(targets, out_dir, frames[i].frame_id);
    const std::scoped_lock lock(stats_mutex);
    stats.boxes_total += local.boxes_total;
    stats.dropped_fov += local.dropped_fov;
    stats.dropped_grid += local.dropped_grid;
  });
  log << "render-targets: " << frames.size() << " frames, " << stats.boxes_total << " boxes ("
      << stats.dropped_fov << " outside fov, " << stats.dropped_grid << " outside grid) -> "
      << out_dir.string() << "\n";
}

void run_decode(const PipelineConfig& config, const std::filesystem::path& dataset_manifest,
                const std::filesystem::path& tensors_dir,
                const std::filesystem::path& out_file, int workers, std::ostream& log) {
  config.validate();
  const std::vector<FrameRecord> frames = load_frames(dataset_manifest);
  std::vector<FrameRecord> predictions(frames.size());

  std::atomic<std::int64_t> total_detections{0};
  parallel_for(static_cast<int>(frames.size()), workers, [&](int i) {
    const std::string& id = frames[i].frame_id;
    const Tensor heat = read_tensor(tensors_dir / (id + ".heatmap.rcbt"));
    const Tensor reg = read_tensor(tensors_dir / (id + ".reg.rcbt"));
    if (heat.dims.size() != 3 || heat.dims[0] != kNumClasses ||
        heat.dims[1] != config.grid.rows() || heat.dims[2] != config.grid.cols()) {
      throw FormatError("frame '" + id + "': heatmap tensor shape does not match the grid");
    }
    // External frameworks may hand off either precision.
    std::vector<float> heat_data;
    if (heat.dtype == TensorDtype::kFloat32) {
      heat_data = heat.f32;
    } else {
      const std::vector<double> wide = heat.as_f64();
      heat_data.assign(wide.begin(), wide.end());
    }
    if (reg.dims.size() != 3 || reg.dims[0] != kNumRegChannels ||
        reg.dims[1] != config.grid.rows() || reg.dims[2] != config.grid.cols()) {
      throw FormatError("frame '" + id + "': regression tensor shape does not match the grid");
    }
    const std::vector<double> regressions = reg.as_f64();

    std::vector<std::int32_t> attributes;
    const std::filesystem::path attr_path = tensors_dir / (id + ".attr.rcbt");
    if (std::filesystem::exists(attr_path)) {
      Tensor attr = read_tensor(attr_path);
      if (attr.dtype != TensorDtype::kInt32 || attr.dims.size() != 2 ||
          attr.dims[0] != config.grid.rows() || attr.dims[1] != config.grid.cols()) {
        throw FormatError("frame '" + id + "': attribute tensor must be i32 [rows, cols]");
      }
      attributes = std::move(attr.i32);
    }

    const std::vector<Detection> detections =
        decode_detections(heat_data, kNumClasses, regressions, attributes, config.grid,
                          config.decode);
    FrameRecord out;
    out.frame_id = id;
    out.timestamp_us = frames[i].timestamp_us;
    out.radar_dims = frames[i].radar_dims;
    out.annotations.reserve(detections.size());
    for (const Detection& det : detections) out.annotations.push_back(det.box);
    total_detections += static_cast<std::int64_t>(detections.size());
    predictions[i] = std::move(out);
  });

  write_frames(out_file, predictions);
  log << "decode: " << frames.size() << " frames, " << total_detections.load()
      << " detections -> " << out_file.string() << "\n";
}

std::vector<int> run_cbgs(const PipelineConfig& config,
                          const std::filesystem::path& dataset_manifest,
                          const std::filesystem::path& out_file, std::ostream& log) {
  config.validate();
  const std::vector<FrameRecord> frames = load_frames(dataset_manifest);
  std::vector<int> indices;
  try {
    indices = cbgs_resample(frames, config.cbgs, config.seed);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  std::ostringstream body;
  for (int index : indices) body << index << "\n";
  write_text_atomic(out_file, body.str());
  log << "cbgs: " << frames.size() << " frames -> " << indices.size() << " samples ("
      << out_file.string() << ")\n";
  return indices;
}

namespace {

Json optional_to_json(const std::optional<double>& value) {
  if (!value) return nullptr;
  return *value;
}

std::string format_cell(const std::optional<double>& value, int precision = 1) {
  if (!value) return "n/a";
  std::ostringstream out;
  out << std::fixed << std::setprecision(precision) << *value;
  return out.str();
}

std::string threshold_tag(double threshold) {
  std::ostringstream out;
  out << "d" << std::setprecision(10) << threshold;
  return out.str();
}

std::filesystem::path write_pr_csv(const std::filesystem::path& out_dir,
                                   const std::string& class_str, const std::string& tag,
                                   const PRCurve& curve) {
  std::ostringstream body;
  body << "recall,precision\n";
  body << std::setprecision(17);
  for (std::size_t i = 0; i < curve.recall.size(); ++i) {
    body << curve.recall[i] << "," << curve.precision[i] << "\n";
  }
  const std::filesystem::path path = out_dir / ("pr_" + class_str + "_" + tag + ".csv");
  write_text_atomic(path, body.str());
  return path;
}

}  // namespace

EvalArtifacts run_eval(const PipelineConfig& config,
                       const std::filesystem::path& predictions_manifest,
                       const std::filesystem::path& gt_manifest,
                       const std::filesystem::path& out_dir, std::ostream& log) {
  config.validate();
  const std::vector<FrameRecord> gt_frames = load_frames(gt_manifest);
  const std::vector<FrameRecord> pred_frames = load_frames(predictions_manifest);

  std::map<std::string, const FrameRecord*> by_id;
  for (const FrameRecord& frame : pred_frames) by_id[frame.frame_id] = &frame;

  std::vector<std::string> missing_predictions;
  std::set<std::string> gt_ids;
  for (const FrameRecord& frame : gt_frames) {
    gt_ids.insert(frame.frame_id);
    if (!by_id.contains(frame.frame_id)) missing_predictions.push_back(frame.frame_id);
  }
  std::vector<std::string> missing_gt;
  for (const FrameRecord& frame : pred_frames) {
    if (!gt_ids.contains(frame.frame_id)) missing_gt.push_back(frame.frame_id);
  }
  if (!missing_predictions.empty() || !missing_gt.empty()) {
    std::ostringstream message;
    message << "eval: frame id sets do not match.";
    if (!missing_predictions.empty()) {
      message << " missing from predictions:";
      for (const auto& id : missing_predictions) message << " " << id;
      message << ".";
    }
    if (!missing_gt.empty()) {
      message << " missing from ground truth:";
      for (const auto& id : missing_gt) message << " " << id;
      message << ".";
    }
    throw FormatError(message.str());
  }

  std::vector<EvalFrame> eval_frames;
  eval_frames.reserve(gt_frames.size());
  for (const FrameRecord& gt : gt_frames) {
    EvalFrame frame;
    frame.gts = gt.annotations;
    frame.dets = by_id.at(gt.frame_id)->annotations;
    frame.camera = gt.camera;
    eval_frames.push_back(std::move(frame));
  }

  std::filesystem::create_directories(out_dir);
  EvalArtifacts artifacts;
  Json metrics;
  metrics["protocol"] = config.eval.protocol;

  if (config.eval.protocol == "nuscenes") {
    const NuscenesEval eval = evaluate_nuscenes(eval_frames, config.eval.nuscenes);
    Json classes;
    for (int k = 0; k < kNumClasses; ++k) {
      const std::string& name = class_name(static_cast<ClassId>(k));
      const NuscenesClassEval& cls = eval.per_class[k];
      Json entry;
      Json by_threshold;
      for (std::size_t t = 0; t < config.eval.nuscenes.distance_thresholds.size(); ++t) {
        std::ostringstream key;
        key << config.eval.nuscenes.distance_thresholds[t];
        by_threshold[key.str()] = optional_to_json(cls.ap_by_threshold[t]);
        artifacts.pr_curves.push_back(write_pr_csv(
            out_dir, name, threshold_tag(config.eval.nuscenes.distance_thresholds[t]),
            cls.curves[t]));
      }
      entry["ap_by_threshold"] = std::move(by_threshold);
      entry["ap"] = optional_to_json(cls.ap);
      entry["tp_errors"] = {{"ate", optional_to_json(cls.errors.ate)},
                            {"ase", optional_to_json(cls.errors.ase)},
                            {"aoe", optional_to_json(cls.errors.aoe)},
                            {"ave", optional_to_json(cls.errors.ave)},
                            {"aae", optional_to_json(cls.errors.aae)}};
      classes[name] = std::move(entry);
    }
    metrics["classes"] = std::move(classes);
    metrics["map"] = optional_to_json(eval.mean_ap);

    log << "        mAP   AP ped   AP cyc   AP car\n";
    log << std::setw(11) << format_cell(eval.mean_ap) << std::setw(9)
        << format_cell(eval.per_class[0].ap) << std::setw(9) << format_cell(eval.per_class[1].ap)
        << std::setw(9) << format_cell(eval.per_class[2].ap) << "\n";
    log << "class        ATE    ASE    AOE    AVE    AAE\n";
    for (int k = 0; k < kNumClasses; ++k) {
      const TPErrors& e = eval.per_class[k].errors;
      log << std::left << std::setw(11) << class_name(static_cast<ClassId>(k)) << std::right
          << std::setw(7) << format_cell(e.ate, 2) << std::setw(7) << format_cell(e.ase, 2)
          << std::setw(7) << format_cell(e.aoe, 2) << std::setw(7) << format_cell(e.ave, 2)
          << std::setw(7) << format_cell(e.aae, 2) << "\n";
    }
  } else {
    const VodEval eval = evaluate_vod(eval_frames, config.eval.vod);
    Json classes;
    for (int k = 0; k < kNumClasses; ++k) {
      const std::string& name = class_name(static_cast<ClassId>(k));
      Json entry;
      for (std::size_t v = 0; v < kVodVariants.size(); ++v) {
        const std::string& variant = vod_variant_name(kVodVariants[v]);
        entry[variant] = optional_to_json(eval.per_class[k].ap[v]);
        artifacts.pr_curves.push_back(
            write_pr_csv(out_dir, name, variant, eval.per_class[k].curves[v]));
      }
      classes[name] = std::move(entry);
    }
    metrics["classes"] = std::move(classes);
    metrics["map"] = {{"2d", optional_to_json(eval.mean_ap[0])},
                      {"bev", optional_to_json(eval.mean_ap[1])},
                      {"3d", optional_to_json(eval.mean_ap[2])}};

    log << "            mAP 2D  mAP BEV   mAP 3D |  ped 2D  ped BEV   ped 3D |  cyc 2D  cyc BEV"
           "   cyc 3D |  car 2D  car BEV   car 3D\n";
    log << "        ";
    for (std::size_t v = 0; v < 3; ++v) log << std::setw(9) << format_cell(eval.mean_ap[v]);
    log << " |";
    for (int k = 0; k < kNumClasses; ++k) {
      for (std::size_t v = 0; v < 3; ++v) {
        log << std::setw(9) << format_cell(eval.per_class[k].ap[v]);
      }
      if (k + 1 < kNumClasses) log << " |";
    }
    log << "\n";
  }

  artifacts.metrics_json = out_dir / "metrics.json";
  write_text_atomic(artifacts.metrics_json, metrics.dump(2) + "\n");
  return artifacts;
}

}  // namespace rcbev
