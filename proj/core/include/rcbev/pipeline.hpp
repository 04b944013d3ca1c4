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
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "rcbev/dataset_io.hpp"
#include "rcbev/eval_metrics.hpp"
#include "rcbev/fusion_head.hpp"
#include "rcbev/geometry.hpp"

namespace rcbev {

struct PillarConfig {
  int max_points_per_pillar = 32;
  int max_pillars = 8192;
  int out_channels = 64;
  std::string weights;  // tensor file [feat_dim x out_channels]; "" = identity
  std::string bias;     // tensor file [out_channels]; "" = zero
};

struct DepthBinConfig {
  double first = 1.0;
  double step = 1.0;
  int count = 60;

  std::vector<double> depths() const;
};

struct EvalConfig {
  std::string protocol = "nuscenes";  // "nuscenes" or "vod"
  NuscenesEvalParams nuscenes;
  VodEvalParams vod;
};

// Single human-readable (JSON) run configuration. Unknown keys are rejected
// on load.
struct PipelineConfig {
  GridConfig grid;
  int num_sweeps = 5;
  bool use_radar = true;
  bool use_camera = true;
  PillarConfig pillars;
  DepthBinConfig depth_bins;
  HeatmapParams heatmap;
  DecodeParams decode;
  EvalConfig eval;
  ClassGroupConfig cbgs;
  std::uint32_t seed = 0;

  static PipelineConfig from_json_file(const std::filesystem::path& path);
  void validate() const;  // throws ConfigError
};

// Per-frame randomness derives from the run seed and the frame id only, so
// results do not depend on worker scheduling.
std::uint32_t frame_seed(std::uint32_t run_seed, const std::string& frame_id);

// Runs `fn(i)` for i in [0, count) on `workers` threads (0 = hardware
// concurrency). The first exception, if any, is rethrown on the caller.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

struct PreprocessSummary {
  int frames = 0;
  std::int64_t radar_points_total = 0;
  std::int64_t radar_points_in_grid = 0;
  std::int64_t radar_points_dropped = 0;  // capacity truncation
  std::int64_t boxes_total = 0;
  std::int64_t boxes_dropped_fov = 0;
  std::int64_t boxes_dropped_grid = 0;
  double seconds_radar = 0.0;
  double seconds_camera = 0.0;
  double seconds_targets = 0.0;
  double seconds_io = 0.0;
};

// Writes per-frame fused BEV tensors (<frame_id>.fused.rcbt) plus target maps
// (<frame_id>.{heatmap,reg,mask,attr}.rcbt) into out_dir.
PreprocessSummary run_preprocess(const PipelineConfig& config,
                                 const std::filesystem::path& dataset_manifest,
                                 const std::filesystem::path& out_dir, int workers,
                                 std::ostream& log);

// Target rendering only (same target files as run_preprocess).
void run_render_targets(const PipelineConfig& config,
                        const std::filesystem::path& dataset_manifest,
                        const std::filesystem::path& out_dir, int workers, std::ostream& log);

// Decodes head outputs (<frame_id>.{heatmap,reg[,attr]}.rcbt in tensors_dir)
// into a predictions manifest at out_file.
void run_decode(const PipelineConfig& config, const std::filesystem::path& dataset_manifest,
                const std::filesystem::path& tensors_dir,
                const std::filesystem::path& out_file, int workers, std::ostream& log);

// Writes the resampled frame index list (one index per line) to out_file.
std::vector<int> run_cbgs(const PipelineConfig& config,
                          const std::filesystem::path& dataset_manifest,
                          const std::filesystem::path& out_file, std::ostream& log);

struct EvalArtifacts {
  std::filesystem::path metrics_json;
  std::vector<std::filesystem::path> pr_curves;
};

// Evaluates predictions against ground truth (both canonical manifests),
// writes metrics.json plus one PR CSV per class and threshold/variant, and
// prints a result table. Frame id sets must match exactly.
EvalArtifacts run_eval(const PipelineConfig& config,
                       const std::filesystem::path& predictions_manifest,
                       const std::filesystem::path& gt_manifest,
                       const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace rcbev
