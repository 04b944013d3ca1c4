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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rcbev/geometry.hpp"

namespace rcbev {

// Greedy score-ordered matching of one frame's detections against ground
// truth. Detections and ground truth must already be restricted to a single
// class.
struct MatchResult {
  struct Pair {
    int det_index = 0;
    int gt_index = 0;
    double score = 0.0;
  };
  std::vector<Pair> pairs;

  // Detections in descending score order (ties by input order) with their
  // true-positive flags; drives the score sweep. tp + fn == num_gts at every
  // operating point.
  std::vector<int> det_order;
  std::vector<std::uint8_t> det_is_tp;
  int num_gts = 0;
};

enum class IouVariant {
  kImage2d,
  kBev,
  k3d,
};

struct MatcherSpec {
  enum class Kind { kCenterDistance, kIou };
  Kind kind = Kind::kCenterDistance;
  double threshold = 2.0;  // meters for center distance, ratio for IoU
  IouVariant variant = IouVariant::kBev;
  const CameraModel* camera = nullptr;  // required for IouVariant::kImage2d
};

// Each detection, in descending score order, takes the best unmatched ground
// truth passing the threshold: nearest by BEV center distance, or highest by
// IoU.
MatchResult match_detections(std::span<const Box3D> dets, std::span<const Box3D> gts,
                             const MatcherSpec& matcher);
MatchResult match_center_distance(std::span<const Box3D> dets, std::span<const Box3D> gts,
                                  double threshold_m);

// Rotated-rectangle IoU of the BEV footprints via convex polygon clipping.
// Near-zero-area boxes yield 0.
double iou_bev(const Box3D& a, const Box3D& b);

// BEV intersection extruded by the vertical overlap, over the volume union.
double iou_3d(const Box3D& a, const Box3D& b);

// Axis-aligned IoU of the image-plane bounding rectangles of the projected
// corners, clipped to the image. A box fully behind the camera yields 0.
double iou_2d_image(const Box3D& a, const Box3D& b, const CameraModel& camera);

// Score-labeled detections pooled for a PR sweep, descending score order.
struct LabeledDetections {
  std::vector<double> scores;
  std::vector<std::uint8_t> is_tp;
  int num_gts = 0;
};

LabeledDetections labels_from_match(const MatchResult& match, std::span<const Box3D> dets);

enum class ApInterpolation {
  kNuscenes101,  // 101 recall samples, precision/recall floored at 0.1
  kKitti40,      // max precision to the right at 40 recall positions
};

// Raw precision-recall operating points of a score sweep.
struct PRCurve {
  std::vector<double> recall;     // non-decreasing
  std::vector<double> precision;
  std::string scheme;
};

PRCurve pr_curve_from_labels(const LabeledDetections& labels);

// Average precision as a percentage in [0, 100]. Returns nullopt when there
// is no ground truth (AP undefined rather than 0).
std::optional<double> ap_from_labels(const LabeledDetections& labels,
                                     ApInterpolation interpolation);
std::optional<double> compute_ap(std::span<const Box3D> dets, std::span<const Box3D> gts,
                                 const MatcherSpec& matcher, ApInterpolation interpolation);

// Mean errors over matched true positives. Fields are absent when no pair
// contributes (no matches, or no ground-truth attributes for aae).
struct TPErrors {
  std::optional<double> ate;  // BEV center distance, m
  std::optional<double> ase;  // 1 - aligned 3D IoU
  std::optional<double> aoe;  // yaw difference, rad, [0, pi]
  std::optional<double> ave;  // velocity L2, m/s
  std::optional<double> aae;  // 1 - attribute accuracy
};

TPErrors tp_errors(const MatchResult& matches, std::span<const Box3D> dets,
                   std::span<const Box3D> gts);

// Unweighted mean over present classes; nullopt for an empty map.
std::optional<double> aggregate_map(const std::map<ClassId, double>& per_class_ap);

// ---------------------------------------------------------------------------
// Dataset-level protocol drivers. Matching runs per frame; the PR sweep pools
// all frames.

struct EvalFrame {
  std::vector<Box3D> dets;
  std::vector<Box3D> gts;
  std::optional<CameraModel> camera;  // needed for the image-plane IoU variant
};

LabeledDetections pool_matches(std::span<const EvalFrame> frames, ClassId class_id,
                               const MatcherSpec& matcher);

struct NuscenesEvalParams {
  std::vector<double> distance_thresholds = {0.5, 1.0, 2.0, 4.0};
  double tp_error_threshold = 2.0;
};

struct NuscenesClassEval {
  std::vector<std::optional<double>> ap_by_threshold;  // aligned with params thresholds
  std::optional<double> ap;                            // mean over thresholds
  TPErrors errors;                                     // at tp_error_threshold
  std::vector<PRCurve> curves;                         // aligned with thresholds
};

struct NuscenesEval {
  std::array<NuscenesClassEval, kNumClasses> per_class;
  std::optional<double> mean_ap;
};

NuscenesEval evaluate_nuscenes(std::span<const EvalFrame> frames,
                               const NuscenesEvalParams& params);

struct VodEvalParams {
  std::array<double, kNumClasses> iou_thresholds = {0.25, 0.25, 0.5};  // ped, cyc, car
};

inline constexpr std::array<IouVariant, 3> kVodVariants = {IouVariant::kImage2d,
                                                           IouVariant::kBev, IouVariant::k3d};
const std::string& vod_variant_name(IouVariant variant);

struct VodClassEval {
  std::array<std::optional<double>, 3> ap;  // [2d, bev, 3d]
  std::array<PRCurve, 3> curves;
};

struct VodEval {
  std::array<VodClassEval, kNumClasses> per_class;
  std::array<std::optional<double>, 3> mean_ap;  // [2d, bev, 3d]
};

VodEval evaluate_vod(std::span<const EvalFrame> frames, const VodEvalParams& params);

}  // namespace rcbev
