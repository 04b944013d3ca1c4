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

#include "rcbev/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rcbev {

namespace {

double det_score(const Box3D& det) { return det.score.value_or(0.0); }

std::vector<int> score_order(std::span<const Box3D> dets) {
  std::vector<int> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return det_score(dets[a]) > det_score(dets[b]);
  });
  return order;
}

double bev_distance(const Box3D& a, const Box3D& b) {
  return (a.center.head<2>() - b.center.head<2>()).norm();
}

double iou_for_variant(const Box3D& det, const Box3D& gt, IouVariant variant,
                       const CameraModel* camera) {
  switch (variant) {
    case IouVariant::kBev:
      return iou_bev(det, gt);
    case IouVariant::k3d:
      return iou_3d(det, gt);
    case IouVariant::kImage2d:
      if (camera == nullptr) {
        throw std::invalid_argument("match: image-plane IoU requires a camera model");
      }
      return iou_2d_image(det, gt, *camera);
  }
  return 0.0;
}

}  // namespace

MatchResult match_detections(std::span<const Box3D> dets, std::span<const Box3D> gts,
                             const MatcherSpec& matcher) {
  MatchResult result;
  result.num_gts = static_cast<int>(gts.size());
  result.det_order = score_order(dets);
  result.det_is_tp.assign(dets.size(), 0);

  std::vector<bool> gt_taken(gts.size(), false);
  for (std::size_t rank = 0; rank < result.det_order.size(); ++rank) {
    const int det_index = result.det_order[rank];
    const Box3D& det = dets[det_index];

    int best_gt = -1;
    if (matcher.kind == MatcherSpec::Kind::kCenterDistance) {
      double best = matcher.threshold;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (gt_taken[g]) continue;
        const double distance = bev_distance(det, gts[g]);
        if (distance <= best && (best_gt < 0 || distance < best)) {
          best = distance;
          best_gt = static_cast<int>(g);
        }
      }
    } else {
      double best = matcher.threshold;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (gt_taken[g]) continue;
        const double iou = iou_for_variant(det, gts[g], matcher.variant, matcher.camera);
        if (iou >= best && (best_gt < 0 || iou > best)) {
          best = iou;
          best_gt = static_cast<int>(g);
        }
      }
    }

    if (best_gt >= 0) {
      gt_taken[best_gt] = true;
      result.det_is_tp[rank] = 1;
      result.pairs.push_back({det_index, best_gt, det_score(det)});
    }
  }
  return result;
}

MatchResult match_center_distance(std::span<const Box3D> dets, std::span<const Box3D> gts,
                                  double threshold_m) {
  MatcherSpec spec;
  spec.kind = MatcherSpec::Kind::kCenterDistance;
  spec.threshold = threshold_m;
  return match_detections(dets, gts, spec);
}

// ---------------------------------------------------------------------------
// Rotated IoU

namespace {

constexpr double kDegenerateArea = 1e-12;
constexpr double kOnEdge = 1e-12;

struct ConvexPolygon {
  // Intersection of two convex quads has at most 8 vertices; keep headroom
  // for clip-stage intermediates.
  std::array<Eigen::Vector2d, 16> pts;
  int n = 0;
};

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

// Clips `poly` to the half-plane left of edge a->b (CCW interior).
void clip_half_plane(ConvexPolygon& poly, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  ConvexPolygon out;
  const Eigen::Vector2d edge = b - a;
  for (int i = 0; i < poly.n; ++i) {
    const Eigen::Vector2d& cur = poly.pts[i];
    const Eigen::Vector2d& nxt = poly.pts[(i + 1) % poly.n];
    const double cur_side = cross2(edge, cur - a);
    const double nxt_side = cross2(edge, nxt - a);
    const bool cur_in = cur_side >= -kOnEdge;
    const bool nxt_in = nxt_side >= -kOnEdge;
    if (cur_in) out.pts[out.n++] = cur;
    if (cur_in != nxt_in) {
      const double t = cur_side / (cur_side - nxt_side);
      out.pts[out.n++] = cur + t * (nxt - cur);
    }
  }
  poly = out;
}

double polygon_area(const ConvexPolygon& poly) {
  double twice = 0.0;
  for (int i = 0; i < poly.n; ++i) {
    twice += cross2(poly.pts[i], poly.pts[(i + 1) % poly.n]);
  }
  return std::max(0.5 * twice, 0.0);
}

double footprint_intersection(const Box3D& a, const Box3D& b) {
  const auto corners_a = box_corners_bev(a);
  const auto corners_b = box_corners_bev(b);
  ConvexPolygon poly;
  poly.n = 4;
  for (int i = 0; i < 4; ++i) poly.pts[i] = corners_a[i];
  for (int i = 0; i < 4 && poly.n > 2; ++i) {
    clip_half_plane(poly, corners_b[i], corners_b[(i + 1) % 4]);
  }
  if (poly.n < 3) return 0.0;
  return polygon_area(poly);
}

double footprint_area(const Box3D& box) {
  ConvexPolygon poly;
  poly.n = 4;
  const auto corners = box_corners_bev(box);
  for (int i = 0; i < 4; ++i) poly.pts[i] = corners[i];
  return polygon_area(poly);
}

}  // namespace

double iou_bev(const Box3D& a, const Box3D& b) {
  const double area_a = footprint_area(a);
  const double area_b = footprint_area(b);
  if (area_a < kDegenerateArea || area_b < kDegenerateArea) return 0.0;
  const double inter = footprint_intersection(a, b);
  return inter / (area_a + area_b - inter);
}

double iou_3d(const Box3D& a, const Box3D& b) {
  const double area_a = footprint_area(a);
  const double area_b = footprint_area(b);
  if (area_a < kDegenerateArea || area_b < kDegenerateArea) return 0.0;
  const double z_lo = std::max(a.center.z() - 0.5 * a.height(), b.center.z() - 0.5 * b.height());
  const double z_hi = std::min(a.center.z() + 0.5 * a.height(), b.center.z() + 0.5 * b.height());
  const double overlap_h = std::max(z_hi - z_lo, 0.0);
  const double inter = footprint_intersection(a, b) * overlap_h;
  const double vol_a = area_a * a.height();
  const double vol_b = area_b * b.height();
  if (vol_a < kDegenerateArea || vol_b < kDegenerateArea) return 0.0;
  return inter / (vol_a + vol_b - inter);
}

namespace {

struct Rect {
  double u_min = 0.0, v_min = 0.0, u_max = 0.0, v_max = 0.0;
  bool empty = true;
};

Rect projected_rect(const Box3D& box, const CameraModel& camera) {
  const auto corners = box_corners_3d(box);
  Rect rect;
  rect.u_min = rect.v_min = std::numeric_limits<double>::infinity();
  rect.u_max = rect.v_max = -std::numeric_limits<double>::infinity();
  for (const auto& corner : corners) {
    const Eigen::Vector3d pc = camera.extrinsics * corner;
    if (pc.z() <= 0.0) continue;  // behind the camera
    const double u = camera.fx() * pc.x() / pc.z() + camera.cx();
    const double v = camera.fy() * pc.y() / pc.z() + camera.cy();
    rect.u_min = std::min(rect.u_min, u);
    rect.u_max = std::max(rect.u_max, u);
    rect.v_min = std::min(rect.v_min, v);
    rect.v_max = std::max(rect.v_max, v);
    rect.empty = false;
  }
  if (rect.empty) return rect;
  rect.u_min = std::clamp(rect.u_min, 0.0, static_cast<double>(camera.width));
  rect.u_max = std::clamp(rect.u_max, 0.0, static_cast<double>(camera.width));
  rect.v_min = std::clamp(rect.v_min, 0.0, static_cast<double>(camera.height));
  rect.v_max = std::clamp(rect.v_max, 0.0, static_cast<double>(camera.height));
  if (rect.u_max - rect.u_min <= 0.0 || rect.v_max - rect.v_min <= 0.0) rect.empty = true;
  return rect;
}

}  // namespace

double iou_2d_image(const Box3D& a, const Box3D& b, const CameraModel& camera) {
  const Rect ra = projected_rect(a, camera);
  const Rect rb = projected_rect(b, camera);
  if (ra.empty || rb.empty) return 0.0;
  const double iw =
      std::max(std::min(ra.u_max, rb.u_max) - std::max(ra.u_min, rb.u_min), 0.0);
  const double ih =
      std::max(std::min(ra.v_max, rb.v_max) - std::max(ra.v_min, rb.v_min), 0.0);
  const double inter = iw * ih;
  const double area_a = (ra.u_max - ra.u_min) * (ra.v_max - ra.v_min);
  const double area_b = (rb.u_max - rb.u_min) * (rb.v_max - rb.v_min);
  return inter / (area_a + area_b - inter);
}

// ---------------------------------------------------------------------------
// Average precision

LabeledDetections labels_from_match(const MatchResult& match, std::span<const Box3D> dets) {
  LabeledDetections labels;
  labels.num_gts = match.num_gts;
  labels.scores.reserve(match.det_order.size());
  labels.is_tp.reserve(match.det_order.size());
  for (std::size_t rank = 0; rank < match.det_order.size(); ++rank) {
    labels.scores.push_back(det_score(dets[match.det_order[rank]]));
    labels.is_tp.push_back(match.det_is_tp[rank]);
  }
  return labels;
}

PRCurve pr_curve_from_labels(const LabeledDetections& labels) {
  PRCurve curve;
  if (labels.num_gts == 0) return curve;
  int tp = 0;
  int fp = 0;
  curve.recall.reserve(labels.scores.size());
  curve.precision.reserve(labels.scores.size());
  for (std::size_t i = 0; i < labels.scores.size(); ++i) {
    labels.is_tp[i] ? ++tp : ++fp;
    curve.recall.push_back(static_cast<double>(tp) / labels.num_gts);
    curve.precision.push_back(static_cast<double>(tp) / (tp + fp));
  }
  return curve;
}

namespace {

// Linear interpolation of the PR polyline with numpy.interp semantics:
// exact recall hits take the last operating point at that recall, queries
// below the first recall take the first precision, queries beyond the last
// recall give 0.
double precision_at(const PRCurve& curve, double recall) {
  const auto& rec = curve.recall;
  const auto& prec = curve.precision;
  if (rec.empty()) return 0.0;
  if (recall < rec.front()) return prec.front();
  if (recall > rec.back()) return 0.0;
  // Last index with rec[j] <= recall.
  const auto it = std::upper_bound(rec.begin(), rec.end(), recall);
  const std::size_t j = static_cast<std::size_t>(it - rec.begin()) - 1;
  if (rec[j] == recall || j + 1 >= rec.size()) return prec[j];
  const double t = (recall - rec[j]) / (rec[j + 1] - rec[j]);
  return prec[j] + t * (prec[j + 1] - prec[j]);
}

double ap_nuscenes_101(const PRCurve& curve) {
  // Mean of (precision - 0.1 clipped at 0) over the recall samples above the
  // 0.1 floor, rescaled by 1/0.9.
  constexpr int kSamples = 101;
  constexpr int kFirst = 11;
  double total = 0.0;
  for (int k = kFirst; k < kSamples; ++k) {
    const double recall = static_cast<double>(k) / (kSamples - 1);
    total += std::max(precision_at(curve, recall) - 0.1, 0.0);
  }
  return total / (kSamples - kFirst) / 0.9;
}

double ap_kitti_40(const PRCurve& curve) {
  constexpr int kPositions = 40;
  double total = 0.0;
  for (int k = 1; k <= kPositions; ++k) {
    const double recall = static_cast<double>(k) / kPositions;
    double best = 0.0;
    for (std::size_t i = 0; i < curve.recall.size(); ++i) {
      if (curve.recall[i] >= recall) best = std::max(best, curve.precision[i]);
    }
    total += best;
  }
  return total / kPositions;
}

}  // namespace

std::optional<double> ap_from_labels(const LabeledDetections& labels,
                                     ApInterpolation interpolation) {
  if (labels.num_gts == 0) return std::nullopt;
  const PRCurve curve = pr_curve_from_labels(labels);
  const double ap = interpolation == ApInterpolation::kNuscenes101 ? ap_nuscenes_101(curve)
                                                                   : ap_kitti_40(curve);
  return 100.0 * ap;
}

std::optional<double> compute_ap(std::span<const Box3D> dets, std::span<const Box3D> gts,
                                 const MatcherSpec& matcher, ApInterpolation interpolation) {
  const MatchResult match = match_detections(dets, gts, matcher);
  return ap_from_labels(labels_from_match(match, dets), interpolation);
}

// ---------------------------------------------------------------------------
// True-positive errors

namespace {

double scale_error(const Box3D& det, const Box3D& gt) {
  // Aligned 3D IoU: centers and yaws coincide, so the intersection is the
  // product of the per-axis size minima.
  const double inter =
      std::min(det.length(), gt.length()) * std::min(det.width(), gt.width()) *
      std::min(det.height(), gt.height());
  const double vol_det = det.length() * det.width() * det.height();
  const double vol_gt = gt.length() * gt.width() * gt.height();
  return 1.0 - inter / (vol_det + vol_gt - inter);
}

struct ErrorAccumulator {
  double sum = 0.0;
  std::int64_t count = 0;
  void add(double value) {
    sum += value;
    ++count;
  }
  std::optional<double> mean() const {
    if (count == 0) return std::nullopt;
    return sum / count;
  }
};

}  // namespace

TPErrors tp_errors(const MatchResult& matches, std::span<const Box3D> dets,
                   std::span<const Box3D> gts) {
  ErrorAccumulator ate, ase, aoe, ave, aae;
  for (const auto& pair : matches.pairs) {
    const Box3D& det = dets[pair.det_index];
    const Box3D& gt = gts[pair.gt_index];
    ate.add(bev_distance(det, gt));
    ase.add(scale_error(det, gt));
    aoe.add(angle_difference(det.yaw, gt.yaw));
    ave.add((det.velocity - gt.velocity).norm());
    if (gt.attribute_id >= 0) {
      aae.add(det.attribute_id == gt.attribute_id ? 0.0 : 1.0);
    }
  }
  TPErrors errors;
  errors.ate = ate.mean();
  errors.ase = ase.mean();
  errors.aoe = aoe.mean();
  errors.ave = ave.mean();
  errors.aae = aae.mean();
  return errors;
}

std::optional<double> aggregate_map(const std::map<ClassId, double>& per_class_ap) {
  if (per_class_ap.empty()) return std::nullopt;
  double total = 0.0;
  for (const auto& [class_id, ap] : per_class_ap) total += ap;
  return total / static_cast<double>(per_class_ap.size());
}

// ---------------------------------------------------------------------------
// Protocol drivers

namespace {

std::vector<Box3D> class_subset(std::span<const Box3D> boxes, ClassId class_id) {
  std::vector<Box3D> out;
  for (const Box3D& box : boxes) {
    if (box.class_id == class_id) out.push_back(box);
  }
  return out;
}

std::optional<double> mean_of_defined(std::span<const std::optional<double>> values) {
  double total = 0.0;
  int count = 0;
  for (const auto& value : values) {
    if (value) {
      total += *value;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return total / count;
}

}  // namespace

LabeledDetections pool_matches(std::span<const EvalFrame> frames, ClassId class_id,
                               const MatcherSpec& matcher) {
  // Ground truth never interacts across frames, so per-frame greedy matching
  // in local score order equals matching in global score order.
  struct Labeled {
    double score;
    std::uint8_t tp;
  };
  std::vector<Labeled> pooled;
  int num_gts = 0;
  for (const EvalFrame& frame : frames) {
    const std::vector<Box3D> dets = class_subset(frame.dets, class_id);
    const std::vector<Box3D> gts = class_subset(frame.gts, class_id);
    MatcherSpec frame_matcher = matcher;
    if (matcher.kind == MatcherSpec::Kind::kIou && matcher.variant == IouVariant::kImage2d) {
      if (!frame.camera) {
        throw std::invalid_argument("pool_matches: frame lacks the camera required for 2D IoU");
      }
      frame_matcher.camera = &*frame.camera;
    }
    const MatchResult match = match_detections(dets, gts, frame_matcher);
    num_gts += match.num_gts;
    for (std::size_t rank = 0; rank < match.det_order.size(); ++rank) {
      pooled.push_back({det_score(dets[match.det_order[rank]]), match.det_is_tp[rank]});
    }
  }
  std::stable_sort(pooled.begin(), pooled.end(),
                   [](const Labeled& a, const Labeled& b) { return a.score > b.score; });

  LabeledDetections labels;
  labels.num_gts = num_gts;
  labels.scores.reserve(pooled.size());
  labels.is_tp.reserve(pooled.size());
  for (const Labeled& l : pooled) {
    labels.scores.push_back(l.score);
    labels.is_tp.push_back(l.tp);
  }
  return labels;
}

NuscenesEval evaluate_nuscenes(std::span<const EvalFrame> frames,
                               const NuscenesEvalParams& params) {
  NuscenesEval eval;
  std::map<ClassId, double> defined_aps;
  for (int k = 0; k < kNumClasses; ++k) {
    const ClassId class_id = static_cast<ClassId>(k);
    NuscenesClassEval& cls = eval.per_class[k];

    for (double threshold : params.distance_thresholds) {
      MatcherSpec matcher;
      matcher.kind = MatcherSpec::Kind::kCenterDistance;
      matcher.threshold = threshold;
      const LabeledDetections labels = pool_matches(frames, class_id, matcher);
      cls.ap_by_threshold.push_back(ap_from_labels(labels, ApInterpolation::kNuscenes101));
      PRCurve curve = pr_curve_from_labels(labels);
      curve.scheme = "nuscenes_101";
      cls.curves.push_back(std::move(curve));
    }
    cls.ap = mean_of_defined(cls.ap_by_threshold);
    if (cls.ap) defined_aps[class_id] = *cls.ap;

    // TP errors over matches at the dedicated threshold, pooled per frame.
    MatchResult pooled_pairs;
    std::vector<Box3D> pooled_dets;
    std::vector<Box3D> pooled_gts;
    for (const EvalFrame& frame : frames) {
      const std::vector<Box3D> dets = class_subset(frame.dets, class_id);
      const std::vector<Box3D> gts = class_subset(frame.gts, class_id);
      const MatchResult match =
          match_center_distance(dets, gts, params.tp_error_threshold);
      const int det_base = static_cast<int>(pooled_dets.size());
      const int gt_base = static_cast<int>(pooled_gts.size());
      for (const auto& pair : match.pairs) {
        pooled_pairs.pairs.push_back(
            {pair.det_index + det_base, pair.gt_index + gt_base, pair.score});
      }
      pooled_dets.insert(pooled_dets.end(), dets.begin(), dets.end());
      pooled_gts.insert(pooled_gts.end(), gts.begin(), gts.end());
    }
    cls.errors = tp_errors(pooled_pairs, pooled_dets, pooled_gts);
  }
  eval.mean_ap = aggregate_map(defined_aps);
  return eval;
}

const std::string& vod_variant_name(IouVariant variant) {
  static const std::array<std::string, 3> kNames = {"2d", "bev", "3d"};
  switch (variant) {
    case IouVariant::kImage2d:
      return kNames[0];
    case IouVariant::kBev:
      return kNames[1];
    case IouVariant::k3d:
      return kNames[2];
  }
  return kNames[0];
}

VodEval evaluate_vod(std::span<const EvalFrame> frames, const VodEvalParams& params) {
  VodEval eval;
  for (std::size_t v = 0; v < kVodVariants.size(); ++v) {
    std::map<ClassId, double> defined_aps;
    for (int k = 0; k < kNumClasses; ++k) {
      const ClassId class_id = static_cast<ClassId>(k);
      MatcherSpec matcher;
      matcher.kind = MatcherSpec::Kind::kIou;
      matcher.variant = kVodVariants[v];
      matcher.threshold = params.iou_thresholds[k];
      const LabeledDetections labels = pool_matches(frames, class_id, matcher);
      eval.per_class[k].ap[v] = ap_from_labels(labels, ApInterpolation::kKitti40);
      PRCurve curve = pr_curve_from_labels(labels);
      curve.scheme = "kitti_40";
      eval.per_class[k].curves[v] = std::move(curve);
      if (eval.per_class[k].ap[v]) defined_aps[class_id] = *eval.per_class[k].ap[v];
    }
    eval.mean_ap[v] = aggregate_map(defined_aps);
  }
  return eval;
}

}  // namespace rcbev
