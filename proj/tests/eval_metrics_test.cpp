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

#include <cmath>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "support/test_util.hpp"

namespace rcbev {
namespace {

using testing::monte_carlo_iou_bev;
using testing::naive_ap;
using testing::uniform;
using testing::uniform_int;

constexpr double kPi = std::numbers::pi;

Box3D det_at(double x, double y, double score, ClassId class_id = ClassId::kCar) {
  Box3D box;
  box.center = Eigen::Vector3d(x, y, 0);
  box.size = Eigen::Vector3d(4, 2, 1.5);
  box.class_id = class_id;
  box.score = score;
  return box;
}

Box3D gt_at(double x, double y, ClassId class_id = ClassId::kCar) {
  Box3D box;
  box.center = Eigen::Vector3d(x, y, 0);
  box.size = Eigen::Vector3d(4, 2, 1.5);
  box.class_id = class_id;
  return box;
}

TEST(MatchTest, WithinThresholdIsTruePositive) {
  const std::vector<Box3D> dets = {det_at(1, 0, 0.9)};
  const std::vector<Box3D> gts = {gt_at(0, 0)};
  const auto match = match_center_distance(dets, gts, 2.0);
  ASSERT_EQ(match.pairs.size(), 1u);
  EXPECT_EQ(match.pairs[0].det_index, 0);
  EXPECT_EQ(match.pairs[0].gt_index, 0);
}

TEST(MatchTest, BeyondThresholdIsFalsePositiveAndNegative) {
  const std::vector<Box3D> dets = {det_at(3, 0, 0.9)};
  const std::vector<Box3D> gts = {gt_at(0, 0)};
  const auto match = match_center_distance(dets, gts, 2.0);
  EXPECT_TRUE(match.pairs.empty());
  EXPECT_EQ(match.det_is_tp[0], 0);
  EXPECT_EQ(match.num_gts, 1);  // the unmatched gt is the false negative
}

TEST(MatchTest, HigherScoreWinsContestedGt) {
  // The lower-score det is closer, but greedy order hands the gt to the
  // higher-score det first.
  const std::vector<Box3D> dets = {det_at(1.0, 0, 0.9), det_at(0.5, 0, 0.8)};
  const std::vector<Box3D> gts = {gt_at(0, 0)};
  const auto match = match_center_distance(dets, gts, 2.0);
  ASSERT_EQ(match.pairs.size(), 1u);
  EXPECT_EQ(match.pairs[0].det_index, 0);
  EXPECT_EQ(match.det_order[0], 0);
  EXPECT_EQ(match.det_is_tp[0], 1);
  EXPECT_EQ(match.det_is_tp[1], 0);
}

TEST(MatchTest, DetTakesNearestUnmatchedGt) {
  const std::vector<Box3D> dets = {det_at(0, 0, 0.9)};
  const std::vector<Box3D> gts = {gt_at(1.5, 0), gt_at(0.4, 0)};
  const auto match = match_center_distance(dets, gts, 2.0);
  ASSERT_EQ(match.pairs.size(), 1u);
  EXPECT_EQ(match.pairs[0].gt_index, 1);
}

TEST(MatchTest, TpPlusFnEqualsGtsProperty) {
  std::mt19937_64 rng(51);
  for (int round = 0; round < 100; ++round) {
    std::vector<Box3D> dets, gts;
    const int nd = uniform_int(rng, 0, 12);
    const int ng = uniform_int(rng, 0, 8);
    for (int i = 0; i < nd; ++i) {
      dets.push_back(det_at(uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, 0, 1)));
    }
    for (int i = 0; i < ng; ++i) {
      gts.push_back(gt_at(uniform(rng, -5, 5), uniform(rng, -5, 5)));
    }
    const auto match = match_center_distance(dets, gts, 2.0);
    int tp = 0;
    for (auto flag : match.det_is_tp) tp += flag;
    EXPECT_EQ(static_cast<int>(match.pairs.size()), tp);
    EXPECT_LE(tp, ng);  // fn = ng - tp >= 0

    // Each gt and det matched at most once.
    std::set<int> gt_used, det_used;
    for (const auto& pair : match.pairs) {
      EXPECT_TRUE(gt_used.insert(pair.gt_index).second);
      EXPECT_TRUE(det_used.insert(pair.det_index).second);
    }
  }
}

Box3D bev_box(double x, double y, double l, double w, double yaw) {
  Box3D box;
  box.center = Eigen::Vector3d(x, y, 0);
  box.size = Eigen::Vector3d(l, w, 1);
  box.yaw = yaw;
  return box;
}

TEST(IouBevTest, IdenticalBoxesGiveExactlyOne) {
  const Box3D box = bev_box(3, -2, 4, 2, 0.7);
  EXPECT_DOUBLE_EQ(iou_bev(box, box), 1.0);
}

TEST(IouBevTest, DisjointBoxesGiveZero) {
  EXPECT_DOUBLE_EQ(iou_bev(bev_box(0, 0, 2, 2, 0), bev_box(10, 0, 2, 2, 0.3)), 0.0);
}

TEST(IouBevTest, OffsetUnitSquaresGiveOneThird) {
  const double iou = iou_bev(bev_box(0, 0, 1, 1, 0), bev_box(0.5, 0, 1, 1, 0));
  EXPECT_DOUBLE_EQ(iou, 1.0 / 3.0);
}

TEST(IouBevTest, DegenerateBoxGivesZero) {
  EXPECT_DOUBLE_EQ(iou_bev(bev_box(0, 0, 1e-9, 1e-9, 0), bev_box(0, 0, 1, 1, 0)), 0.0);
}

TEST(IouBevTest, SymmetricAndBounded) {
  std::mt19937_64 rng(52);
  for (int round = 0; round < 500; ++round) {
    const Box3D a = bev_box(uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, 0.5, 5),
                            uniform(rng, 0.5, 3), uniform(rng, -kPi, kPi));
    const Box3D b = bev_box(uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, 0.5, 5),
                            uniform(rng, 0.5, 3), uniform(rng, -kPi, kPi));
    const double ab = iou_bev(a, b);
    EXPECT_NEAR(ab, iou_bev(b, a), 1e-12);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(IouBevTest, TranslationAndJointRotationInvariant) {
  std::mt19937_64 rng(53);
  for (int round = 0; round < 200; ++round) {
    Box3D a = bev_box(uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, 0.5, 4),
                      uniform(rng, 0.5, 3), uniform(rng, -kPi, kPi));
    Box3D b = bev_box(uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, 0.5, 4),
                      uniform(rng, 0.5, 3), uniform(rng, -kPi, kPi));
    const double base = iou_bev(a, b);

    const double dx = uniform(rng, -20, 20), dy = uniform(rng, -20, 20);
    const double theta = uniform(rng, -kPi, kPi);
    const double c = std::cos(theta), s = std::sin(theta);
    for (Box3D* box : {&a, &b}) {
      const double x = box->center.x(), y = box->center.y();
      box->center.x() = c * x - s * y + dx;
      box->center.y() = s * x + c * y + dy;
      box->yaw = normalize_yaw(box->yaw + theta);
    }
    EXPECT_NEAR(iou_bev(a, b), base, 1e-9);
  }
}

TEST(IouBevTest, AgreesWithMonteCarloSampler) {
  std::mt19937_64 rng(54);
  for (int round = 0; round < 100; ++round) {
    const Box3D a = bev_box(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, 0.5, 5),
                            uniform(rng, 0.5, 3), uniform(rng, -kPi, kPi));
    const Box3D b = bev_box(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, 0.5, 5),
                            uniform(rng, 0.5, 3), uniform(rng, -kPi, kPi));
    const double exact = iou_bev(a, b);
    const double sampled = monte_carlo_iou_bev(a, b, 200000, rng);
    EXPECT_NEAR(exact, sampled, 0.01);
  }
}

TEST(Iou3dTest, IdenticalBoxesGiveOne) {
  Box3D box = bev_box(1, 1, 3, 2, 0.4);
  box.center.z() = 0.7;
  box.size.z() = 1.5;
  EXPECT_DOUBLE_EQ(iou_3d(box, box), 1.0);
}

TEST(Iou3dTest, DisjointHeightGivesZero) {
  Box3D a = bev_box(0, 0, 2, 2, 0);
  a.center.z() = 0.0;
  a.size.z() = 1.0;
  Box3D b = a;
  b.center.z() = 2.0;
  EXPECT_DOUBLE_EQ(iou_3d(a, b), 0.0);
}

TEST(Iou3dTest, HalfHeightOverlapGivesOneThird) {
  Box3D a = bev_box(0, 0, 2, 2, 0);
  a.center.z() = 0.0;
  a.size.z() = 1.0;
  Box3D b = a;
  b.center.z() = 0.5;  // overlap = h/2; union = 1.5 h
  EXPECT_DOUBLE_EQ(iou_3d(a, b), 1.0 / 3.0);
}

CameraModel forward_camera() {
  CameraModel camera;
  camera.intrinsics << 100, 0, 400, 0, 100, 225, 0, 0, 1;
  camera.width = 800;
  camera.height = 450;
  camera.extrinsics.rotation << 0, -1, 0, 0, 0, -1, 1, 0, 0;
  return camera;
}

Box3D thin_box(double y_center, double z_center) {
  // Nearly planar box 10 m ahead whose projection is a 100x100 px rectangle.
  Box3D box;
  box.center = Eigen::Vector3d(10.0, y_center, z_center);
  box.size = Eigen::Vector3d(1e-6, 10.0, 10.0);
  return box;
}

TEST(Iou2dImageTest, IdenticalBoxesGiveOne) {
  const CameraModel camera = forward_camera();
  const Box3D box = thin_box(0, 0);
  EXPECT_NEAR(iou_2d_image(box, box, camera), 1.0, 1e-12);
}

TEST(Iou2dImageTest, DisjointProjectionsGiveZero) {
  const CameraModel camera = forward_camera();
  EXPECT_DOUBLE_EQ(iou_2d_image(thin_box(-15, 0), thin_box(15, 0), camera), 0.0);
}

TEST(Iou2dImageTest, KnownRectanglesGiveOneThird) {
  // Rectangles [300,400]x[175,275] and [350,450]x[175,275] in pixels:
  // intersection 50x100 over union 15000.
  const CameraModel camera = forward_camera();
  const double iou = iou_2d_image(thin_box(5.0, 0.0), thin_box(0.0, 0.0), camera);
  EXPECT_NEAR(iou, 1.0 / 3.0, 1e-6);
}

TEST(Iou2dImageTest, BoxBehindCameraGivesZero) {
  const CameraModel camera = forward_camera();
  Box3D behind = thin_box(0, 0);
  behind.center.x() = -10.0;
  EXPECT_DOUBLE_EQ(iou_2d_image(behind, thin_box(0, 0), camera), 0.0);
}

TEST(Iou2dImageTest, RectanglesClipToImageBounds) {
  const CameraModel camera = forward_camera();
  // Shifting far right pushes part of the rectangle outside; the clipped
  // rectangle is what participates.
  const Box3D inside = thin_box(0, 0);
  Box3D shifted = thin_box(-35.0, 0.0);  // u in [700, 800] after clipping
  const double iou = iou_2d_image(inside, shifted, camera);
  EXPECT_DOUBLE_EQ(iou, 0.0);  // disjoint after clipping
  // And a self-overlap of a clipped box is still 1.
  EXPECT_NEAR(iou_2d_image(shifted, shifted, camera), 1.0, 1e-12);
}

LabeledDetections make_labels(std::vector<double> scores, std::vector<std::uint8_t> tp,
                              int num_gts) {
  LabeledDetections labels;
  labels.scores = std::move(scores);
  labels.is_tp = std::move(tp);
  labels.num_gts = num_gts;
  return labels;
}

TEST(ApTest, SinglePerfectDetectionScoresHundred) {
  const std::vector<Box3D> dets = {det_at(0, 0, 1.0)};
  const std::vector<Box3D> gts = {gt_at(0, 0)};
  MatcherSpec matcher;
  matcher.threshold = 2.0;
  EXPECT_DOUBLE_EQ(*compute_ap(dets, gts, matcher, ApInterpolation::kNuscenes101), 100.0);
  EXPECT_DOUBLE_EQ(*compute_ap(dets, gts, matcher, ApInterpolation::kKitti40), 100.0);
}

TEST(ApTest, NoDetectionsScoreZero) {
  const std::vector<Box3D> gts = {gt_at(0, 0)};
  MatcherSpec matcher;
  EXPECT_DOUBLE_EQ(*compute_ap({}, gts, matcher, ApInterpolation::kNuscenes101), 0.0);
  EXPECT_DOUBLE_EQ(*compute_ap({}, gts, matcher, ApInterpolation::kKitti40), 0.0);
}

TEST(ApTest, NoGroundTruthIsAbsentNotZero) {
  MatcherSpec matcher;
  EXPECT_FALSE(compute_ap({}, {}, matcher, ApInterpolation::kNuscenes101).has_value());
  const std::vector<Box3D> dets = {det_at(0, 0, 0.5)};
  EXPECT_FALSE(compute_ap(dets, {}, matcher, ApInterpolation::kKitti40).has_value());
}

TEST(ApTest, InterleavedSweepMatchesNaiveOracle) {
  const auto labels = make_labels({0.9, 0.8, 0.7, 0.6, 0.5}, {1, 0, 1, 0, 1}, 3);
  for (auto scheme : {ApInterpolation::kNuscenes101, ApInterpolation::kKitti40}) {
    const auto ours = ap_from_labels(labels, scheme);
    const auto oracle = naive_ap(labels, scheme);
    ASSERT_TRUE(ours && oracle);
    EXPECT_NEAR(*ours, *oracle, 1e-9);
  }
}

TEST(ApTest, RandomLayoutsMatchNaiveOracle) {
  std::mt19937_64 rng(55);
  for (int round = 0; round < 200; ++round) {
    const int num_gts = uniform_int(rng, 1, 5);
    const int num_dets = uniform_int(rng, 0, 10);
    std::vector<double> scores(num_dets);
    std::vector<std::uint8_t> tp(num_dets, 0);
    int tp_budget = num_gts;
    for (int i = 0; i < num_dets; ++i) scores[i] = uniform(rng, 0, 1);
    std::sort(scores.rbegin(), scores.rend());
    for (int i = 0; i < num_dets; ++i) {
      if (tp_budget > 0 && uniform(rng, 0, 1) < 0.5) {
        tp[i] = 1;
        --tp_budget;
      }
    }
    const auto labels = make_labels(std::move(scores), std::move(tp), num_gts);
    for (auto scheme : {ApInterpolation::kNuscenes101, ApInterpolation::kKitti40}) {
      EXPECT_NEAR(*ap_from_labels(labels, scheme), *naive_ap(labels, scheme), 1e-9);
    }
  }
}

TEST(ApTest, KittiPerfectIsExactlyHundredEmptyIsZero) {
  const auto perfect = make_labels({0.9, 0.8}, {1, 1}, 2);
  EXPECT_EQ(*ap_from_labels(perfect, ApInterpolation::kKitti40), 100.0);
  const auto empty = make_labels({}, {}, 2);
  EXPECT_EQ(*ap_from_labels(empty, ApInterpolation::kKitti40), 0.0);
}

TEST(ApTest, ConvertingFalsePositiveToTruePositiveNeverLowersAp) {
  std::mt19937_64 rng(56);
  for (int round = 0; round < 200; ++round) {
    const int num_gts = uniform_int(rng, 2, 6);
    const int num_dets = uniform_int(rng, 2, 10);
    std::vector<double> scores(num_dets);
    std::vector<std::uint8_t> tp(num_dets, 0);
    for (int i = 0; i < num_dets; ++i) scores[i] = uniform(rng, 0, 1);
    std::sort(scores.rbegin(), scores.rend());
    int tp_count = 0;
    for (int i = 0; i < num_dets; ++i) {
      if (tp_count < num_gts - 1 && uniform(rng, 0, 1) < 0.4) {
        tp[i] = 1;
        ++tp_count;
      }
    }
    std::vector<int> fp_positions;
    for (int i = 0; i < num_dets; ++i) {
      if (!tp[i]) fp_positions.push_back(i);
    }
    if (fp_positions.empty()) continue;
    const int flip = fp_positions[uniform_int(rng, 0, static_cast<int>(fp_positions.size()) - 1)];

    const auto before = make_labels(scores, tp, num_gts);
    auto improved_tp = tp;
    improved_tp[flip] = 1;
    const auto after = make_labels(scores, improved_tp, num_gts);
    for (auto scheme : {ApInterpolation::kNuscenes101, ApInterpolation::kKitti40}) {
      EXPECT_GE(*ap_from_labels(after, scheme), *ap_from_labels(before, scheme) - 1e-12);
    }
  }
}

TEST(ApTest, IouMatcherDrivesComputeAp) {
  const std::vector<Box3D> dets = {det_at(0, 0, 0.9)};
  const std::vector<Box3D> gts = {gt_at(0.2, 0)};
  MatcherSpec matcher;
  matcher.kind = MatcherSpec::Kind::kIou;
  matcher.variant = IouVariant::kBev;
  matcher.threshold = 0.5;
  EXPECT_DOUBLE_EQ(*compute_ap(dets, gts, matcher, ApInterpolation::kKitti40), 100.0);
  matcher.threshold = 0.99;
  EXPECT_DOUBLE_EQ(*compute_ap(dets, gts, matcher, ApInterpolation::kKitti40), 0.0);
}

TEST(TpErrorsTest, PerfectMatchGivesAllZero) {
  std::vector<Box3D> dets = {det_at(1, 1, 0.9)};
  std::vector<Box3D> gts = {gt_at(1, 1)};
  dets[0].attribute_id = 1;
  gts[0].attribute_id = 1;
  const auto match = match_center_distance(dets, gts, 2.0);
  const auto errors = tp_errors(match, dets, gts);
  EXPECT_DOUBLE_EQ(*errors.ate, 0.0);
  EXPECT_DOUBLE_EQ(*errors.ase, 0.0);
  EXPECT_DOUBLE_EQ(*errors.aoe, 0.0);
  EXPECT_DOUBLE_EQ(*errors.ave, 0.0);
  EXPECT_DOUBLE_EQ(*errors.aae, 0.0);
}

TEST(TpErrorsTest, QuarterTurnOrientationError) {
  std::vector<Box3D> dets = {det_at(0, 0, 0.9)};
  std::vector<Box3D> gts = {gt_at(0, 0)};
  dets[0].yaw = kPi / 2;
  const auto errors = tp_errors(match_center_distance(dets, gts, 2.0), dets, gts);
  EXPECT_DOUBLE_EQ(*errors.aoe, kPi / 2);
}

TEST(TpErrorsTest, VelocityGapGivesUnitError) {
  std::vector<Box3D> dets = {det_at(0, 0, 0.9)};
  std::vector<Box3D> gts = {gt_at(0, 0)};
  dets[0].velocity = Eigen::Vector2d(1, 0);
  const auto errors = tp_errors(match_center_distance(dets, gts, 2.0), dets, gts);
  EXPECT_DOUBLE_EQ(*errors.ave, 1.0);
}

TEST(TpErrorsTest, ScaleErrorFromAlignedIou) {
  std::vector<Box3D> dets = {det_at(0, 0, 0.9)};
  std::vector<Box3D> gts = {gt_at(0, 0)};
  dets[0].size = Eigen::Vector3d(4, 2, 2);
  gts[0].size = Eigen::Vector3d(2, 2, 2);  // intersection 8, union 16
  const auto errors = tp_errors(match_center_distance(dets, gts, 2.0), dets, gts);
  EXPECT_DOUBLE_EQ(*errors.ase, 0.5);
}

TEST(TpErrorsTest, TranslationErrorIsBevDistance) {
  std::vector<Box3D> dets = {det_at(1, 0, 0.9)};
  dets[0].center.z() = 10.0;  // z must not contribute
  std::vector<Box3D> gts = {gt_at(0, 0)};
  const auto errors = tp_errors(match_center_distance(dets, gts, 2.0), dets, gts);
  EXPECT_DOUBLE_EQ(*errors.ate, 1.0);
}

TEST(TpErrorsTest, NoMatchesReportsAbsent) {
  const auto errors = tp_errors(MatchResult{}, {}, {});
  EXPECT_FALSE(errors.ate.has_value());
  EXPECT_FALSE(errors.aae.has_value());
}

TEST(TpErrorsTest, AttributeErrorSkipsGtsWithoutAttributes) {
  std::vector<Box3D> dets = {det_at(0, 0, 0.9), det_at(10, 0, 0.8)};
  std::vector<Box3D> gts = {gt_at(0, 0), gt_at(10, 0)};
  dets[0].attribute_id = 2;
  gts[0].attribute_id = 3;   // counted, mismatched
  gts[1].attribute_id = -1;  // skipped
  const auto errors = tp_errors(match_center_distance(dets, gts, 2.0), dets, gts);
  EXPECT_DOUBLE_EQ(*errors.aae, 1.0);

  gts[0].attribute_id = -1;
  const auto none = tp_errors(match_center_distance(dets, gts, 2.0), dets, gts);
  EXPECT_FALSE(none.aae.has_value());
}

TEST(AggregateMapTest, PublishedRowsReproduce) {
  EXPECT_NEAR(*aggregate_map({{ClassId::kPedestrian, 36.6},
                              {ClassId::kCyclist, 26.4},
                              {ClassId::kCar, 58.9}}),
              40.6, 0.05);
  EXPECT_NEAR(*aggregate_map({{ClassId::kPedestrian, 39.2},
                              {ClassId::kCyclist, 58.5},
                              {ClassId::kCar, 51.2}}),
              49.6, 0.05);
}

TEST(AggregateMapTest, SingleClassPassesThrough) {
  EXPECT_DOUBLE_EQ(*aggregate_map({{ClassId::kCar, 42.0}}), 42.0);
}

TEST(AggregateMapTest, EmptyMapIsAbsent) {
  EXPECT_FALSE(aggregate_map({}).has_value());
}

TEST(ProtocolTest, PerfectDetectorScoresHundredEverywhere) {
  std::mt19937_64 rng(57);
  std::vector<EvalFrame> frames(3);
  for (EvalFrame& frame : frames) {
    frame.camera = forward_camera();
    for (int k = 0; k < kNumClasses; ++k) {
      Box3D gt;
      gt.center = Eigen::Vector3d(uniform(rng, 8, 30), uniform(rng, -4, 4), 0.5);
      gt.size = Eigen::Vector3d(2 + k, 1.5, 1.5);
      gt.yaw = normalize_yaw(uniform(rng, -3, 3));
      gt.class_id = static_cast<ClassId>(k);
      gt.attribute_id = k;
      frame.gts.push_back(gt);
      Box3D det = gt;
      det.score = 0.9;
      frame.dets.push_back(det);
    }
  }

  const NuscenesEval nus = evaluate_nuscenes(frames, NuscenesEvalParams{});
  ASSERT_TRUE(nus.mean_ap.has_value());
  EXPECT_DOUBLE_EQ(*nus.mean_ap, 100.0);
  for (int k = 0; k < kNumClasses; ++k) {
    EXPECT_DOUBLE_EQ(*nus.per_class[k].ap, 100.0);
    EXPECT_DOUBLE_EQ(*nus.per_class[k].errors.ate, 0.0);
    EXPECT_DOUBLE_EQ(*nus.per_class[k].errors.aae, 0.0);
  }

  const VodEval vod = evaluate_vod(frames, VodEvalParams{});
  for (std::size_t v = 0; v < kVodVariants.size(); ++v) {
    EXPECT_DOUBLE_EQ(*vod.mean_ap[v], 100.0);
  }
}

TEST(ProtocolTest, MissingClassIsExcludedFromMeanAp) {
  EvalFrame frame;
  Box3D gt = gt_at(5, 0, ClassId::kCar);
  frame.gts = {gt};
  Box3D det = gt;
  det.score = 1.0;
  frame.dets = {det};
  const std::vector<EvalFrame> frames = {frame};

  const NuscenesEval nus = evaluate_nuscenes(frames, NuscenesEvalParams{});
  EXPECT_FALSE(nus.per_class[static_cast<int>(ClassId::kPedestrian)].ap.has_value());
  ASSERT_TRUE(nus.mean_ap.has_value());
  EXPECT_DOUBLE_EQ(*nus.mean_ap, 100.0);  // mean over the single present class
}

TEST(ProtocolTest, PoolingAcrossFramesKeepsPerFrameMatching) {
  // A detection can only match ground truth in its own frame.
  EvalFrame frame_a, frame_b;
  frame_a.gts = {gt_at(0, 0)};
  frame_a.dets = {det_at(20, 0, 0.9)};  // far from its own gt
  frame_b.gts = {gt_at(20, 0)};
  frame_b.dets = {};
  const std::vector<EvalFrame> frames = {frame_a, frame_b};

  MatcherSpec matcher;
  matcher.threshold = 2.0;
  const auto labels = pool_matches(frames, ClassId::kCar, matcher);
  EXPECT_EQ(labels.num_gts, 2);
  ASSERT_EQ(labels.is_tp.size(), 1u);
  EXPECT_EQ(labels.is_tp[0], 0);
}

TEST(PrCurveTest, RecallNonDecreasingAndRatiosHold) {
  const auto labels = make_labels({0.9, 0.8, 0.7, 0.6}, {1, 0, 1, 0}, 4);
  const PRCurve curve = pr_curve_from_labels(labels);
  ASSERT_EQ(curve.recall.size(), 4u);
  EXPECT_DOUBLE_EQ(curve.recall[0], 0.25);
  EXPECT_DOUBLE_EQ(curve.precision[0], 1.0);
  EXPECT_DOUBLE_EQ(curve.recall[1], 0.25);
  EXPECT_DOUBLE_EQ(curve.precision[1], 0.5);
  EXPECT_DOUBLE_EQ(curve.recall[3], 0.5);
  EXPECT_DOUBLE_EQ(curve.precision[3], 0.5);
  for (std::size_t i = 1; i < curve.recall.size(); ++i) {
    EXPECT_GE(curve.recall[i], curve.recall[i - 1]);
  }
}

}  // namespace
}  // namespace rcbev
