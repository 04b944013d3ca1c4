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

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "rcbev/camera_bev.hpp"
#include "rcbev/eval_metrics.hpp"
#include "rcbev/fusion_head.hpp"
#include "rcbev/radar_pillars.hpp"

namespace {

using namespace rcbev;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (rng() >> 11) * 0x1.0p-53 * (hi - lo);
}

std::vector<RadarPoint> random_cloud(std::size_t count, std::mt19937_64& rng) {
  std::vector<RadarPoint> points(count);
  for (RadarPoint& p : points) {
    p.x = uniform(rng, 0, 51.2);
    p.y = uniform(rng, -25.6, 25.6);
    p.z = uniform(rng, -1, 3);
    p.rcs = uniform(rng, -10, 20);
    p.v_r = uniform(rng, -20, 20);
    p.t = uniform(rng, -0.3, 0);
  }
  return points;
}

void BM_Pillarize(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto points = random_cloud(static_cast<std::size_t>(state.range(0)), rng);
  const GridConfig grid;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pillarize(points, RadarDims::k3_1d, grid, 32, 8192, 7));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Pillarize)->Arg(2000)->Arg(20000);

void BM_PointNetEncode(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto points = random_cloud(20000, rng);
  const GridConfig grid;
  const auto tensor = pillarize(points, RadarDims::k3_1d, grid, 32, 8192, 7);
  PointNetWeights weights;
  weights.linear = Eigen::MatrixXf::Random(11, static_cast<int>(state.range(0)));
  weights.bias = Eigen::VectorXf::Random(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(pointnet_encode(tensor, weights));
  }
}
BENCHMARK(BM_PointNetEncode)->Arg(32)->Arg(64);

void BM_LiftSplat(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const int height = 16, width = 44, bins = 60;
  ImageFeatureMap features;
  features.channels = static_cast<int>(state.range(0));
  features.height = height;
  features.width = width;
  features.stride = 16;
  features.data.resize(static_cast<std::size_t>(features.channels) * height * width);
  for (float& v : features.data) v = static_cast<float>(uniform(rng, 0, 1));

  DepthDistribution depth;
  depth.bins = bins;
  depth.height = height;
  depth.width = width;
  depth.probs.assign(static_cast<std::size_t>(bins) * height * width, 1.0f / bins);
  for (int d = 0; d < bins; ++d) depth.bin_depths.push_back(1.0 + d);

  CameraModel camera;
  camera.intrinsics << 700, 0, 352, 0, 700, 128, 0, 0, 1;
  camera.width = 704;
  camera.height = 256;
  camera.extrinsics.rotation << 0, -1, 0, 0, 0, -1, 1, 0, 0;

  const GridConfig grid;
  for (auto _ : state) {
    benchmark::DoNotOptimize(splat(lift(features, depth, camera), grid));
  }
}
BENCHMARK(BM_LiftSplat)->Arg(16)->Arg(80);

void BM_IouBev(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::vector<std::pair<Box3D, Box3D>> pairs(1024);
  for (auto& [a, b] : pairs) {
    for (Box3D* box : {&a, &b}) {
      box->center = Eigen::Vector3d(uniform(rng, -2, 2), uniform(rng, -2, 2), 0);
      box->size = Eigen::Vector3d(uniform(rng, 0.5, 5), uniform(rng, 0.5, 3), 1);
      box->yaw = uniform(rng, -3.14, 3.14);
    }
  }
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [a, b] = pairs[i++ & 1023];
    benchmark::DoNotOptimize(iou_bev(a, b));
  }
}
BENCHMARK(BM_IouBev);

void BM_RenderTargets(benchmark::State& state) {
  std::mt19937_64 rng(5);
  const GridConfig grid;
  std::vector<Box3D> boxes(static_cast<std::size_t>(state.range(0)));
  for (Box3D& box : boxes) {
    box.center = Eigen::Vector3d(uniform(rng, 2, 50), uniform(rng, -24, 24), 0.5);
    box.size = Eigen::Vector3d(uniform(rng, 0.5, 6), uniform(rng, 0.5, 3), 1.6);
    box.yaw = uniform(rng, -3.14, 3.14);
    box.class_id = static_cast<ClassId>(rng() % kNumClasses);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_targets(boxes, grid, kNumClasses));
  }
}
BENCHMARK(BM_RenderTargets)->Arg(8)->Arg(64);

void BM_DecodeDetections(benchmark::State& state) {
  std::mt19937_64 rng(6);
  const GridConfig grid;
  const std::size_t cells = static_cast<std::size_t>(grid.rows()) * grid.cols();
  std::vector<float> heat(kNumClasses * cells);
  for (float& v : heat) v = static_cast<float>(uniform(rng, 0, 1));
  std::vector<double> regs(kNumRegChannels * cells, 0.0);
  for (std::size_t i = 0; i < cells; ++i) regs[kRegCosYaw * cells + i] = 1.0;
  DecodeParams params;
  params.score_threshold = 0.95;
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode_detections(heat, kNumClasses, regs, {}, grid, params));
  }
}
BENCHMARK(BM_DecodeDetections);

void BM_ApSweep(benchmark::State& state) {
  std::mt19937_64 rng(7);
  LabeledDetections labels;
  labels.num_gts = 4000;
  labels.scores.resize(10000);
  labels.is_tp.resize(10000);
  for (std::size_t i = 0; i < labels.scores.size(); ++i) {
    labels.scores[i] = uniform(rng, 0, 1);
    labels.is_tp[i] = rng() % 3 == 0;
  }
  std::sort(labels.scores.rbegin(), labels.scores.rend());
  for (auto _ : state) {
    benchmark::DoNotOptimize(ap_from_labels(labels, ApInterpolation::kNuscenes101));
    benchmark::DoNotOptimize(ap_from_labels(labels, ApInterpolation::kKitti40));
  }
}
BENCHMARK(BM_ApSweep);

}  // namespace

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
