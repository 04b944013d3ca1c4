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

namespace rcbev::testing {

// Deterministic synthetic dataset in the canonical manifest format: a handful
// of frames with a moving ego, multi-sweep radar blobs, camera feature and
// depth tensors, pillar-encoder weights, and a matching pipeline config. All
// annotated objects lie inside the default grid and camera FoV.
struct FixtureOptions {
  int num_frames = 5;
  int clutter_points_per_sweep = 40;
  int points_per_box = 12;
  std::uint64_t seed = 20260811;
};

struct FixturePaths {
  std::filesystem::path root;
  std::filesystem::path manifest;
  std::filesystem::path config;
};

FixturePaths build_fixture(const std::filesystem::path& dir, const FixtureOptions& options = {});

}  // namespace rcbev::testing
