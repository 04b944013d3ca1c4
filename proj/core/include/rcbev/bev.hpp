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

#include <cstddef>
#include <vector>

#include "rcbev/geometry.hpp"

namespace rcbev {

// Channels-first feature grid tied to a GridConfig. Row index follows x,
// column index follows y.
struct BevFeatureMap {
  int channels = 0;
  GridConfig grid;
  std::vector<float> data;  // [channels][rows][cols]

  static BevFeatureMap zeros(int channels, const GridConfig& grid) {
    BevFeatureMap map;
    map.channels = channels;
    map.grid = grid;
    map.data.assign(static_cast<std::size_t>(channels) * grid.rows() * grid.cols(), 0.0f);
    return map;
  }

  float& at(int channel, int row, int col) {
    return data[(static_cast<std::size_t>(channel) * grid.rows() + row) * grid.cols() + col];
  }
  float at(int channel, int row, int col) const {
    return data[(static_cast<std::size_t>(channel) * grid.rows() + row) * grid.cols() + col];
  }
};

}  // namespace rcbev
