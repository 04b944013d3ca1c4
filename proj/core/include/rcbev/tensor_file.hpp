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
#include <span>
#include <vector>

namespace rcbev {

// Binary tensor container: "RCBT" magic, u32 version, u32 dtype, u32 rank,
// i64 dims[rank], then the row-major little-endian payload. Writes are
// atomic (temp file + rename).

enum class TensorDtype : std::uint32_t {
  kFloat32 = 1,
  kFloat64 = 2,
  kInt32 = 3,
};

struct Tensor {
  TensorDtype dtype = TensorDtype::kFloat32;
  std::vector<std::int64_t> dims;
  std::vector<float> f32;
  std::vector<double> f64;
  std::vector<std::int32_t> i32;

  std::int64_t element_count() const;
  // Payload widened to double regardless of stored dtype.
  std::vector<double> as_f64() const;
};

Tensor read_tensor(const std::filesystem::path& path);

void write_tensor(const std::filesystem::path& path, std::span<const std::int64_t> dims,
                  std::span<const float> data);
void write_tensor(const std::filesystem::path& path, std::span<const std::int64_t> dims,
                  std::span<const double> data);
void write_tensor(const std::filesystem::path& path, std::span<const std::int64_t> dims,
                  std::span<const std::int32_t> data);

}  // namespace rcbev
