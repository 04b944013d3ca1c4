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

#include "rcbev/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

#include "rcbev/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "tensor files are little-endian; big-endian hosts are unsupported");

namespace rcbev {

namespace {

constexpr char kMagic[4] = {'R', 'C', 'B', 'T'};
constexpr std::uint32_t kVersion = 1;

std::size_t dtype_size(TensorDtype dtype) {
  switch (dtype) {
    case TensorDtype::kFloat32:
    case TensorDtype::kInt32:
      return 4;
    case TensorDtype::kFloat64:
      return 8;
  }
  throw FormatError("tensor: unknown dtype");
}

std::int64_t product(std::span<const std::int64_t> dims) {
  return std::accumulate(dims.begin(), dims.end(), std::int64_t{1},
                         std::multiplies<std::int64_t>());
}

void write_raw(const std::filesystem::path& path, TensorDtype dtype,
               std::span<const std::int64_t> dims, const void* data, std::size_t bytes) {
  if (static_cast<std::int64_t>(bytes / dtype_size(dtype)) != product(dims)) {
    throw FormatError("write_tensor: data size does not match dims: " + path.string());
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("write_tensor: cannot open " + tmp.string());
    out.write(kMagic, sizeof(kMagic));
    const std::uint32_t header[3] = {kVersion, static_cast<std::uint32_t>(dtype),
                                     static_cast<std::uint32_t>(dims.size())};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    out.write(reinterpret_cast<const char*>(dims.data()),
              static_cast<std::streamsize>(dims.size() * sizeof(std::int64_t)));
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!out) throw FormatError("write_tensor: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::int64_t Tensor::element_count() const { return product(dims); }

std::vector<double> Tensor::as_f64() const {
  std::vector<double> out;
  switch (dtype) {
    case TensorDtype::kFloat32:
      out.assign(f32.begin(), f32.end());
      break;
    case TensorDtype::kFloat64:
      out = f64;
      break;
    case TensorDtype::kInt32:
      out.assign(i32.begin(), i32.end());
      break;
  }
  return out;
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("read_tensor: cannot open " + path.string());

  char magic[4];
  std::uint32_t header[3];
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("read_tensor: bad magic in " + path.string());
  }
  if (header[0] != kVersion) {
    throw FormatError("read_tensor: unsupported version in " + path.string());
  }

  Tensor tensor;
  tensor.dtype = static_cast<TensorDtype>(header[1]);
  const std::uint32_t rank = header[2];
  if (rank > 8) throw FormatError("read_tensor: implausible rank in " + path.string());
  tensor.dims.resize(rank);
  in.read(reinterpret_cast<char*>(tensor.dims.data()),
          static_cast<std::streamsize>(rank * sizeof(std::int64_t)));
  if (!in) throw FormatError("read_tensor: truncated header in " + path.string());

  const std::int64_t count = tensor.element_count();
  if (count < 0) throw FormatError("read_tensor: negative dim in " + path.string());
  const std::size_t bytes = static_cast<std::size_t>(count) * dtype_size(tensor.dtype);

  char* dst = nullptr;
  switch (tensor.dtype) {
    case TensorDtype::kFloat32:
      tensor.f32.resize(static_cast<std::size_t>(count));
      dst = reinterpret_cast<char*>(tensor.f32.data());
      break;
    case TensorDtype::kFloat64:
      tensor.f64.resize(static_cast<std::size_t>(count));
      dst = reinterpret_cast<char*>(tensor.f64.data());
      break;
    case TensorDtype::kInt32:
      tensor.i32.resize(static_cast<std::size_t>(count));
      dst = reinterpret_cast<char*>(tensor.i32.data());
      break;
    default:
      throw FormatError("read_tensor: unknown dtype in " + path.string());
  }
  in.read(dst, static_cast<std::streamsize>(bytes));
  if (!in || in.gcount() != static_cast<std::streamsize>(bytes)) {
    throw FormatError("read_tensor: truncated payload in " + path.string());
  }
  return tensor;
}

void write_tensor(const std::filesystem::path& path, std::span<const std::int64_t> dims,
                  std::span<const float> data) {
  write_raw(path, TensorDtype::kFloat32, dims, data.data(), data.size_bytes());
}

void write_tensor(const std::filesystem::path& path, std::span<const std::int64_t> dims,
                  std::span<const double> data) {
  write_raw(path, TensorDtype::kFloat64, dims, data.data(), data.size_bytes());
}

void write_tensor(const std::filesystem::path& path, std::span<const std::int64_t> dims,
                  std::span<const std::int32_t> data) {
  write_raw(path, TensorDtype::kInt32, dims, data.data(), data.size_bytes());
}

}  // namespace rcbev
