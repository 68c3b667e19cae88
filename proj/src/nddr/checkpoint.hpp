// Copyright 2026 The NDDR-CNN Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Binary tensor container. Layout, all integers little-endian:
//   "NDDR" | u32 version | u64 record count |
//   per record: u32 name length, UTF-8 name, u8 dtype (1 = f32, 2 = f64),
//               u8 ndim, ndim x u64 dims, raw little-endian values.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nddr/tensor.hpp"

namespace nddr {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointRecord {
  std::string name;
  DType dtype = DType::kF32;
  std::vector<std::uint64_t> dims;
  std::vector<float> f32;
  std::vector<double> f64;

  std::uint64_t numel() const;
  template <typename T>
  std::vector<T> values() const;
  // 4-D records map to Shape; lower ranks are right-aligned (leading ones).
  Shape shape() const;
};

class Checkpoint {
 public:
  const std::vector<CheckpointRecord>& records() const { return records_; }
  const CheckpointRecord* find(std::string_view name) const;

  void add(CheckpointRecord record);
  template <typename T>
  void add_tensor(const std::string& name, const Tensor<T>& t);
  void add_scalar(const std::string& name, double value);
  std::optional<double> scalar(std::string_view name) const;

  std::string encode() const;
  static Checkpoint decode(std::string_view bytes);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

 private:
  std::vector<CheckpointRecord> records_;
};

template <typename T>
Tensor<T> record_to_tensor(const CheckpointRecord& r);

}  // namespace nddr
