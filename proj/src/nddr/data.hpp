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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nddr/tensor.hpp"

namespace nddr {

enum class TaskKind { kPixelClass, kPixelDirection, kImageClass };

const char* task_kind_name(TaskKind kind);
TaskKind parse_task_kind(std::string_view text);

struct TaskDescriptor {
  TaskKind kind = TaskKind::kPixelClass;
  std::int64_t classes = 0;  // 3 for directions
  friend bool operator==(const TaskDescriptor&, const TaskDescriptor&) = default;
};

// Labels are stored as f32 tensors: class maps (1,H,W,1) holding integer
// values, direction fields (1,H,W,3), image classes (1,1,1,1). Masks have the
// label's spatial shape with one channel and values 0 or 1.
struct Sample {
  Tensor<float> input;
  std::vector<Tensor<float>> labels;
  std::vector<Tensor<float>> masks;
};

struct Dataset {
  std::string generator;
  std::uint64_t seed = 0;
  std::string split = "train";
  std::int64_t hw = 0;
  std::int64_t channels = 3;
  std::vector<TaskDescriptor> tasks;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
};

// A minibatch converted to the training precision.
template <typename T>
struct Batch {
  Tensor<T> input;
  std::vector<std::vector<std::int32_t>> classes;  // per task, for class tasks
  std::vector<Tensor<T>> directions;               // per task, for direction tasks
  std::vector<Tensor<T>> masks;                    // per task
};

template <typename T>
Batch<T> make_batch(const Dataset& d, std::span<const std::size_t> indices);

struct ShapeDesc {
  enum class Kind { kDisk, kSquare };
  Kind kind = Kind::kDisk;
  double cx = 0;
  double cy = 0;
  double radius = 1;  // half side for squares
  int cls = 1;
};

// Renders one scene: anti-aliased class-coloured shapes over a noisy
// background (pixel values mapped to [-1, 1]), the class map, and outward unit
// normals on boundary bands.
Sample render_shapes(std::int64_t hw, std::int64_t classes, std::span<const ShapeDesc> shapes,
                     std::uint64_t noise_seed, double noise = 0.05);

// Two pixel tasks over the same images: shape class (Cls classes with 0 the
// background) and boundary-normal direction. hw must be a multiple of
// pool_factor.
Dataset gen_shapes_tasks(std::int64_t n, std::int64_t hw, std::int64_t classes,
                         std::uint64_t seed, const std::string& split = "train",
                         std::int64_t pool_factor = 16);

struct AttrRange {
  double r_min;
  double r_max;
};
AttrRange attr_radius_range(std::int64_t hw);
int attr_age_bin(double radius, const AttrRange& range);

// Two image tasks: a 100-bin size class and a 2-class orientation.
Dataset gen_attr_tasks(std::int64_t n, std::int64_t hw, std::uint64_t seed,
                       const std::string& split = "train");

void save_dataset(const Dataset& d, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

// Exact equality of metadata and every stored value.
bool datasets_identical(const Dataset& a, const Dataset& b);

}  // namespace nddr
