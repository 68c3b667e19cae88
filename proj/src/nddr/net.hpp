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
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nddr/checkpoint.hpp"
#include "nddr/fusion.hpp"
#include "nddr/graph.hpp"
#include "nddr/layers.hpp"

namespace nddr {

enum class NetMode { kSingle, kSharedTrunk, kNddr, kCrossStitch, kSluice };

const char* mode_name(NetMode mode);
NetMode parse_mode(std::string_view text);
inline bool is_fusion_mode(NetMode m) {
  return m == NetMode::kNddr || m == NetMode::kCrossStitch || m == NetMode::kSluice;
}

struct StageSpec {
  int convs = 2;
  std::int64_t channels = 8;
  bool pool = true;
  PoolSpec pool_spec{};
};

enum class HeadKind { kPixel, kVector };

// Pixel heads: 1x1 conv at feature resolution, then bilinear upsampling to the
// input resolution. Vector heads: global average pool, then fully connected.
struct HeadSpec {
  HeadKind kind = HeadKind::kPixel;
  std::int64_t outputs = 1;
};

struct BackboneSpec {
  std::int64_t input_channels = 3;
  int kernel = 3;
  std::vector<StageSpec> stages;
  std::vector<HeadSpec> heads;  // one per task

  // Four stages of two 3x3 conv + ReLU with widths 8/16/32/64. The first two
  // stages pool 2x2/2; the last two pool 3x3/1 (pad 1), keeping the deep
  // features at 1/4 of the input resolution.
  static BackboneSpec toy_vgg(std::vector<HeadSpec> heads, std::int64_t input_channels = 3);

  std::vector<std::int64_t> stage_channels() const;
  // Product of pooling strides.
  std::int64_t reduction() const;
};

struct BuildOptions {
  NetMode mode = NetMode::kNddr;
  int tasks = 2;
  int task = 0;  // which head a single-mode graph carries
  bool shortcut = false;
  InitPolicy init = InitPolicy::diagonal(0.9, 0.1);
  std::uint64_t seed = 0;
  NddrOptions nddr{};
  int sluice_subspaces = 2;
  std::int64_t shortcut_channels = 0;  // 0 selects the last stage width
  ResizeMode shortcut_resize = ResizeMode::kBilinear;
};

enum class ParamRole { kWeight, kBias, kNormScale, kNormShift, kMixing, kBuffer };

template <typename T>
struct ParamEntry {
  std::string name;
  Tensor<T> tensor;
  ParamRole role = ParamRole::kWeight;
  bool fusion = false;      // belongs to a fusion layer (NDDR, cross-stitch, sluice)
  double lr_scale = 1.0;    // multiplies the base learning rate
  bool decay = false;       // receives l2 weight decay
  int branch = -1;          // task branch whose single-task checkpoint supplies it
  std::string local_name;   // name inside that single-task checkpoint

  bool trainable() const { return role != ParamRole::kBuffer; }
};

template <typename T>
class ParamRegistry {
 public:
  void add(ParamEntry<T> entry);
  std::vector<ParamEntry<T>>& entries() { return entries_; }
  const std::vector<ParamEntry<T>>& entries() const { return entries_; }
  const ParamEntry<T>* find(std::string_view name) const;

  std::int64_t parameter_count() const;  // trainable scalars only
  void set_fusion_lr_scale(double scale);
  void zero_grad();

 private:
  std::vector<ParamEntry<T>> entries_;
};

// A runnable multi-task network: K backbone branches (one for single and
// shared-trunk modes), optional fusion layers at every stage end, optional
// shortcut aggregation, and one head per task.
template <typename T>
class TaskGraph {
 public:
  TaskGraph(const BackboneSpec& spec, const BuildOptions& options);
  TaskGraph(TaskGraph&&) noexcept = default;
  TaskGraph& operator=(TaskGraph&&) noexcept = default;
  TaskGraph(const TaskGraph&) = delete;
  TaskGraph& operator=(const TaskGraph&) = delete;

  // One output per task in task order (a single-mode graph returns one).
  std::vector<Tensor<T>> forward(Graph<T>& g, const Tensor<T>& x);

  NetMode mode() const { return options_.mode; }
  const BackboneSpec& spec() const { return spec_; }
  const BuildOptions& options() const { return options_; }
  // Dataset task index served by each output.
  const std::vector<int>& task_ids() const { return task_ids_; }
  int fusion_layer_count() const { return static_cast<int>(fusions_.size()); }

  ParamRegistry<T>& registry() { return registry_; }
  const ParamRegistry<T>& registry() const { return registry_; }
  std::int64_t parameter_count() const { return registry_.parameter_count(); }

  void set_training(bool training);
  bool training() const { return training_; }
  // Puts every fusion normalization into its identity eval configuration.
  void set_fusion_norm_identity();

  NddrLayer<T>* nddr_layer(int stage);

  // Every registry entry, including running statistics.
  Checkpoint to_checkpoint() const;
  // Exact name/shape match required; all problems are reported together and
  // nothing is modified unless the whole checkpoint is consistent.
  void load_checkpoint(const Checkpoint& ck);
  // Copies backbone and head parameters of branch i from checkpoint i (single
  // task checkpoints). Fusion and shortcut parameters keep their init.
  void load_pretrained(std::span<const Checkpoint> per_task);

 private:
  using FusionLayer = std::variant<NddrLayer<T>, CrossStitchLayer<T>, SluiceLayer<T>>;
  struct Head {
    HeadKind kind;
    Tensor<T> weight;
    Tensor<T> bias;
  };

  Tensor<T> run_stage(Graph<T>& g, int branch, std::size_t stage, const Tensor<T>& x);
  Tensor<T> run_head(Graph<T>& g, int out, const Tensor<T>& feat, std::int64_t h, std::int64_t w);
  void register_fusion(std::size_t stage, FusionLayer& layer);

  BackboneSpec spec_;
  BuildOptions options_;
  std::vector<int> task_ids_;
  std::vector<std::vector<std::vector<Conv2dParams<T>>>> branches_;  // [branch][stage][conv]
  std::vector<FusionLayer> fusions_;
  std::vector<ShortcutAggregator<T>> shortcuts_;
  std::vector<Head> heads_;
  ParamRegistry<T> registry_;
  bool training_ = false;
};

// Closed-form trainable parameter count for a (spec, options) pair.
std::int64_t closed_form_parameter_count(const BackboneSpec& spec, const BuildOptions& options);

extern template class ParamRegistry<float>;
extern template class ParamRegistry<double>;
extern template class TaskGraph<float>;
extern template class TaskGraph<double>;

}  // namespace nddr
