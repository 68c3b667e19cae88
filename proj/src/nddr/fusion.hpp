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
#include <vector>

#include "nddr/graph.hpp"
#include "nddr/layers.hpp"
#include "nddr/tensor.hpp"

namespace nddr {

// How fusion weights start out. diagonal(a, b) puts a*I on a task's own
// channel block and b*I on every other task's block; xavier draws the whole
// [W^1' ... W^K'] uniformly with fan_in = K*C, fan_out = C.
struct InitPolicy {
  enum class Kind { kDiagonal, kXavier };
  Kind kind = Kind::kDiagonal;
  double alpha = 0.9;
  double beta = 0.1;
  std::uint64_t seed = 0;

  static InitPolicy diagonal(double alpha, double beta) {
    return InitPolicy{Kind::kDiagonal, alpha, beta, 0};
  }
  static InitPolicy xavier(std::uint64_t seed) {
    return InitPolicy{Kind::kXavier, 0.0, 0.0, seed};
  }
  // Accepts "diag:a,b" and "xavier".
  static InitPolicy parse(std::string_view text);
  std::string str() const;
};

// Where batch normalization sits inside an NDDR layer.
enum class NddrNorm { kShared, kPerTask, kNone };

struct NddrOptions {
  NddrNorm norm = NddrNorm::kShared;
  bool affine = true;
  bool bias = true;
};

// K projection filterbanks of shape (C,1,1,K*C), one per task.
template <typename T>
std::vector<Tensor<T>> diagonal_init(int tasks, std::int64_t channels, double alpha,
                                     double beta);

template <typename T>
std::vector<Tensor<T>> xavier_init(int tasks, std::int64_t channels, std::uint64_t seed);

// Concatenate the K same-resolution task features along channels, normalize,
// and project back to C channels per task with a learned 1x1 convolution.
template <typename T>
class NddrLayer {
 public:
  NddrLayer(int tasks, std::int64_t channels, const InitPolicy& init, NddrOptions options = {});

  std::vector<Tensor<T>> forward(Graph<T>& g, const std::vector<Tensor<T>>& features);

  int tasks() const { return tasks_; }
  std::int64_t channels() const { return channels_; }
  const NddrOptions& options() const { return options_; }

  Tensor<T>& weight(int task) { return weights_[task]; }
  const Tensor<T>& weight(int task) const { return weights_[task]; }
  Tensor<T>& bias(int task) { return biases_[task]; }
  std::vector<BatchNormState<T>>& norms() { return norms_; }

  // The (K*C) x C projection matrix of a task, rows indexed by concatenated
  // input channel, in row-major order.
  std::vector<T> projection_matrix(int task) const;

  void set_norm_mode(NormMode mode);
  void set_norm_identity();

 private:
  int tasks_;
  std::int64_t channels_;
  NddrOptions options_;
  std::vector<Tensor<T>> weights_;
  std::vector<Tensor<T>> biases_;
  std::vector<BatchNormState<T>> norms_;
};

// out_i = sum_j A[i][j] * in_j with a K x K trainable matrix stored (1,1,K,K).
template <typename T>
class CrossStitchLayer {
 public:
  CrossStitchLayer(int tasks, const InitPolicy& init);
  CrossStitchLayer(int tasks, std::vector<T> matrix);

  std::vector<Tensor<T>> forward(Graph<T>& g, const std::vector<Tensor<T>>& features);

  int tasks() const { return tasks_; }
  Tensor<T>& mixing() { return mixing_; }
  const Tensor<T>& mixing() const { return mixing_; }

  // NDDR layer with identical forward: every W^i block is A[i][j] * I, no
  // normalization, zero bias.
  NddrLayer<T> as_nddr(std::int64_t channels) const;

 private:
  int tasks_;
  Tensor<T> mixing_;
};

// Channels of each task split into S contiguous subspaces; subspace s of
// out_i = sum_{j,t} M[(i,s),(j,t)] * subspace t of in_j, M stored (1,1,KS,KS).
template <typename T>
class SluiceLayer {
 public:
  SluiceLayer(int tasks, int subspaces, const InitPolicy& init);
  SluiceLayer(int tasks, int subspaces, std::vector<T> matrix);

  std::vector<Tensor<T>> forward(Graph<T>& g, const std::vector<Tensor<T>>& features);

  int tasks() const { return tasks_; }
  int subspaces() const { return subspaces_; }
  Tensor<T>& mixing() { return mixing_; }
  const Tensor<T>& mixing() const { return mixing_; }

  NddrLayer<T> as_nddr(std::int64_t channels) const;

 private:
  int tasks_;
  int subspaces_;
  Tensor<T> mixing_;
};

// Resize every level to the target size, concatenate in level order and
// reduce to out_channels with a 1x1 convolution.
template <typename T>
class ShortcutAggregator {
 public:
  ShortcutAggregator(std::vector<std::int64_t> level_channels, std::int64_t out_channels,
                     const InitPolicy& init, ResizeMode resize = ResizeMode::kBilinear);

  Tensor<T> forward(Graph<T>& g, const std::vector<Tensor<T>>& levels, std::int64_t target_h,
                    std::int64_t target_w);

  std::int64_t in_channels() const { return weight_.shape().c; }
  std::int64_t out_channels() const { return weight_.shape().n; }
  Tensor<T>& weight() { return weight_; }
  Tensor<T>& bias() { return bias_; }

 private:
  std::vector<std::int64_t> level_channels_;
  ResizeMode resize_;
  Tensor<T> weight_;
  Tensor<T> bias_;
};

struct FusionParamCount {
  std::int64_t per_task = 0;  // sum over stages of (K*C)*C (+ C with bias)
  std::int64_t total = 0;     // K * per_task
};

FusionParamCount count_fusion_params(int tasks, std::span<const std::int64_t> stage_channels,
                                     bool with_bias = false);

namespace ops {

// Output for one task of the subspace mixing used by sluice (S = 1 gives
// cross-stitch). features are K tensors of identical shape.
template <typename T>
Tensor<T> subspace_mix(Graph<T>& g, const std::vector<Tensor<T>>& features,
                       const Tensor<T>& mixing, int task, int subspaces);

}  // namespace ops

extern template class NddrLayer<float>;
extern template class NddrLayer<double>;
extern template class CrossStitchLayer<float>;
extern template class CrossStitchLayer<double>;
extern template class SluiceLayer<float>;
extern template class SluiceLayer<double>;
extern template class ShortcutAggregator<float>;
extern template class ShortcutAggregator<double>;

}  // namespace nddr
