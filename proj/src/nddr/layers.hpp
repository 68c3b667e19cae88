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

#include "nddr/graph.hpp"
#include "nddr/tensor.hpp"

namespace nddr {

// Filterbank (F, kH, kW, Cin) plus an optional (1,1,1,F) bias.
template <typename T>
struct Conv2dParams {
  Tensor<T> weight;
  Tensor<T> bias;
  int stride = 1;
  int padding = 0;
};

enum class NormMode { kTrain, kEval };

// Per-channel batch normalization state. gamma/beta are trainable
// (1,1,1,C) tensors; running statistics are plain buffers.
template <typename T>
struct BatchNormState {
  Tensor<T> gamma;
  Tensor<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;
  T momentum = T(0.9);
  T eps = T(1e-5);
  NormMode mode = NormMode::kTrain;
  bool affine = true;

  static BatchNormState create(std::int64_t channels, bool affine = true);
  std::int64_t channels() const { return running_mean.shape().c; }
  // gamma = 1, beta = 0, running stats chosen so that eval mode reproduces its
  // input: mean 0 and var + eps == 1.
  void set_identity();
};

struct PoolSpec {
  int window = 2;
  int stride = 2;
  int padding = 0;
};

enum class ResizeMode { kBilinear, kNearest };

std::int64_t conv_out_size(std::int64_t in, std::int64_t kernel, int stride, int padding);

namespace ops {

// Cross-correlation via explicit patch gather followed by a GEMM.
template <typename T>
Tensor<T> conv2d(Graph<T>& g, const Tensor<T>& x, const Conv2dParams<T>& p);

// Per-site channel projection; weight is (Cout,1,1,Cin), bias optional.
template <typename T>
Tensor<T> conv1x1(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& weight,
                  const Tensor<T>& bias = Tensor<T>());

// Train mode normalizes with batch statistics over (N,H,W) and updates the
// running statistics; eval mode uses the running statistics.
template <typename T>
Tensor<T> batch_norm(Graph<T>& g, const Tensor<T>& x, BatchNormState<T>& state);

// Channelwise max over windows; ties route the gradient to the first
// row-major index. Padding cells never win.
template <typename T>
Tensor<T> max_pool(Graph<T>& g, const Tensor<T>& x, const PoolSpec& spec);

// Half-pixel (align_corners = false) sampling.
template <typename T>
Tensor<T> resize(Graph<T>& g, const Tensor<T>& x, std::int64_t out_h,
                 std::int64_t out_w, ResizeMode mode = ResizeMode::kBilinear);

// Flattens each sample's (H,W,C) block; weight is (F,1,1,H*W*C).
template <typename T>
Tensor<T> fully_connected(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& weight,
                          const Tensor<T>& bias = Tensor<T>());

template <typename T>
Tensor<T> global_avg_pool(Graph<T>& g, const Tensor<T>& x);

// Softmax over the channel dimension at every site.
template <typename T>
Tensor<T> softmax(Graph<T>& g, const Tensor<T>& x);

}  // namespace ops
}  // namespace nddr
