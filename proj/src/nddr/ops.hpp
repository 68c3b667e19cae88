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

// Generic differentiable primitives: elementwise arithmetic, reductions,
// matrix product and channel-structural ops. Every op records itself on the
// graph when any input requires a gradient.

#include <vector>

#include "nddr/graph.hpp"
#include "nddr/tensor.hpp"

namespace nddr::ops {

template <typename T>
Tensor<T> add(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(Graph<T>& g, const Tensor<T>& a, T factor);

// Reductions to a 1x1x1x1 scalar.
template <typename T>
Tensor<T> sum(Graph<T>& g, const Tensor<T>& a);
template <typename T>
Tensor<T> mean(Graph<T>& g, const Tensor<T>& a);

// Treats a as an (N*H*W) x K row matrix and b (1,1,K,F) as K x F.
// Returns (N,H,W,F).
template <typename T>
Tensor<T> matmul(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> relu(Graph<T>& g, const Tensor<T>& x);

// Channel blocks appear in list order: block j occupies [offset_j, offset_j + C_j).
template <typename T>
Tensor<T> concat_channels(Graph<T>& g, const std::vector<Tensor<T>>& xs);

template <typename T>
Tensor<T> slice_channels(Graph<T>& g, const Tensor<T>& x, std::int64_t begin,
                         std::int64_t count);

}  // namespace nddr::ops
