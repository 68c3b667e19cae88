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

#include "nddr/graph.hpp"
#include "nddr/tensor.hpp"

namespace nddr {

inline constexpr std::int32_t kIgnoreLabel = 255;
inline constexpr double kNormalEps = 1e-8;

namespace ops {

// Mean negative log-likelihood over sites whose label != ignore_label.
// logits are (N,H,W,Cls) with one label per site, or (N,1,1,Cls) for
// image-level tasks. All-ignored input yields 0 with zero gradient.
template <typename T>
Tensor<T> softmax_cross_entropy(Graph<T>& g, const Tensor<T>& logits,
                                std::span<const std::int32_t> labels,
                                std::int32_t ignore_label = kIgnoreLabel);

// pred (N,H,W,3) is l2-normalized per site as p / max(|p|, eps); the loss is
// the mean over masked sites of |p_hat - gt|^2. mask is (N,H,W,1) with 0/1.
template <typename T>
Tensor<T> normal_loss(Graph<T>& g, const Tensor<T>& pred, const Tensor<T>& gt,
                      const Tensor<T>& mask);

}  // namespace ops
}  // namespace nddr
