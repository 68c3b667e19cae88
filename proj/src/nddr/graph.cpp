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

#include "nddr/graph.hpp"

#include <algorithm>

#include "nddr/error.hpp"

namespace nddr {

template <typename T>
bool Graph<T>::wants_grad(std::initializer_list<const Tensor<T>*> inputs) const {
  if (!grad_enabled_) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor<T>* t) {
    return t != nullptr && t->defined() && t->requires_grad();
  });
}

template <typename T>
bool Graph<T>::wants_grad(const std::vector<Tensor<T>>& inputs) const {
  if (!grad_enabled_) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor<T>& t) {
    return t.defined() && t.requires_grad();
  });
}

template <typename T>
void Graph<T>::record(const char* op, std::vector<Tensor<T>> inputs,
                      Tensor<T>& output, BackwardFn fn) {
  require(!consumed_, ErrorCode::kState, "cannot record '", op,
          "' on a consumed graph; call reset() first");
  output.set_requires_grad(true);
  nodes_.push_back(Node{op, std::move(inputs), output, std::move(fn)});
}

template <typename T>
void Graph<T>::check_output(const char* op, const Tensor<T>& output) const {
  if (check_finite_ && !output.all_finite())
    fail(ErrorCode::kNotFinite, "non-finite value produced by '", op, "'");
}

template <typename T>
void Graph<T>::backward(const Tensor<T>& loss) {
  require(!consumed_, ErrorCode::kState, "graph already consumed by backward()");
  require(loss.defined() && loss.numel() == 1, ErrorCode::kShapeMismatch,
          "backward() needs a scalar loss, got ",
          loss.defined() ? loss.shape().str() : std::string("undefined"));
  Tensor<T> root = loss;
  auto g = root.grad_buffer();
  g[0] = T(1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (!it->output.has_grad()) continue;  // not reachable from the loss
    it->fn();
  }
  consumed_ = true;
}

template <typename T>
void Graph<T>::reset() {
  nodes_.clear();
  consumed_ = false;
}

template <typename T>
void accumulate_grad(Tensor<T>& dst, std::span<const T> src) {
  if (!dst.defined() || !dst.requires_grad()) return;
  auto g = dst.grad_buffer();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += src[i];
}

template void accumulate_grad<float>(Tensor<float>&, std::span<const float>);
template void accumulate_grad<double>(Tensor<double>&, std::span<const double>);
template class Graph<float>;
template class Graph<double>;

}  // namespace nddr
