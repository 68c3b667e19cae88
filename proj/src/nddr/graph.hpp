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

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "nddr/tensor.hpp"

namespace nddr {

// Tape of recorded operations. Ops append nodes in execution order; backward()
// walks them in reverse exactly once, after which the tape is consumed until
// reset() is called.
template <typename T>
class Graph {
 public:
  using BackwardFn = std::function<void()>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // True when at least one input requires a gradient and recording is on.
  bool wants_grad(std::initializer_list<const Tensor<T>*> inputs) const;
  bool wants_grad(const std::vector<Tensor<T>>& inputs) const;

  // Marks output as requiring grad and appends the node.
  void record(const char* op, std::vector<Tensor<T>> inputs, Tensor<T>& output,
              BackwardFn fn);

  // Throws kNotFinite when finite checking is enabled and output has NaN/Inf.
  void check_output(const char* op, const Tensor<T>& output) const;

  void backward(const Tensor<T>& loss);
  void reset();

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }
  const std::string& op_name(std::size_t i) const { return nodes_[i].op; }

  bool grad_enabled() const { return grad_enabled_; }
  void set_grad_enabled(bool on) { grad_enabled_ = on; }
  void set_check_finite(bool on) { check_finite_ = on; }

 private:
  struct Node {
    std::string op;
    std::vector<Tensor<T>> inputs;
    Tensor<T> output;
    BackwardFn fn;
  };
  std::vector<Node> nodes_;
  bool consumed_ = false;
  bool grad_enabled_ = true;
  bool check_finite_ = false;
};

// Disables recording for the lifetime of the guard.
template <typename T>
class NoGradGuard {
 public:
  explicit NoGradGuard(Graph<T>& g) : g_(g), prev_(g.grad_enabled()) {
    g_.set_grad_enabled(false);
  }
  ~NoGradGuard() { g_.set_grad_enabled(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  Graph<T>& g_;
  bool prev_;
};

// Adds src into dst's gradient buffer when dst participates in autodiff.
template <typename T>
void accumulate_grad(Tensor<T>& dst, std::span<const T> src);

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace nddr
