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
#include <functional>
#include <string>
#include <vector>

#include "nddr/graph.hpp"
#include "nddr/tensor.hpp"

namespace nddr {

// Scalar function of tensors the caller closes over.
template <typename T>
using LossFn = std::function<Tensor<T>(Graph<T>&)>;

// Max over every coordinate of every input of
//   |analytic - central difference| / max(1, |analytic|).
// Inputs are perturbed in place and restored. A non-finite loss anywhere
// yields +inf.
template <typename T>
double finite_difference_check(const LossFn<T>& f, std::vector<Tensor<T>> inputs,
                               double eps = 1e-5);

// Single-input form.
template <typename T>
double finite_difference_check(const std::function<Tensor<T>(Graph<T>&, const Tensor<T>&)>& f,
                               Tensor<T> x, double eps = 1e-5);

struct GradcheckCase {
  std::string op;
  int shapes = 0;
  double max_rel_error = 0;
  std::string worst_shape;
  bool passed = false;
};

// Names accepted by run_gradient_suite, in report order.
const std::vector<std::string>& gradient_suite_ops();

// Checks each selected op on `shapes` random small configurations. module is
// "all" or one op name.
std::vector<GradcheckCase> run_gradient_suite(const std::string& module = "all",
                                              std::uint64_t seed = 0, int shapes = 5,
                                              double tolerance = 1e-4, double eps = 1e-5);

}  // namespace nddr
