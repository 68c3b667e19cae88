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

#include "nddr/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "nddr/error.hpp"

namespace nddr {

const char* dtype_name(DType d) {
  return d == DType::kF32 ? "f32" : "f64";
}

std::string Shape::str() const {
  return cat("(", n, ",", h, ",", w, ",", c, ")");
}

template <typename T>
Tensor<T>::Tensor(Shape shape, bool requires_grad)
    : storage_(std::make_shared<Storage>()) {
  require(shape.n > 0 && shape.h > 0 && shape.w > 0 && shape.c > 0,
          ErrorCode::kInvalidArgument, "tensor dims must be positive, got ",
          shape.str());
  storage_->shape = shape;
  storage_->data.assign(static_cast<std::size_t>(shape.numel()), T(0));
  storage_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad)
    : storage_(std::make_shared<Storage>()) {
  require(shape.n > 0 && shape.h > 0 && shape.w > 0 && shape.c > 0,
          ErrorCode::kInvalidArgument, "tensor dims must be positive, got ",
          shape.str());
  require(static_cast<std::int64_t>(values.size()) == shape.numel(),
          ErrorCode::kShapeMismatch, "tensor of shape ", shape.str(), " needs ",
          shape.numel(), " values, got ", values.size());
  storage_->shape = shape;
  storage_->data = std::move(values);
  storage_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  Tensor t(shape, requires_grad);
  std::fill(t.storage_->data.begin(), t.storage_->data.end(), value);
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return full(Shape{}, value, requires_grad);
}

template <typename T>
T& Tensor<T>::at(std::int64_t n, std::int64_t h, std::int64_t w, std::int64_t c) {
  const Shape& s = storage_->shape;
  return storage_->data[static_cast<std::size_t>(((n * s.h + h) * s.w + w) * s.c + c)];
}

template <typename T>
T Tensor<T>::at(std::int64_t n, std::int64_t h, std::int64_t w, std::int64_t c) const {
  const Shape& s = storage_->shape;
  return storage_->data[static_cast<std::size_t>(((n * s.h + h) * s.w + w) * s.c + c)];
}

template <typename T>
T Tensor<T>::item() const {
  require(numel() == 1, ErrorCode::kShapeMismatch,
          "item() needs a single-element tensor, got ", shape().str());
  return storage_->data[0];
}

template <typename T>
std::span<T> Tensor<T>::grad_buffer() {
  if (storage_->grad.empty()) storage_->grad.assign(storage_->data.size(), T(0));
  return storage_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
  std::fill(storage_->grad.begin(), storage_->grad.end(), T(0));
}

template <typename T>
bool Tensor<T>::all_finite() const {
  return std::all_of(storage_->data.begin(), storage_->data.end(),
                     [](T v) { return std::isfinite(v); });
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  Tensor out(shape(), storage_->data, storage_->requires_grad);
  out.storage_->grad = storage_->grad;
  return out;
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace nddr
