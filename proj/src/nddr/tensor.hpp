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
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace nddr {

enum class DType : std::uint8_t { kF32 = 1, kF64 = 2 };

template <typename T>
constexpr DType dtype_of();
template <>
constexpr DType dtype_of<float>() { return DType::kF32; }
template <>
constexpr DType dtype_of<double>() { return DType::kF64; }

const char* dtype_name(DType d);

// Batch, height, width, channels. Every tensor in the library is 4-D; lower
// rank data uses leading ones (a scalar is 1x1x1x1).
struct Shape {
  std::int64_t n = 1;
  std::int64_t h = 1;
  std::int64_t w = 1;
  std::int64_t c = 1;

  constexpr std::int64_t numel() const { return n * h * w * c; }
  constexpr std::int64_t sites() const { return n * h * w; }
  friend constexpr bool operator==(const Shape&, const Shape&) = default;
  std::string str() const;
};

// Reference-counted handle to an NHWC buffer with an optional gradient buffer.
// Copying a Tensor aliases the same storage; clone() makes a deep copy.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return storage_ != nullptr; }
  const Shape& shape() const { return storage_->shape; }
  std::int64_t numel() const { return storage_->shape.numel(); }

  std::span<T> data() { return storage_->data; }
  std::span<const T> data() const { return storage_->data; }
  T* ptr() { return storage_->data.data(); }
  const T* ptr() const { return storage_->data.data(); }

  T& at(std::int64_t n, std::int64_t h, std::int64_t w, std::int64_t c);
  T at(std::int64_t n, std::int64_t h, std::int64_t w, std::int64_t c) const;
  T item() const;

  bool requires_grad() const { return storage_->requires_grad; }
  void set_requires_grad(bool value) { storage_->requires_grad = value; }

  bool has_grad() const { return !storage_->grad.empty(); }
  std::span<T> grad() { return storage_->grad; }
  std::span<const T> grad() const { return storage_->grad; }
  // Allocates a zero gradient if none exists, then returns it.
  std::span<T> grad_buffer();
  void zero_grad();
  void clear_grad() { storage_->grad.clear(); }

  bool all_finite() const;
  Tensor clone() const;
  bool same_storage(const Tensor& other) const { return storage_ == other.storage_; }

 private:
  struct Storage {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Storage> storage_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace nddr
