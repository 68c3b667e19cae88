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

// Internal matrix helpers over raw row-major buffers, backed by Eigen.

#include <Eigen/Core>
#include <cstdint>

namespace nddr::linalg {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatRef = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatRef = Eigen::Map<const RowMat<T>>;

// C (m x n) [+]= A (m x k) * B^T where B is stored (n x k).
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k,
             std::int64_t n, bool accumulate) {
  ConstMatRef<T> A(a, m, k);
  ConstMatRef<T> B(b, n, k);
  MatRef<T> C(c, m, n);
  if (accumulate)
    C.noalias() += A * B.transpose();
  else
    C.noalias() = A * B.transpose();
}

// C (m x n) [+]= A (m x k) * B (k x n).
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k,
             std::int64_t n, bool accumulate) {
  ConstMatRef<T> A(a, m, k);
  ConstMatRef<T> B(b, k, n);
  MatRef<T> C(c, m, n);
  if (accumulate)
    C.noalias() += A * B;
  else
    C.noalias() = A * B;
}

// C (m x n) [+]= A^T * B where A is stored (k x m) and B is (k x n).
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k,
             std::int64_t n, bool accumulate) {
  ConstMatRef<T> A(a, k, m);
  ConstMatRef<T> B(b, k, n);
  MatRef<T> C(c, m, n);
  if (accumulate)
    C.noalias() += A.transpose() * B;
  else
    C.noalias() = A.transpose() * B;
}

}  // namespace nddr::linalg
