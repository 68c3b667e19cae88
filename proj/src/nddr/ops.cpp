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

#include "nddr/ops.hpp"

#include <algorithm>

#include "nddr/error.hpp"
#include "nddr/linalg.hpp"

namespace nddr::ops {
namespace {

template <typename T>
void require_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(), ErrorCode::kShapeMismatch, op,
          ": operand shapes differ, ", a.shape().str(), " vs ", b.shape().str());
}

}  // namespace

template <typename T>
Tensor<T> add(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("add", a, b);
  Tensor<T> out(a.shape());
  auto o = out.data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + y[i];
  g.check_output("add", out);
  if (g.wants_grad({&a, &b})) {
    g.record("add", {a, b}, out, [a = a, b = b, out]() mutable {
      accumulate_grad<T>(a, out.grad());
      accumulate_grad<T>(b, out.grad());
    });
  }
  return out;
}

template <typename T>
Tensor<T> sub(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("sub", a, b);
  Tensor<T> out(a.shape());
  auto o = out.data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] - y[i];
  g.check_output("sub", out);
  if (g.wants_grad({&a, &b})) {
    g.record("sub", {a, b}, out, [a = a, b = b, out]() mutable {
      accumulate_grad<T>(a, out.grad());
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        auto go = out.grad();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= go[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> mul(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("mul", a, b);
  Tensor<T> out(a.shape());
  auto o = out.data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
  g.check_output("mul", out);
  if (g.wants_grad({&a, &b})) {
    g.record("mul", {a, b}, out, [a = a, b = b, out]() mutable {
      auto go = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        auto y = b.data();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go[i] * y[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        auto x = a.data();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += go[i] * x[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> scale(Graph<T>& g, const Tensor<T>& a, T factor) {
  Tensor<T> out(a.shape());
  auto o = out.data();
  auto x = a.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * factor;
  g.check_output("scale", out);
  if (g.wants_grad({&a})) {
    g.record("scale", {a}, out, [a = a, out, factor]() mutable {
      auto ga = a.grad_buffer();
      auto go = out.grad();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go[i] * factor;
    });
  }
  return out;
}

template <typename T>
Tensor<T> sum(Graph<T>& g, const Tensor<T>& a) {
  T total = 0;
  for (T v : a.data()) total += v;
  Tensor<T> out = Tensor<T>::scalar(total);
  g.check_output("sum", out);
  if (g.wants_grad({&a})) {
    g.record("sum", {a}, out, [a = a, out]() mutable {
      auto ga = a.grad_buffer();
      const T go = out.grad()[0];
      for (T& v : ga) v += go;
    });
  }
  return out;
}

template <typename T>
Tensor<T> mean(Graph<T>& g, const Tensor<T>& a) {
  const T inv = T(1) / static_cast<T>(a.numel());
  T total = 0;
  for (T v : a.data()) total += v;
  Tensor<T> out = Tensor<T>::scalar(total * inv);
  g.check_output("mean", out);
  if (g.wants_grad({&a})) {
    g.record("mean", {a}, out, [a = a, out, inv]() mutable {
      auto ga = a.grad_buffer();
      const T go = out.grad()[0] * inv;
      for (T& v : ga) v += go;
    });
  }
  return out;
}

template <typename T>
Tensor<T> matmul(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  require(sb.n == 1 && sb.h == 1 && sb.w == sa.c, ErrorCode::kShapeMismatch,
          "matmul: right operand must be (1,1,", sa.c, ",F), got ", sb.str());
  const std::int64_t rows = sa.sites();
  const std::int64_t inner = sa.c;
  const std::int64_t cols = sb.c;
  Tensor<T> out(Shape{sa.n, sa.h, sa.w, cols});
  linalg::gemm_nn(a.ptr(), b.ptr(), out.ptr(), rows, inner, cols, false);
  g.check_output("matmul", out);
  if (g.wants_grad({&a, &b})) {
    g.record("matmul", {a, b}, out, [a = a, b = b, out, rows, inner, cols]() mutable {
      const T* go = out.grad().data();
      if (a.requires_grad()) {
        // dA = dOut * B^T, B stored inner x cols so it is the "nt" layout.
        linalg::gemm_nt(go, b.ptr(), a.grad_buffer().data(), rows, cols, inner, true);
      }
      if (b.requires_grad()) {
        linalg::gemm_tn(a.ptr(), go, b.grad_buffer().data(), inner, rows, cols, true);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> relu(Graph<T>& g, const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  auto o = out.data();
  auto in = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = in[i] > T(0) ? in[i] : T(0);
  g.check_output("relu", out);
  if (g.wants_grad({&x})) {
    g.record("relu", {x}, out, [x = x, out]() mutable {
      auto gx = x.grad_buffer();
      auto go = out.grad();
      auto in = x.data();
      for (std::size_t i = 0; i < gx.size(); ++i)
        if (in[i] > T(0)) gx[i] += go[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> concat_channels(Graph<T>& g, const std::vector<Tensor<T>>& xs) {
  require(!xs.empty(), ErrorCode::kInvalidArgument, "concat_channels: empty input list");
  const Shape& s0 = xs.front().shape();
  std::int64_t total_c = 0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const Shape& s = xs[j].shape();
    require(s.n == s0.n && s.h == s0.h && s.w == s0.w, ErrorCode::kShapeMismatch,
            "concat_channels: input ", j, " has shape ", s.str(),
            " but input 0 has ", s0.str(), " (N,H,W must agree)");
    total_c += s.c;
  }
  Tensor<T> out(Shape{s0.n, s0.h, s0.w, total_c});
  const std::int64_t sites = s0.sites();
  T* o = out.ptr();
  std::int64_t offset = 0;
  for (const auto& x : xs) {
    const std::int64_t c = x.shape().c;
    const T* in = x.ptr();
    for (std::int64_t p = 0; p < sites; ++p)
      std::copy_n(in + p * c, c, o + p * total_c + offset);
    offset += c;
  }
  g.check_output("concat_channels", out);
  if (g.wants_grad(xs)) {
    g.record("concat_channels", xs, out, [xs = xs, out, sites, total_c]() mutable {
      const T* go = out.grad().data();
      std::int64_t offset = 0;
      for (auto& x : xs) {
        const std::int64_t c = x.shape().c;
        if (x.requires_grad()) {
          T* gx = x.grad_buffer().data();
          for (std::int64_t p = 0; p < sites; ++p)
            for (std::int64_t k = 0; k < c; ++k)
              gx[p * c + k] += go[p * total_c + offset + k];
        }
        offset += c;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> slice_channels(Graph<T>& g, const Tensor<T>& x, std::int64_t begin,
                         std::int64_t count) {
  const Shape& s = x.shape();
  require(begin >= 0 && count > 0 && begin + count <= s.c, ErrorCode::kShapeMismatch,
          "slice_channels: range [", begin, ",", begin + count, ") outside ", s.c,
          " channels");
  Tensor<T> out(Shape{s.n, s.h, s.w, count});
  const std::int64_t sites = s.sites();
  for (std::int64_t p = 0; p < sites; ++p)
    std::copy_n(x.ptr() + p * s.c + begin, count, out.ptr() + p * count);
  g.check_output("slice_channels", out);
  if (g.wants_grad({&x})) {
    g.record("slice_channels", {x}, out, [x = x, out, sites, begin, count]() mutable {
      const std::int64_t c = x.shape().c;
      T* gx = x.grad_buffer().data();
      const T* go = out.grad().data();
      for (std::int64_t p = 0; p < sites; ++p)
        for (std::int64_t k = 0; k < count; ++k) gx[p * c + begin + k] += go[p * count + k];
    });
  }
  return out;
}

#define NDDR_INSTANTIATE(T)                                                          \
  template Tensor<T> add(Graph<T>&, const Tensor<T>&, const Tensor<T>&);             \
  template Tensor<T> sub(Graph<T>&, const Tensor<T>&, const Tensor<T>&);             \
  template Tensor<T> mul(Graph<T>&, const Tensor<T>&, const Tensor<T>&);             \
  template Tensor<T> scale(Graph<T>&, const Tensor<T>&, T);                          \
  template Tensor<T> sum(Graph<T>&, const Tensor<T>&);                               \
  template Tensor<T> mean(Graph<T>&, const Tensor<T>&);                              \
  template Tensor<T> matmul(Graph<T>&, const Tensor<T>&, const Tensor<T>&);          \
  template Tensor<T> relu(Graph<T>&, const Tensor<T>&);                              \
  template Tensor<T> concat_channels(Graph<T>&, const std::vector<Tensor<T>>&);      \
  template Tensor<T> slice_channels(Graph<T>&, const Tensor<T>&, std::int64_t,       \
                                    std::int64_t);

NDDR_INSTANTIATE(float)
NDDR_INSTANTIATE(double)
#undef NDDR_INSTANTIATE

}  // namespace nddr::ops
