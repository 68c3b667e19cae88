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

#include "nddr/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "nddr/error.hpp"
#include "nddr/linalg.hpp"

namespace nddr {

std::int64_t conv_out_size(std::int64_t in, std::int64_t kernel, int stride, int padding) {
  return (in + 2 * padding - kernel) / stride + 1;
}

template <typename T>
BatchNormState<T> BatchNormState<T>::create(std::int64_t channels, bool affine) {
  BatchNormState s;
  const Shape shape{1, 1, 1, channels};
  s.gamma = Tensor<T>::full(shape, T(1), affine);
  s.beta = Tensor<T>(shape, affine);
  s.running_mean = Tensor<T>(shape);
  s.running_var = Tensor<T>::full(shape, T(1));
  s.affine = affine;
  return s;
}

template <typename T>
void BatchNormState<T>::set_identity() {
  std::fill(gamma.data().begin(), gamma.data().end(), T(1));
  std::fill(beta.data().begin(), beta.data().end(), T(0));
  std::fill(running_mean.data().begin(), running_mean.data().end(), T(0));
  std::fill(running_var.data().begin(), running_var.data().end(), T(1) - eps);
  mode = NormMode::kEval;
}

template struct BatchNormState<float>;
template struct BatchNormState<double>;

namespace ops {
namespace {

struct ConvGeometry {
  std::int64_t n, h, w, c;   // input
  std::int64_t kh, kw, f;    // filters
  std::int64_t oh, ow;       // output
  int stride, pad;
  std::int64_t rows() const { return n * oh * ow; }
  std::int64_t patch() const { return kh * kw * c; }
};

template <typename T>
void im2col(const T* x, const ConvGeometry& g, T* cols) {
  const std::int64_t patch = g.patch();
  for (std::int64_t b = 0; b < g.n; ++b) {
    for (std::int64_t oy = 0; oy < g.oh; ++oy) {
      for (std::int64_t ox = 0; ox < g.ow; ++ox) {
        T* row = cols + ((b * g.oh + oy) * g.ow + ox) * patch;
        for (std::int64_t ky = 0; ky < g.kh; ++ky) {
          const std::int64_t iy = oy * g.stride - g.pad + ky;
          for (std::int64_t kx = 0; kx < g.kw; ++kx) {
            const std::int64_t ix = ox * g.stride - g.pad + kx;
            T* dst = row + (ky * g.kw + kx) * g.c;
            if (iy < 0 || iy >= g.h || ix < 0 || ix >= g.w) {
              std::fill_n(dst, g.c, T(0));
            } else {
              std::copy_n(x + ((b * g.h + iy) * g.w + ix) * g.c, g.c, dst);
            }
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, const ConvGeometry& g, T* dx) {
  const std::int64_t patch = g.patch();
  for (std::int64_t b = 0; b < g.n; ++b) {
    for (std::int64_t oy = 0; oy < g.oh; ++oy) {
      for (std::int64_t ox = 0; ox < g.ow; ++ox) {
        const T* row = cols + ((b * g.oh + oy) * g.ow + ox) * patch;
        for (std::int64_t ky = 0; ky < g.kh; ++ky) {
          const std::int64_t iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          for (std::int64_t kx = 0; kx < g.kw; ++kx) {
            const std::int64_t ix = ox * g.stride - g.pad + kx;
            if (ix < 0 || ix >= g.w) continue;
            const T* src = row + (ky * g.kw + kx) * g.c;
            T* dst = dx + ((b * g.h + iy) * g.w + ix) * g.c;
            for (std::int64_t k = 0; k < g.c; ++k) dst[k] += src[k];
          }
        }
      }
    }
  }
}

template <typename T>
void add_bias_rows(T* out, const T* bias, std::int64_t rows, std::int64_t cols) {
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t k = 0; k < cols; ++k) out[r * cols + k] += bias[k];
}

template <typename T>
void bias_grad(Tensor<T>& bias, const T* go, std::int64_t rows, std::int64_t cols) {
  if (!bias.defined() || !bias.requires_grad()) return;
  T* gb = bias.grad_buffer().data();
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t k = 0; k < cols; ++k) gb[k] += go[r * cols + k];
}

template <typename T>
void require_bias(const char* op, const Tensor<T>& bias, std::int64_t f) {
  if (!bias.defined()) return;
  require(bias.shape() == Shape{1, 1, 1, f}, ErrorCode::kShapeMismatch, op,
          ": bias must be (1,1,1,", f, "), got ", bias.shape().str());
}

}  // namespace

template <typename T>
Tensor<T> conv2d(Graph<T>& g, const Tensor<T>& x, const Conv2dParams<T>& p) {
  const Shape& xs = x.shape();
  const Shape& ws = p.weight.shape();
  require(ws.c == xs.c, ErrorCode::kShapeMismatch, "conv2d: input has ", xs.c,
          " channels but filterbank ", ws.str(), " expects ", ws.c);
  require(p.stride >= 1 && p.padding >= 0, ErrorCode::kInvalidArgument,
          "conv2d: stride must be >= 1 and padding >= 0");
  require(ws.h <= xs.h + 2 * p.padding && ws.w <= xs.w + 2 * p.padding,
          ErrorCode::kShapeMismatch, "conv2d: kernel ", ws.h, "x", ws.w,
          " does not fit padded input ", xs.h + 2 * p.padding, "x", xs.w + 2 * p.padding);
  require_bias("conv2d", p.bias, ws.n);

  ConvGeometry geo{xs.n, xs.h, xs.w, xs.c, ws.h, ws.w, ws.n,
                   conv_out_size(xs.h, ws.h, p.stride, p.padding),
                   conv_out_size(xs.w, ws.w, p.stride, p.padding), p.stride, p.padding};
  const bool direct = geo.kh == 1 && geo.kw == 1 && geo.stride == 1 && geo.pad == 0;
  std::shared_ptr<std::vector<T>> cols;
  const T* col_ptr = x.ptr();
  if (!direct) {
    cols = std::make_shared<std::vector<T>>(static_cast<std::size_t>(geo.rows() * geo.patch()));
    im2col(x.ptr(), geo, cols->data());
    col_ptr = cols->data();
  }
  Tensor<T> out(Shape{geo.n, geo.oh, geo.ow, geo.f});
  linalg::gemm_nt(col_ptr, p.weight.ptr(), out.ptr(), geo.rows(), geo.patch(), geo.f, false);
  if (p.bias.defined()) add_bias_rows(out.ptr(), p.bias.ptr(), geo.rows(), geo.f);
  g.check_output("conv2d", out);

  if (g.wants_grad({&x, &p.weight, &p.bias})) {
    std::vector<Tensor<T>> inputs{x, p.weight};
    if (p.bias.defined()) inputs.push_back(p.bias);
    g.record("conv2d", std::move(inputs), out,
             [x = x, w = p.weight, b = p.bias, out, cols, geo, direct]() mutable {
               const T* go = out.grad().data();
               const T* col_ptr = direct ? x.ptr() : cols->data();
               if (w.requires_grad())
                 linalg::gemm_tn(go, col_ptr, w.grad_buffer().data(), geo.f, geo.rows(),
                                 geo.patch(), true);
               bias_grad(b, go, geo.rows(), geo.f);
               if (x.requires_grad()) {
                 if (direct) {
                   linalg::gemm_nn(go, w.ptr(), x.grad_buffer().data(), geo.rows(), geo.f,
                                   geo.patch(), true);
                 } else {
                   std::vector<T> dcols(static_cast<std::size_t>(geo.rows() * geo.patch()));
                   linalg::gemm_nn(go, w.ptr(), dcols.data(), geo.rows(), geo.f, geo.patch(),
                                   false);
                   col2im_add(dcols.data(), geo, x.grad_buffer().data());
                 }
               }
             });
  }
  return out;
}

template <typename T>
Tensor<T> conv1x1(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& weight,
                  const Tensor<T>& bias) {
  const Shape& ws = weight.shape();
  require(ws.h == 1 && ws.w == 1, ErrorCode::kShapeMismatch,
          "conv1x1: weight must be (Cout,1,1,Cin), got ", ws.str());
  require(ws.c == x.shape().c, ErrorCode::kShapeMismatch, "conv1x1: input has ",
          x.shape().c, " channels but weight expects ", ws.c);
  return conv2d(g, x, Conv2dParams<T>{weight, bias, 1, 0});
}

template <typename T>
Tensor<T> batch_norm(Graph<T>& g, const Tensor<T>& x, BatchNormState<T>& state) {
  const Shape& s = x.shape();
  const std::int64_t c = s.c;
  require(state.channels() == c, ErrorCode::kShapeMismatch, "batch_norm: input has ", c,
          " channels, state has ", state.channels());
  const std::int64_t m = s.sites();
  const bool train = state.mode == NormMode::kTrain;
  require(!train || m >= 2, ErrorCode::kInvalidArgument,
          "batch_norm: train mode needs N*H*W >= 2, got ", m);

  auto xhat = std::make_shared<std::vector<T>>(static_cast<std::size_t>(s.numel()));
  auto inv_std = std::make_shared<std::vector<T>>(static_cast<std::size_t>(c));
  std::vector<T> mu(c, T(0));
  const T* in = x.ptr();
  if (train) {
    std::vector<T> var(c, T(0));
    for (std::int64_t p = 0; p < m; ++p)
      for (std::int64_t k = 0; k < c; ++k) mu[k] += in[p * c + k];
    for (std::int64_t k = 0; k < c; ++k) mu[k] /= static_cast<T>(m);
    for (std::int64_t p = 0; p < m; ++p)
      for (std::int64_t k = 0; k < c; ++k) {
        const T d = in[p * c + k] - mu[k];
        var[k] += d * d;
      }
    T* rm = state.running_mean.ptr();
    T* rv = state.running_var.ptr();
    for (std::int64_t k = 0; k < c; ++k) {
      var[k] /= static_cast<T>(m);
      (*inv_std)[k] = T(1) / std::sqrt(var[k] + state.eps);
      rm[k] = state.momentum * rm[k] + (T(1) - state.momentum) * mu[k];
      rv[k] = state.momentum * rv[k] + (T(1) - state.momentum) * var[k];
    }
  } else {
    const T* rm = state.running_mean.ptr();
    const T* rv = state.running_var.ptr();
    for (std::int64_t k = 0; k < c; ++k) {
      mu[k] = rm[k];
      (*inv_std)[k] = T(1) / std::sqrt(rv[k] + state.eps);
    }
  }

  Tensor<T> out(s);
  T* o = out.ptr();
  T* xh = xhat->data();
  const T* gamma = state.affine ? state.gamma.ptr() : nullptr;
  const T* beta = state.affine ? state.beta.ptr() : nullptr;
  for (std::int64_t p = 0; p < m; ++p) {
    for (std::int64_t k = 0; k < c; ++k) {
      const std::int64_t i = p * c + k;
      xh[i] = (in[i] - mu[k]) * (*inv_std)[k];
      o[i] = state.affine ? gamma[k] * xh[i] + beta[k] : xh[i];
    }
  }
  g.check_output("batch_norm", out);

  const Tensor<T> gamma_t = state.affine ? state.gamma : Tensor<T>();
  const Tensor<T> beta_t = state.affine ? state.beta : Tensor<T>();
  if (g.wants_grad({&x, &gamma_t, &beta_t})) {
    std::vector<Tensor<T>> inputs{x};
    if (state.affine) {
      inputs.push_back(gamma_t);
      inputs.push_back(beta_t);
    }
    g.record("batch_norm", std::move(inputs), out,
             [x = x, ga = gamma_t, be = beta_t, out, xhat, inv_std, m, c, train]() mutable {
               const T* go = out.grad().data();
               const T* xh = xhat->data();
               const bool affine = ga.defined();
               std::vector<T> sum_dy(c, T(0));
               std::vector<T> sum_dy_xhat(c, T(0));
               for (std::int64_t p = 0; p < m; ++p)
                 for (std::int64_t k = 0; k < c; ++k) {
                   sum_dy[k] += go[p * c + k];
                   sum_dy_xhat[k] += go[p * c + k] * xh[p * c + k];
                 }
               if (affine && ga.requires_grad()) {
                 T* gg = ga.grad_buffer().data();
                 for (std::int64_t k = 0; k < c; ++k) gg[k] += sum_dy_xhat[k];
               }
               if (affine && be.requires_grad()) {
                 T* gb = be.grad_buffer().data();
                 for (std::int64_t k = 0; k < c; ++k) gb[k] += sum_dy[k];
               }
               if (!x.requires_grad()) return;
               T* gx = x.grad_buffer().data();
               std::vector<T> scale(c, T(1));
               if (affine)
                 for (std::int64_t k = 0; k < c; ++k) scale[k] = ga.ptr()[k];
               if (!train) {
                 for (std::int64_t p = 0; p < m; ++p)
                   for (std::int64_t k = 0; k < c; ++k)
                     gx[p * c + k] += go[p * c + k] * scale[k] * (*inv_std)[k];
                 return;
               }
               const T inv_m = T(1) / static_cast<T>(m);
               for (std::int64_t p = 0; p < m; ++p)
                 for (std::int64_t k = 0; k < c; ++k) {
                   const std::int64_t i = p * c + k;
                   const T dxhat = go[i] * scale[k];
                   gx[i] += (*inv_std)[k] * inv_m *
                            (static_cast<T>(m) * dxhat - scale[k] * sum_dy[k] -
                             xh[i] * scale[k] * sum_dy_xhat[k]);
                 }
             });
  }
  return out;
}

template <typename T>
Tensor<T> max_pool(Graph<T>& g, const Tensor<T>& x, const PoolSpec& spec) {
  const Shape& s = x.shape();
  require(spec.window >= 1 && spec.stride >= 1 && spec.padding >= 0 &&
              spec.padding < spec.window,
          ErrorCode::kInvalidArgument, "max_pool: need window >= 1, stride >= 1, 0 <= padding < window");
  require(spec.window <= s.h + 2 * spec.padding && spec.window <= s.w + 2 * spec.padding,
          ErrorCode::kShapeMismatch, "max_pool: window ", spec.window,
          " larger than padded input ", s.h + 2 * spec.padding, "x", s.w + 2 * spec.padding);
  const std::int64_t oh = conv_out_size(s.h, spec.window, spec.stride, spec.padding);
  const std::int64_t ow = conv_out_size(s.w, spec.window, spec.stride, spec.padding);
  Tensor<T> out(Shape{s.n, oh, ow, s.c});
  auto argmax = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(out.numel()));
  const T* in = x.ptr();
  T* o = out.ptr();
  for (std::int64_t b = 0; b < s.n; ++b)
    for (std::int64_t oy = 0; oy < oh; ++oy)
      for (std::int64_t ox = 0; ox < ow; ++ox)
        for (std::int64_t k = 0; k < s.c; ++k) {
          T best = -std::numeric_limits<T>::infinity();
          std::int64_t best_i = -1;
          for (int ky = 0; ky < spec.window; ++ky) {
            const std::int64_t iy = oy * spec.stride - spec.padding + ky;
            if (iy < 0 || iy >= s.h) continue;
            for (int kx = 0; kx < spec.window; ++kx) {
              const std::int64_t ix = ox * spec.stride - spec.padding + kx;
              if (ix < 0 || ix >= s.w) continue;
              const std::int64_t i = ((b * s.h + iy) * s.w + ix) * s.c + k;
              if (best_i < 0 || in[i] > best) {
                best = in[i];
                best_i = i;
              }
            }
          }
          const std::int64_t oi = ((b * oh + oy) * ow + ox) * s.c + k;
          o[oi] = best;
          (*argmax)[oi] = best_i;
        }
  g.check_output("max_pool", out);
  if (g.wants_grad({&x})) {
    g.record("max_pool", {x}, out, [x = x, out, argmax]() mutable {
      T* gx = x.grad_buffer().data();
      auto go = out.grad();
      for (std::size_t i = 0; i < go.size(); ++i) gx[(*argmax)[i]] += go[i];
    });
  }
  return out;
}

namespace {

struct Tap {
  std::int64_t i0, i1;
  double w1;  // weight of i1; i0 receives 1 - w1
};

std::vector<Tap> resize_taps(std::int64_t in, std::int64_t out, ResizeMode mode) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::int64_t d = 0; d < out; ++d) {
    if (mode == ResizeMode::kNearest) {
      const auto src = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(d * ratio)), in - 1);
      taps[d] = Tap{src, src, 0.0};
      continue;
    }
    double src = (static_cast<double>(d) + 0.5) * ratio - 0.5;
    if (src < 0) src = 0;
    auto i0 = static_cast<std::int64_t>(std::floor(src));
    if (i0 > in - 1) i0 = in - 1;
    const std::int64_t i1 = std::min(i0 + 1, in - 1);
    taps[d] = Tap{i0, i1, i1 == i0 ? 0.0 : src - static_cast<double>(i0)};
  }
  return taps;
}

}  // namespace

template <typename T>
Tensor<T> resize(Graph<T>& g, const Tensor<T>& x, std::int64_t out_h, std::int64_t out_w,
                 ResizeMode mode) {
  require(out_h >= 1 && out_w >= 1, ErrorCode::kInvalidArgument,
          "resize: output size must be >= 1, got ", out_h, "x", out_w);
  const Shape& s = x.shape();
  const auto ty = resize_taps(s.h, out_h, mode);
  const auto tx = resize_taps(s.w, out_w, mode);
  Tensor<T> out(Shape{s.n, out_h, out_w, s.c});
  const T* in = x.ptr();
  T* o = out.ptr();
  const std::int64_t c = s.c;
  for (std::int64_t b = 0; b < s.n; ++b)
    for (std::int64_t oy = 0; oy < out_h; ++oy) {
      const Tap& y = ty[oy];
      const T wy1 = static_cast<T>(y.w1), wy0 = T(1) - wy1;
      for (std::int64_t ox = 0; ox < out_w; ++ox) {
        const Tap& t = tx[ox];
        const T wx1 = static_cast<T>(t.w1), wx0 = T(1) - wx1;
        const T* p00 = in + ((b * s.h + y.i0) * s.w + t.i0) * c;
        const T* p01 = in + ((b * s.h + y.i0) * s.w + t.i1) * c;
        const T* p10 = in + ((b * s.h + y.i1) * s.w + t.i0) * c;
        const T* p11 = in + ((b * s.h + y.i1) * s.w + t.i1) * c;
        T* dst = o + ((b * out_h + oy) * out_w + ox) * c;
        for (std::int64_t k = 0; k < c; ++k)
          dst[k] = wy0 * (wx0 * p00[k] + wx1 * p01[k]) + wy1 * (wx0 * p10[k] + wx1 * p11[k]);
      }
    }
  g.check_output("resize", out);
  if (g.wants_grad({&x})) {
    g.record("resize", {x}, out, [x = x, out, ty, tx, out_h, out_w]() mutable {
      const Shape& s = x.shape();
      const std::int64_t c = s.c;
      T* gx = x.grad_buffer().data();
      const T* go = out.grad().data();
      for (std::int64_t b = 0; b < s.n; ++b)
        for (std::int64_t oy = 0; oy < out_h; ++oy) {
          const Tap& y = ty[oy];
          const T wy1 = static_cast<T>(y.w1), wy0 = T(1) - wy1;
          for (std::int64_t ox = 0; ox < out_w; ++ox) {
            const Tap& t = tx[ox];
            const T wx1 = static_cast<T>(t.w1), wx0 = T(1) - wx1;
            const T* src = go + ((b * out_h + oy) * out_w + ox) * c;
            T* p00 = gx + ((b * s.h + y.i0) * s.w + t.i0) * c;
            T* p01 = gx + ((b * s.h + y.i0) * s.w + t.i1) * c;
            T* p10 = gx + ((b * s.h + y.i1) * s.w + t.i0) * c;
            T* p11 = gx + ((b * s.h + y.i1) * s.w + t.i1) * c;
            for (std::int64_t k = 0; k < c; ++k) {
              p00[k] += wy0 * wx0 * src[k];
              p01[k] += wy0 * wx1 * src[k];
              p10[k] += wy1 * wx0 * src[k];
              p11[k] += wy1 * wx1 * src[k];
            }
          }
        }
    });
  }
  return out;
}

template <typename T>
Tensor<T> fully_connected(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& weight,
                          const Tensor<T>& bias) {
  const Shape& s = x.shape();
  const Shape& ws = weight.shape();
  const std::int64_t d = s.h * s.w * s.c;
  require(ws.h == 1 && ws.w == 1 && ws.c == d, ErrorCode::kShapeMismatch,
          "fully_connected: weight must be (F,1,1,", d, "), got ", ws.str());
  require_bias("fully_connected", bias, ws.n);
  const std::int64_t n = s.n;
  const std::int64_t f = ws.n;
  Tensor<T> out(Shape{n, 1, 1, f});
  linalg::gemm_nt(x.ptr(), weight.ptr(), out.ptr(), n, d, f, false);
  if (bias.defined()) add_bias_rows(out.ptr(), bias.ptr(), n, f);
  g.check_output("fully_connected", out);
  if (g.wants_grad({&x, &weight, &bias})) {
    std::vector<Tensor<T>> inputs{x, weight};
    if (bias.defined()) inputs.push_back(bias);
    g.record("fully_connected", std::move(inputs), out,
             [x = x, w = weight, b = bias, out, n, d, f]() mutable {
               const T* go = out.grad().data();
               if (x.requires_grad())
                 linalg::gemm_nn(go, w.ptr(), x.grad_buffer().data(), n, f, d, true);
               if (w.requires_grad())
                 linalg::gemm_tn(go, x.ptr(), w.grad_buffer().data(), f, n, d, true);
               bias_grad(b, go, n, f);
             });
  }
  return out;
}

template <typename T>
Tensor<T> global_avg_pool(Graph<T>& g, const Tensor<T>& x) {
  const Shape& s = x.shape();
  const std::int64_t area = s.h * s.w;
  const T inv = T(1) / static_cast<T>(area);
  Tensor<T> out(Shape{s.n, 1, 1, s.c});
  const T* in = x.ptr();
  T* o = out.ptr();
  for (std::int64_t b = 0; b < s.n; ++b) {
    for (std::int64_t p = 0; p < area; ++p)
      for (std::int64_t k = 0; k < s.c; ++k) o[b * s.c + k] += in[(b * area + p) * s.c + k];
    for (std::int64_t k = 0; k < s.c; ++k) o[b * s.c + k] *= inv;
  }
  g.check_output("global_avg_pool", out);
  if (g.wants_grad({&x})) {
    g.record("global_avg_pool", {x}, out, [x = x, out, area, inv]() mutable {
      const Shape& s = x.shape();
      T* gx = x.grad_buffer().data();
      const T* go = out.grad().data();
      for (std::int64_t b = 0; b < s.n; ++b)
        for (std::int64_t p = 0; p < area; ++p)
          for (std::int64_t k = 0; k < s.c; ++k)
            gx[(b * area + p) * s.c + k] += go[b * s.c + k] * inv;
    });
  }
  return out;
}

template <typename T>
Tensor<T> softmax(Graph<T>& g, const Tensor<T>& x) {
  const Shape& s = x.shape();
  const std::int64_t c = s.c;
  Tensor<T> out(s);
  const T* in = x.ptr();
  T* o = out.ptr();
  for (std::int64_t p = 0; p < s.sites(); ++p) {
    const T* row = in + p * c;
    T* dst = o + p * c;
    const T mx = *std::max_element(row, row + c);
    T z = 0;
    for (std::int64_t k = 0; k < c; ++k) {
      dst[k] = std::exp(row[k] - mx);
      z += dst[k];
    }
    for (std::int64_t k = 0; k < c; ++k) dst[k] /= z;
  }
  g.check_output("softmax", out);
  if (g.wants_grad({&x})) {
    g.record("softmax", {x}, out, [x = x, out, c]() mutable {
      T* gx = x.grad_buffer().data();
      const T* go = out.grad().data();
      const T* y = out.ptr();
      for (std::int64_t p = 0; p < x.shape().sites(); ++p) {
        T dot = 0;
        for (std::int64_t k = 0; k < c; ++k) dot += go[p * c + k] * y[p * c + k];
        for (std::int64_t k = 0; k < c; ++k)
          gx[p * c + k] += y[p * c + k] * (go[p * c + k] - dot);
      }
    });
  }
  return out;
}

#define NDDR_INSTANTIATE(T)                                                               \
  template Tensor<T> conv2d(Graph<T>&, const Tensor<T>&, const Conv2dParams<T>&);         \
  template Tensor<T> conv1x1(Graph<T>&, const Tensor<T>&, const Tensor<T>&,               \
                             const Tensor<T>&);                                           \
  template Tensor<T> batch_norm(Graph<T>&, const Tensor<T>&, BatchNormState<T>&);         \
  template Tensor<T> max_pool(Graph<T>&, const Tensor<T>&, const PoolSpec&);              \
  template Tensor<T> resize(Graph<T>&, const Tensor<T>&, std::int64_t, std::int64_t,      \
                            ResizeMode);                                                  \
  template Tensor<T> fully_connected(Graph<T>&, const Tensor<T>&, const Tensor<T>&,       \
                                     const Tensor<T>&);                                   \
  template Tensor<T> global_avg_pool(Graph<T>&, const Tensor<T>&);                        \
  template Tensor<T> softmax(Graph<T>&, const Tensor<T>&);

NDDR_INSTANTIATE(float)
NDDR_INSTANTIATE(double)
#undef NDDR_INSTANTIATE

}  // namespace ops
}  // namespace nddr
