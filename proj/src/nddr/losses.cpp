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

#include "nddr/losses.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "nddr/error.hpp"

namespace nddr::ops {

template <typename T>
Tensor<T> softmax_cross_entropy(Graph<T>& g, const Tensor<T>& logits,
                                std::span<const std::int32_t> labels,
                                std::int32_t ignore_label) {
  const Shape& s = logits.shape();
  const std::int64_t sites = s.sites();
  const std::int64_t cls = s.c;
  require(static_cast<std::int64_t>(labels.size()) == sites, ErrorCode::kShapeMismatch,
          "softmax_cross_entropy: ", labels.size(), " labels for ", sites, " sites");
  auto probs = std::make_shared<std::vector<T>>(static_cast<std::size_t>(s.numel()));
  auto label_copy = std::make_shared<std::vector<std::int32_t>>(labels.begin(), labels.end());
  const T* in = logits.ptr();
  T total = 0;
  std::int64_t count = 0;
  for (std::int64_t p = 0; p < sites; ++p) {
    const std::int32_t y = labels[p];
    const T* row = in + p * cls;
    T* pr = probs->data() + p * cls;
    if (y == ignore_label) continue;
    require(y >= 0 && y < cls, ErrorCode::kInvalidArgument,
            "softmax_cross_entropy: label ", y, " at site ", p, " outside [0,", cls, ")");
    const T mx = *std::max_element(row, row + cls);
    T z = 0;
    for (std::int64_t k = 0; k < cls; ++k) {
      pr[k] = std::exp(row[k] - mx);
      z += pr[k];
    }
    for (std::int64_t k = 0; k < cls; ++k) pr[k] /= z;
    total += -(row[y] - mx - std::log(z));
    ++count;
  }
  Tensor<T> out = Tensor<T>::scalar(count > 0 ? total / static_cast<T>(count) : T(0));
  g.check_output("softmax_cross_entropy", out);
  if (g.wants_grad({&logits})) {
    g.record("softmax_cross_entropy", {logits}, out,
             [x = logits, out, probs, label_copy, count, ignore_label, cls]() mutable {
               if (count == 0) {
                 x.grad_buffer();
                 return;
               }
               T* gx = x.grad_buffer().data();
               const T scale = out.grad()[0] / static_cast<T>(count);
               const auto& lab = *label_copy;
               for (std::size_t p = 0; p < lab.size(); ++p) {
                 if (lab[p] == ignore_label) continue;
                 const T* pr = probs->data() + p * cls;
                 T* dst = gx + p * cls;
                 for (std::int64_t k = 0; k < cls; ++k) dst[k] += scale * pr[k];
                 dst[lab[p]] -= scale;
               }
             });
  }
  return out;
}

template <typename T>
Tensor<T> normal_loss(Graph<T>& g, const Tensor<T>& pred, const Tensor<T>& gt,
                      const Tensor<T>& mask) {
  const Shape& s = pred.shape();
  require(s.c == 3, ErrorCode::kShapeMismatch, "normal_loss: prediction must have 3 channels, got ",
          s.c);
  require(gt.shape() == s, ErrorCode::kShapeMismatch, "normal_loss: target shape ",
          gt.shape().str(), " differs from prediction ", s.str());
  require(mask.shape() == Shape{s.n, s.h, s.w, 1}, ErrorCode::kShapeMismatch,
          "normal_loss: mask must be ", Shape{s.n, s.h, s.w, 1}.str(), ", got ",
          mask.shape().str());
  const std::int64_t sites = s.sites();
  const T eps = static_cast<T>(kNormalEps);
  auto norms = std::make_shared<std::vector<T>>(static_cast<std::size_t>(sites));
  const T* p = pred.ptr();
  const T* q = gt.ptr();
  const T* mk = mask.ptr();
  T total = 0;
  std::int64_t count = 0;
  for (std::int64_t i = 0; i < sites; ++i) {
    const T* v = p + i * 3;
    const T nrm = std::max(std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]), eps);
    (*norms)[i] = nrm;
    if (mk[i] == T(0)) continue;
    T site = 0;
    for (int k = 0; k < 3; ++k) {
      const T d = v[k] / nrm - q[i * 3 + k];
      site += d * d;
    }
    total += site;
    ++count;
  }
  Tensor<T> out = Tensor<T>::scalar(count > 0 ? total / static_cast<T>(count) : T(0));
  g.check_output("normal_loss", out);
  if (g.wants_grad({&pred})) {
    g.record("normal_loss", {pred}, out,
             [pred = pred, gt = gt, mask = mask, out, norms, count, eps]() mutable {
               T* gp = pred.grad_buffer().data();
               if (count == 0) return;
               const T scale = out.grad()[0] / static_cast<T>(count);
               const T* p = pred.ptr();
               const T* q = gt.ptr();
               const T* mk = mask.ptr();
               for (std::size_t i = 0; i < norms->size(); ++i) {
                 if (mk[i] == T(0)) continue;
                 const T nrm = (*norms)[i];
                 const T* v = p + i * 3;
                 T u[3], d[3];
                 for (int k = 0; k < 3; ++k) {
                   u[k] = v[k] / nrm;
                   d[k] = T(2) * (u[k] - q[i * 3 + k]);  // dL/du
                 }
                 if (nrm > eps) {
                   // du/dv = (I - u u^T) / |v|
                   const T du = d[0] * u[0] + d[1] * u[1] + d[2] * u[2];
                   for (int k = 0; k < 3; ++k) gp[i * 3 + k] += scale * (d[k] - u[k] * du) / nrm;
                 } else {
                   for (int k = 0; k < 3; ++k) gp[i * 3 + k] += scale * d[k] / eps;
                 }
               }
             });
  }
  return out;
}

template Tensor<float> softmax_cross_entropy(Graph<float>&, const Tensor<float>&,
                                             std::span<const std::int32_t>, std::int32_t);
template Tensor<double> softmax_cross_entropy(Graph<double>&, const Tensor<double>&,
                                              std::span<const std::int32_t>, std::int32_t);
template Tensor<float> normal_loss(Graph<float>&, const Tensor<float>&, const Tensor<float>&,
                                   const Tensor<float>&);
template Tensor<double> normal_loss(Graph<double>&, const Tensor<double>&, const Tensor<double>&,
                                    const Tensor<double>&);

}  // namespace nddr::ops
