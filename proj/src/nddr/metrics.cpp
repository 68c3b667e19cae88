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

#include "nddr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nddr/error.hpp"

namespace nddr {

std::vector<std::int64_t> confusion_matrix(std::span<const std::int32_t> pred,
                                           std::span<const std::int32_t> gt,
                                           std::int64_t classes, std::int32_t ignore_label) {
  require(pred.size() == gt.size(), ErrorCode::kShapeMismatch, "seg metrics: ", pred.size(),
          " predictions for ", gt.size(), " labels");
  std::vector<std::int64_t> cm(classes * classes, 0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] == ignore_label) continue;
    require(gt[i] >= 0 && gt[i] < classes && pred[i] >= 0 && pred[i] < classes,
            ErrorCode::kInvalidArgument, "label out of range at site ", i, ": gt ", gt[i],
            ", pred ", pred[i], ", classes ", classes);
    ++cm[gt[i] * classes + pred[i]];
  }
  return cm;
}

SegMetrics seg_metrics(std::span<const std::int32_t> pred, std::span<const std::int32_t> gt,
                       std::int64_t classes, std::int32_t ignore_label) {
  const auto cm = confusion_matrix(pred, gt, classes, ignore_label);
  std::int64_t total = 0;
  std::int64_t correct = 0;
  double iou_sum = 0;
  std::int64_t present = 0;
  for (std::int64_t c = 0; c < classes; ++c) {
    std::int64_t row = 0;
    std::int64_t col = 0;
    for (std::int64_t k = 0; k < classes; ++k) {
      row += cm[c * classes + k];
      col += cm[k * classes + c];
    }
    const std::int64_t tp = cm[c * classes + c];
    const std::int64_t uni = row + col - tp;
    total += row;
    correct += tp;
    if (uni > 0) {
      iou_sum += static_cast<double>(tp) / static_cast<double>(uni);
      ++present;
    }
  }
  SegMetrics m;
  m.pacc = total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  m.miou = present > 0 ? iou_sum / static_cast<double>(present) : 0.0;
  return m;
}

double lower_median(std::vector<double>& values) {
  require(!values.empty(), ErrorCode::kInvalidArgument, "median of an empty set");
  const std::size_t mid = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  return values[mid];
}

template <typename T>
NormalMetrics normal_metrics(std::span<const T> pred, std::span<const T> gt,
                             std::span<const T> mask, const std::vector<double>& thresholds) {
  require(pred.size() == gt.size() && pred.size() == 3 * mask.size(), ErrorCode::kShapeMismatch,
          "normal metrics: pred ", pred.size(), ", gt ", gt.size(), ", mask ", mask.size(),
          " values");
  std::vector<double> angles;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == T(0)) continue;
    const double px = pred[3 * i];
    const double py = pred[3 * i + 1];
    const double pz = pred[3 * i + 2];
    const double norm = std::max(std::sqrt(px * px + py * py + pz * pz), 1e-8);
    const double dot = (px * gt[3 * i] + py * gt[3 * i + 1] + pz * gt[3 * i + 2]) / norm;
    angles.push_back(std::acos(std::clamp(dot, -1.0, 1.0)) * 180.0 / std::numbers::pi);
  }
  NormalMetrics m;
  m.count = static_cast<std::int64_t>(angles.size());
  m.within.assign(thresholds.size(), 0.0);
  if (angles.empty()) return m;
  double sum = 0;
  for (double a : angles) {
    sum += a;
    for (std::size_t t = 0; t < thresholds.size(); ++t)
      if (a <= thresholds[t]) m.within[t] += 1;
  }
  const double n = static_cast<double>(angles.size());
  m.mean_deg = sum / n;
  for (double& w : m.within) w /= n;
  m.median_deg = lower_median(angles);
  return m;
}

template NormalMetrics normal_metrics(std::span<const float>, std::span<const float>,
                                      std::span<const float>, const std::vector<double>&);
template NormalMetrics normal_metrics(std::span<const double>, std::span<const double>,
                                      std::span<const double>, const std::vector<double>&);

std::vector<double> age_expectation(std::span<const double> probs, std::int64_t classes,
                                    double tol, std::int64_t* unnormalized) {
  require(classes >= 1 && probs.size() % classes == 0, ErrorCode::kShapeMismatch,
          "age expectation: ", probs.size(), " values are not rows of ", classes);
  const std::size_t rows = probs.size() / classes;
  std::vector<double> ages(rows, 0.0);
  std::int64_t bad = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    double total = 0;
    for (std::int64_t k = 0; k < classes; ++k) {
      const double p = probs[r * classes + k];
      ages[r] += p * static_cast<double>(k);
      total += p;
    }
    if (std::abs(total - 1.0) > tol) ++bad;
  }
  if (unnormalized != nullptr) *unnormalized = bad;
  return ages;
}

AbsErrorStats abs_error_stats(std::span<const double> pred, std::span<const double> gt) {
  require(!pred.empty(), ErrorCode::kInvalidArgument, "absolute error of an empty set");
  require(pred.size() == gt.size(), ErrorCode::kShapeMismatch, "absolute error: ", pred.size(),
          " predictions for ", gt.size(), " targets");
  std::vector<double> err(pred.size());
  double sum = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    err[i] = std::abs(pred[i] - gt[i]);
    sum += err[i];
  }
  AbsErrorStats s;
  s.mean = sum / static_cast<double>(err.size());
  s.median = lower_median(err);
  return s;
}

double classification_accuracy(std::span<const std::int32_t> pred,
                               std::span<const std::int32_t> gt) {
  require(!pred.empty(), ErrorCode::kInvalidArgument, "accuracy of an empty set");
  require(pred.size() == gt.size(), ErrorCode::kShapeMismatch, "accuracy: ", pred.size(),
          " predictions for ", gt.size(), " targets");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == gt[i];
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

template <typename T>
std::vector<std::int32_t> argmax_rows(std::span<const T> values, std::int64_t cols) {
  require(cols >= 1 && values.size() % cols == 0, ErrorCode::kShapeMismatch, "argmax: ",
          values.size(), " values are not rows of ", cols);
  const std::size_t rows = values.size() / cols;
  std::vector<std::int32_t> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = values.data() + r * cols;
    out[r] = static_cast<std::int32_t>(std::max_element(row, row + cols) - row);
  }
  return out;
}

template std::vector<std::int32_t> argmax_rows(std::span<const float>, std::int64_t);
template std::vector<std::int32_t> argmax_rows(std::span<const double>, std::int64_t);

}  // namespace nddr
