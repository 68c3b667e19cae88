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
#include <span>
#include <vector>

namespace nddr {

struct SegMetrics {
  double miou = 0;
  double pacc = 0;
};

// mIoU averages TP/(TP+FP+FN) over classes occurring in gt or pred; sites
// whose gt equals ignore_label are skipped by both numbers.
SegMetrics seg_metrics(std::span<const std::int32_t> pred, std::span<const std::int32_t> gt,
                       std::int64_t classes, std::int32_t ignore_label = 255);

// Confusion matrix indexed [gt * classes + pred].
std::vector<std::int64_t> confusion_matrix(std::span<const std::int32_t> pred,
                                           std::span<const std::int32_t> gt,
                                           std::int64_t classes, std::int32_t ignore_label = 255);

struct NormalMetrics {
  double mean_deg = 0;
  double median_deg = 0;
  std::vector<double> within;  // fraction of masked pixels at or below each threshold
  std::int64_t count = 0;
};

inline const std::vector<double> kDefaultAngleThresholds = {11.25, 22.5, 30.0};

// pred and gt hold 3-vectors per site; pred is normalized here (eps 1e-8).
// mask holds one value per site, nonzero meaning valid.
template <typename T>
NormalMetrics normal_metrics(std::span<const T> pred, std::span<const T> gt,
                             std::span<const T> mask,
                             const std::vector<double>& thresholds = kDefaultAngleThresholds);

// Per-row expectation sum_k p(k) * k. Rows that do not sum to 1 within tol
// are counted in *unnormalized when the pointer is given.
std::vector<double> age_expectation(std::span<const double> probs, std::int64_t classes = 100,
                                    double tol = 1e-5, std::int64_t* unnormalized = nullptr);

struct AbsErrorStats {
  double mean = 0;
  double median = 0;  // lower-middle element for even counts
};

AbsErrorStats abs_error_stats(std::span<const double> pred, std::span<const double> gt);

double classification_accuracy(std::span<const std::int32_t> pred,
                               std::span<const std::int32_t> gt);

// Lower-middle median; values is reordered.
double lower_median(std::vector<double>& values);

// Index of the largest value in each row of a (rows x cols) buffer, first
// index on ties.
template <typename T>
std::vector<std::int32_t> argmax_rows(std::span<const T> values, std::int64_t cols);

}  // namespace nddr
