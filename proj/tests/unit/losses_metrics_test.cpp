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

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "nddr/error.hpp"
#include "nddr/losses.hpp"
#include "nddr/metrics.hpp"
#include "nddr/ops.hpp"
#include "nddr/report.hpp"

using namespace nddr;
using nddr::testing::random_tensor;

namespace {

Tensor<double> unit_field(std::int64_t sites, std::uint64_t seed) {
  auto t = random_tensor<double>({1, 1, sites, 3}, seed);
  for (std::int64_t s = 0; s < sites; ++s) {
    double* v = t.ptr() + 3 * s;
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    for (int k = 0; k < 3; ++k) v[k] /= n;
  }
  return t;
}

// Unit vector at `deg` degrees from +z, in the x-z plane.
void at_angle(double* v, double deg) {
  const double r = deg * std::numbers::pi / 180.0;
  v[0] = std::sin(r);
  v[1] = 0;
  v[2] = std::cos(r);
}

}  // namespace

TEST_CASE("softmax cross entropy values") {
  Graph<double> g;
  std::vector<std::int32_t> labels = {0, 7, 39, 12};
  auto l = ops::softmax_cross_entropy(g, Tensor<double>::full({4, 1, 1, 40}, 0.2), labels);
  CHECK(l.item() == doctest::Approx(std::log(40.0)).epsilon(1e-12));

  double prev = INFINITY;
  for (double margin : {1.0, 5.0, 20.0, 60.0}) {
    Tensor<double> logits({1, 1, 1, 3}, {margin, 0, 0});
    const double v = ops::softmax_cross_entropy(g, logits, std::vector<std::int32_t>{0}).item();
    CHECK(v >= 0.0);
    CHECK(v < prev);
    prev = v;
  }
  CHECK(prev < 1e-20);
}

TEST_CASE("softmax cross entropy ignores 255 and rejects bad labels") {
  Graph<double> g;
  Tensor<double> logits = random_tensor<double>({1, 1, 2, 3}, 1, -2, 2, true);
  auto l = ops::softmax_cross_entropy(g, logits, std::vector<std::int32_t>{255, 255});
  CHECK(l.item() == 0.0);
  g.backward(l);
  for (double v : logits.grad()) CHECK(v == 0.0);
  Graph<double> g2;
  CHECK_THROWS_AS(ops::softmax_cross_entropy(g2, logits, std::vector<std::int32_t>{0, 3}), Error);
}

TEST_CASE("normal loss examples and the cosine identity") {
  Graph<double> g;
  auto gt = unit_field(6, 2);
  auto mask = Tensor<double>::full({1, 1, 6, 1}, 1.0);
  CHECK(ops::normal_loss(g, gt, gt, mask).item() == doctest::Approx(0.0).epsilon(1e-12));
  Tensor<double> neg = gt.clone();
  for (double& v : neg.data()) v = -v;
  CHECK(ops::normal_loss(g, neg, gt, mask).item() == doctest::Approx(4.0));
  Tensor<double> a({1, 1, 1, 3}, {1, 0, 0}), b({1, 1, 1, 3}, {0, 0, 1});
  CHECK(ops::normal_loss(g, a, b, Tensor<double>::full({1, 1, 1, 1}, 1.0)).item() ==
        doctest::Approx(2.0));

  auto pred = random_tensor<double>({1, 1, 6, 3}, 3);
  const double loss = ops::normal_loss(g, pred, gt, mask).item();
  double cos = 0;
  for (int s = 0; s < 6; ++s) {
    const double* p = pred.ptr() + 3 * s;
    const double* q = gt.ptr() + 3 * s;
    const double n = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    cos += (p[0] * q[0] + p[1] * q[1] + p[2] * q[2]) / n;
  }
  CHECK(std::abs(loss - 2.0 * (1.0 - cos / 6)) <= 1e-12);
}

TEST_CASE("normal loss with empty mask and zero prediction") {
  Graph<double> g;
  Tensor<double> pred = random_tensor<double>({1, 1, 2, 3}, 4, -1, 1, true);
  auto gt = unit_field(2, 5);
  auto l = ops::normal_loss(g, pred, gt, Tensor<double>::full({1, 1, 2, 1}, 0.0));
  CHECK(l.item() == 0.0);
  g.backward(l);
  for (double v : pred.grad()) CHECK(v == 0.0);
  Graph<double> g2;
  auto z = ops::normal_loss(g2, Tensor<double>::full({1, 1, 2, 3}, 0.0), gt,
                            Tensor<double>::full({1, 1, 2, 1}, 1.0));
  CHECK(std::isfinite(z.item()));
}

TEST_CASE("seg metrics examples") {
  const std::vector<std::int32_t> gt = {0, 0, 1, 1}, pred = {0, 1, 1, 1};
  const auto m = seg_metrics(pred, gt, 2);
  CHECK(m.miou == doctest::Approx(7.0 / 12.0));
  CHECK(m.pacc == 0.75);
  const auto same = seg_metrics(gt, gt, 2);
  CHECK(same.miou == 1.0);
  CHECK(same.pacc == 1.0);
  // class 2 absent from both maps does not count
  const auto absent = seg_metrics(pred, gt, 3);
  CHECK(absent.miou == doctest::Approx(7.0 / 12.0));
  const std::vector<std::int32_t> ign = {0, 255, 1, 1};
  CHECK(seg_metrics(pred, ign, 2).pacc == 1.0);
  const std::vector<std::int32_t> flip = {1, 0, 1, 1};
  CHECK(seg_metrics(flip, ign, 2).pacc == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("seg metrics equal a brute-force confusion oracle") {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const int cls = static_cast<int>(rng.integer(2, 5));
    std::vector<std::int32_t> gt(64), pred(64);
    for (int i = 0; i < 64; ++i) {
      gt[i] = rng.uniform(0, 1) < 0.1 ? 255 : static_cast<std::int32_t>(rng.integer(0, cls - 1));
      pred[i] = static_cast<std::int32_t>(rng.integer(0, cls - 1));
    }
    double iou_sum = 0;
    int present = 0, correct = 0, valid = 0;
    for (int c = 0; c < cls; ++c) {
      int tp = 0, fp = 0, fn = 0;
      for (int i = 0; i < 64; ++i) {
        if (gt[i] == 255) continue;
        tp += pred[i] == c && gt[i] == c;
        fp += pred[i] == c && gt[i] != c;
        fn += pred[i] != c && gt[i] == c;
      }
      if (tp + fp + fn == 0) continue;
      ++present;
      iou_sum += static_cast<double>(tp) / (tp + fp + fn);
    }
    for (int i = 0; i < 64; ++i)
      if (gt[i] != 255) {
        ++valid;
        correct += pred[i] == gt[i];
      }
    const auto m = seg_metrics(pred, gt, cls);
    CHECK(m.miou == iou_sum / present);
    CHECK(m.pacc == static_cast<double>(correct) / valid);
    const auto cm = confusion_matrix(pred, gt, cls);
    std::int64_t total = 0;
    for (auto v : cm) total += v;
    CHECK(total == valid);
  }
}

TEST_CASE("normal metrics examples") {
  auto gt = unit_field(8, 6);
  auto mask = Tensor<double>::full({1, 1, 8, 1}, 1.0);
  const auto same = normal_metrics<double>(gt.data(), gt.data(), mask.data());
  CHECK(same.mean_deg == doctest::Approx(0.0).epsilon(1e-6));
  for (double w : same.within) CHECK(w == 1.0);

  Tensor<double> p({1, 1, 2, 3}, {1, 0, 0, 0, 1, 0});
  Tensor<double> q({1, 1, 2, 3}, {0, 0, 1, 0, 0, 1});
  auto m2 = Tensor<double>::full({1, 1, 2, 1}, 1.0);
  const auto perp = normal_metrics<double>(p.data(), q.data(), m2.data());
  CHECK(perp.mean_deg == doctest::Approx(90.0));
  CHECK(perp.within[2] == 0.0);

  Tensor<double> a({1, 1, 4, 3}), z({1, 1, 4, 3});
  for (int s = 0; s < 4; ++s) {
    at_angle(a.ptr() + 3 * s, s < 2 ? 10.0 : 25.0);
    at_angle(z.ptr() + 3 * s, 0.0);
  }
  auto m4 = Tensor<double>::full({1, 1, 4, 1}, 1.0);
  const auto half = normal_metrics<double>(a.data(), z.data(), m4.data());
  CHECK(half.within[0] == 0.5);
  CHECK(half.within[1] == 0.5);
  CHECK(half.within[2] == 1.0);
  CHECK(half.mean_deg == doctest::Approx(17.5));
  CHECK(half.median_deg == doctest::Approx(10.0));
}

TEST_CASE("within-t is monotone in t") {
  const std::vector<double> ts = {1, 5, 11.25, 22.5, 30, 45, 90, 180};
  for (int trial = 0; trial < 100; ++trial) {
    auto p = unit_field(20, 1000 + trial), q = unit_field(20, 2000 + trial);
    auto mask = random_tensor<double>({1, 1, 20, 1}, 3000 + trial, 0, 1);
    for (double& v : mask.data()) v = v > 0.3 ? 1.0 : 0.0;
    const auto m = normal_metrics<double>(p.data(), q.data(), mask.data(), ts);
    for (std::size_t i = 1; i < ts.size(); ++i) CHECK(m.within[i] >= m.within[i - 1]);
    CHECK(m.mean_deg >= 0.0);
    CHECK(m.mean_deg <= 180.0);
  }
}

TEST_CASE("age expectation") {
  std::vector<double> probs(300, 0.0);
  probs[30] = 1.0;
  for (int k = 100; k < 200; ++k) probs[k] = 0.01;
  probs[200 + 20] = 0.5;
  probs[200 + 40] = 0.5;
  const auto ages = age_expectation(probs);
  CHECK(ages[0] == 30.0);
  CHECK(ages[1] == doctest::Approx(49.5).epsilon(1e-12));
  CHECK(ages[2] == 30.0);
  std::int64_t bad = 0;
  std::vector<double> skew(100, 0.02);
  age_expectation(skew, 100, 1e-5, &bad);
  CHECK(bad == 1);
}

TEST_CASE("absolute error statistics and accuracy") {
  const std::vector<double> g = {10, 20, 30};
  auto s = abs_error_stats(g, g);
  CHECK(s.mean == 0.0);
  CHECK(s.median == 0.0);
  auto two = abs_error_stats(std::vector<double>{1, 3}, std::vector<double>{0, 0});
  CHECK(two.mean == 2.0);
  CHECK(two.median == 1.0);
  auto three = abs_error_stats(std::vector<double>{0, 0, 10}, std::vector<double>{0, 0, 0});
  CHECK(three.mean == doctest::Approx(10.0 / 3.0));
  CHECK(three.median == 0.0);
  CHECK(classification_accuracy(std::vector<std::int32_t>{1, 0, 1},
                                std::vector<std::int32_t>{1, 0, 1}) == 1.0);
  CHECK_THROWS_AS(abs_error_stats(std::vector<double>{}, std::vector<double>{}), Error);
  CHECK_THROWS_AS(classification_accuracy({}, {}), Error);
}

TEST_CASE("metrics report serialization") {
  MetricsReport r;
  r.step = 12;
  r.seed = 3;
  r.mode = "nddr";
  r.init = "diag:0.9,0.1";
  r.lr_scale = 100;
  r.task("task0").set("pacc", 0.1 + 0.2);
  r.task("task1").set("mean_angle", 1.0 / 3.0);
  const auto back = MetricsReport::from_json_line(r.to_json_line());
  CHECK(back.to_json_line() == r.to_json_line());
  CHECK(back.value("task0", "pacc") == 0.1 + 0.2);
  CHECK(back.value("task1", "mean_angle") == 1.0 / 3.0);
  const std::string csv = summary_csv({r});
  CHECK(csv.rfind("step,task,metric,value\n", 0) == 0);
  CHECK(csv.find("12,task0,pacc,") != std::string::npos);
}
