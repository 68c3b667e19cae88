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

#include "doctest.h"
#include "helpers.hpp"
#include "nddr/data.hpp"
#include "nddr/error.hpp"
#include "nddr/train.hpp"

using namespace nddr;

namespace {

ParamEntry<double> entry(const std::string& name, double w, double grad, bool decay,
                         bool fusion = false) {
  ParamEntry<double> e;
  e.name = name;
  e.tensor = Tensor<double>({1, 1, 1, 1}, {w}, true);
  e.tensor.grad_buffer()[0] = grad;
  e.role = decay ? ParamRole::kWeight : ParamRole::kBias;
  e.decay = decay;
  e.fusion = fusion;
  return e;
}

TrainConfig plain(double lr, double momentum, double wd) {
  TrainConfig c;
  c.base_lr = lr;
  c.momentum = momentum;
  c.weight_decay = wd;
  c.poly_power = 0;
  return c;
}

}  // namespace

TEST_CASE("plain sgd step") {
  ParamRegistry<double> reg;
  reg.add(entry("w", 1.0, 0.5, true));
  SgdOptimizer<double> opt(reg);
  const auto cfg = plain(0.1, 0, 0);
  opt.step(reg, cfg, cfg.base_lr);
  CHECK(reg.entries()[0].tensor.data()[0] == doctest::Approx(0.95).epsilon(1e-15));
}

TEST_CASE("pure weight decay shrinks geometrically and skips biases") {
  ParamRegistry<double> reg;
  reg.add(entry("w", 2.0, 0.0, true));
  reg.add(entry("b", 2.0, 0.0, false));
  SgdOptimizer<double> opt(reg);
  const auto cfg = plain(0.1, 0, 0.01);
  for (int i = 0; i < 3; ++i) opt.step(reg, cfg, cfg.base_lr);
  CHECK(reg.entries()[0].tensor.data()[0] == doctest::Approx(2.0 * std::pow(1 - 2 * 0.01 * 0.1, 3)));
  CHECK(reg.entries()[1].tensor.data()[0] == 2.0);
}

TEST_CASE("momentum accumulates velocity") {
  ParamRegistry<double> reg;
  reg.add(entry("w", 0.0, 1.0, false));
  SgdOptimizer<double> opt(reg);
  const auto cfg = plain(0.1, 0.9, 0);
  opt.step(reg, cfg, 0.1);
  opt.step(reg, cfg, 0.1);
  CHECK(reg.entries()[0].tensor.data()[0] == doctest::Approx(-0.1 - 0.19));
}

TEST_CASE("fusion entries move lr-scale times further") {
  ParamRegistry<double> reg;
  reg.add(entry("backbone", 0.3, 0.25, true));
  reg.add(entry("fusion", 0.3, 0.25, true, true));
  reg.set_fusion_lr_scale(100);
  SgdOptimizer<double> opt(reg);
  const auto cfg = plain(1e-3, 0.9, 0);
  opt.step(reg, cfg, cfg.base_lr);
  const double d0 = 0.3 - reg.entries()[0].tensor.data()[0];
  const double d1 = 0.3 - reg.entries()[1].tensor.data()[0];
  CHECK(std::abs(d1 / d0 - 100.0) <= 1e-12 * 100);
}

TEST_CASE("non-finite gradients abort naming the parameter") {
  ParamRegistry<double> reg;
  reg.add(entry("fine", 1.0, 0.1, true));
  reg.add(entry("broken", 1.0, std::nan(""), true));
  SgdOptimizer<double> opt(reg);
  try {
    opt.step(reg, plain(0.1, 0, 0), 0.1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNotFinite);
    CHECK(std::string(e.what()).find("broken") != std::string::npos);
  }
  CHECK(reg.entries()[0].tensor.data()[0] == 1.0);
}

TEST_CASE("config validation and schedule") {
  TrainConfig c;
  c.base_lr = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainConfig{};
  c.nddr_lr_scale = 0.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainConfig{};
  c.weight_decay = -1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainConfig{};
  c.steps = 100;
  c.poly_power = 0.9;
  CHECK(learning_rate_at(c, 0) == c.base_lr);
  CHECK(learning_rate_at(c, 50) == doctest::Approx(c.base_lr * std::pow(0.5, 0.9)));
  c.poly_power = 0;
  CHECK(learning_rate_at(c, 99) == c.base_lr);
  CHECK(TrainConfig::for_mode(NetMode::kNddr).base_lr == 1e-3);
  CHECK(TrainConfig::for_mode(NetMode::kSingle).batch_size == 16);
}

TEST_CASE("zero steps leave the graph unchanged and emit one record") {
  const Dataset data = gen_shapes_tasks(8, 16, 3, 1);
  BuildOptions o;
  o.mode = NetMode::kSingle;
  TaskGraph<float> net(BackboneSpec::toy_vgg({{HeadKind::kPixel, 3}, {HeadKind::kPixel, 3}}), o);
  const auto before = net.to_checkpoint().encode();
  TrainConfig cfg;
  cfg.steps = 0;
  cfg.batch_size = 4;
  int records = 0;
  const auto r = train(net, data, nullptr, cfg, [&](const MetricsReport&) { ++records; });
  CHECK(records == 1);
  CHECK(r.reports.size() == 1);
  CHECK(net.to_checkpoint().encode() == before);
}

TEST_CASE("short training lowers the loss and is reproducible") {
  const Dataset data = gen_shapes_tasks(8, 16, 3, 2);
  auto run = [&] {
    BuildOptions o;
    o.mode = NetMode::kSingle;
    TaskGraph<float> net(BackboneSpec::toy_vgg({{HeadKind::kPixel, 3}, {HeadKind::kPixel, 3}}), o);
    TrainConfig cfg;
    cfg.steps = 30;
    cfg.batch_size = 4;
    const double before = evaluate(net, data).total_loss;
    const auto r = train(net, data, nullptr, cfg);
    return std::make_pair(before, r.reports.back().to_json_line());
  };
  const auto a = run(), b = run();
  CHECK(a.second == b.second);
  const auto rep = MetricsReport::from_json_line(a.second);
  CHECK(rep.value("task0", "loss") < a.first);
}

TEST_CASE("heads must fit the dataset") {
  const Dataset data = gen_shapes_tasks(4, 16, 3, 3);
  BuildOptions o;
  o.mode = NetMode::kNddr;
  TaskGraph<float> wrong(BackboneSpec::toy_vgg({{HeadKind::kPixel, 5}, {HeadKind::kPixel, 3}}), o);
  CHECK_THROWS_AS(check_compatible(wrong, data), Error);
  TaskGraph<float> right(BackboneSpec::toy_vgg({{HeadKind::kPixel, 3}, {HeadKind::kPixel, 3}}), o);
  CHECK_NOTHROW(check_compatible(right, data));
}

TEST_CASE("evaluation reports every metric") {
  const Dataset data = gen_shapes_tasks(4, 16, 3, 4);
  BuildOptions o;
  o.mode = NetMode::kNddr;
  TaskGraph<float> net(BackboneSpec::toy_vgg({{HeadKind::kPixel, 3}, {HeadKind::kPixel, 3}}), o);
  const auto r = evaluate(net, data).report;
  for (const char* m : {"loss", "miou", "pacc"}) CHECK(r.find("task0")->get(m) != nullptr);
  for (const char* m : {"loss", "mean_angle", "median_angle", "within_11.25", "within_22.5", "within_30"})
    CHECK(r.find("task1")->get(m) != nullptr);
  const double pacc = r.value("task0", "pacc");
  CHECK(pacc >= 0.0);
  CHECK(pacc <= 1.0);
}
