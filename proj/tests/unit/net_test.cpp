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

#include <algorithm>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "nddr/error.hpp"
#include "nddr/losses.hpp"
#include "nddr/net.hpp"
#include "nddr/ops.hpp"

using namespace nddr;
using nddr::testing::max_abs_diff;
using nddr::testing::random_tensor;

namespace {

std::vector<HeadSpec> pixel_heads() { return {{HeadKind::kPixel, 3}, {HeadKind::kPixel, 3}}; }

BuildOptions opts(NetMode mode, std::uint64_t seed = 0) {
  BuildOptions o;
  o.mode = mode;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("toy backbone geometry") {
  const auto spec = BackboneSpec::toy_vgg(pixel_heads());
  CHECK(spec.stages.size() == 4);
  CHECK(spec.stage_channels() == std::vector<std::int64_t>{8, 16, 32, 64});
  CHECK(spec.reduction() == 4);
  BuildOptions single = opts(NetMode::kSingle);
  TaskGraph<float> net(spec, single);
  CHECK(net.fusion_layer_count() == 0);
  Graph<float> g;
  auto out = net.forward(g, random_tensor<float>({2, 32, 32, 3}, 1));
  REQUIRE(out.size() == 1);
  CHECK(out[0].shape() == Shape{2, 32, 32, 3});
}

TEST_CASE("nddr graph has one fusion layer per stage") {
  TaskGraph<float> net(BackboneSpec::toy_vgg(pixel_heads()), opts(NetMode::kNddr));
  CHECK(net.fusion_layer_count() == 4);
  for (int s = 0; s < 4; ++s) CHECK(net.nddr_layer(s) != nullptr);
  Graph<float> g;
  auto out = net.forward(g, random_tensor<float>({1, 16, 16, 3}, 2));
  CHECK(out.size() == 2);
}

TEST_CASE("build validation") {
  const auto spec = BackboneSpec::toy_vgg({{HeadKind::kPixel, 3}});
  BuildOptions o = opts(NetMode::kNddr);
  o.tasks = 1;
  CHECK_THROWS_AS(TaskGraph<float>(spec, o), Error);
  BuildOptions s = opts(NetMode::kSingle);
  s.tasks = 1;
  s.shortcut = true;
  CHECK_THROWS_AS(TaskGraph<float>(spec, s), Error);
  BuildOptions bad = opts(NetMode::kNddr);
  CHECK_THROWS_AS(TaskGraph<float>(spec, bad), Error);  // two tasks, one head
}

TEST_CASE("registry names are unique and decay targets weights only") {
  for (NetMode m : {NetMode::kSingle, NetMode::kSharedTrunk, NetMode::kNddr,
                    NetMode::kCrossStitch, NetMode::kSluice}) {
    BuildOptions o = opts(m);
    o.shortcut = is_fusion_mode(m);
    TaskGraph<float> net(BackboneSpec::toy_vgg(pixel_heads()), o);
    std::set<std::string> names;
    for (const auto& e : net.registry().entries()) {
      CHECK(names.insert(e.name).second);
      CHECK(e.decay == (e.role == ParamRole::kWeight));
      if (e.fusion) CHECK(e.lr_scale == 1.0);
    }
  }
}

TEST_CASE("fusion lr scale is tagged on fusion parameters only") {
  TaskGraph<float> net(BackboneSpec::toy_vgg(pixel_heads()), opts(NetMode::kNddr));
  net.registry().set_fusion_lr_scale(100);
  int fusion = 0;
  for (const auto& e : net.registry().entries()) {
    CHECK(e.lr_scale == (e.fusion ? 100.0 : 1.0));
    fusion += e.fusion;
  }
  CHECK(fusion > 0);
}

TEST_CASE("parameter count equals the closed form in every mode") {
  for (NetMode m : {NetMode::kSingle, NetMode::kSharedTrunk, NetMode::kNddr,
                    NetMode::kCrossStitch, NetMode::kSluice})
    for (bool sc : {false, true}) {
      if (sc && !is_fusion_mode(m)) continue;
      BuildOptions o = opts(m);
      o.shortcut = sc;
      const auto spec = BackboneSpec::toy_vgg(pixel_heads());
      TaskGraph<float> net(spec, o);
      CHECK(net.parameter_count() == closed_form_parameter_count(spec, o));
    }
}

TEST_CASE("nddr overhead over two singles is the fusion total") {
  const auto spec = BackboneSpec::toy_vgg(pixel_heads());
  BuildOptions s0 = opts(NetMode::kSingle), s1 = opts(NetMode::kSingle);
  s1.task = 1;
  TaskGraph<float> a(spec, s0), b(spec, s1);
  BuildOptions o = opts(NetMode::kNddr);
  o.nddr.bias = false;
  o.nddr.affine = false;
  TaskGraph<float> n(spec, o);
  const auto fusion = count_fusion_params(2, spec.stage_channels());
  CHECK(n.parameter_count() - a.parameter_count() - b.parameter_count() == fusion.total);
}

TEST_CASE("identity start reproduces independent singles") {
  const auto spec = BackboneSpec::toy_vgg(pixel_heads());
  BuildOptions s0 = opts(NetMode::kSingle, 11), s1 = opts(NetMode::kSingle, 12);
  s1.task = 1;
  TaskGraph<float> a(spec, s0), b(spec, s1);
  BuildOptions o = opts(NetMode::kNddr, 13);
  o.init = InitPolicy::diagonal(1, 0);
  TaskGraph<float> n(spec, o);
  const Checkpoint cks[] = {a.to_checkpoint(), b.to_checkpoint()};
  n.load_pretrained(cks);
  n.set_fusion_norm_identity();
  auto x = random_tensor<float>({2, 16, 16, 3}, 14);
  Graph<float> g;
  auto ya = a.forward(g, x), yb = b.forward(g, x), yn = n.forward(g, x);
  CHECK(max_abs_diff<float>(yn[0].data(), ya[0].data()) <= 1e-5);
  CHECK(max_abs_diff<float>(yn[1].data(), yb[0].data()) <= 1e-5);
}

TEST_CASE("shared trunk heads see identical features and gradients add") {
  const auto spec = BackboneSpec::toy_vgg(pixel_heads());
  TaskGraph<double> net(spec, opts(NetMode::kSharedTrunk, 3));
  auto x = random_tensor<double>({1, 8, 8, 3}, 4);
  std::vector<std::int32_t> labels(64);
  for (int i = 0; i < 64; ++i) labels[i] = i % 3;

  auto trunk_grad = [&](int which) {
    net.registry().zero_grad();
    Graph<double> g;
    auto out = net.forward(g, x);
    Tensor<double> l0 = ops::softmax_cross_entropy(g, out[0], labels);
    Tensor<double> l1 = ops::softmax_cross_entropy(g, out[1], labels);
    Tensor<double> l = which == 0 ? l0 : which == 1 ? l1 : ops::add(g, l0, l1);
    g.backward(l);
    const auto* e = net.registry().find("trunk/stage1/conv1/weight");
    REQUIRE(e != nullptr);
    return std::vector<double>(e->tensor.grad().begin(), e->tensor.grad().end());
  };
  const auto g0 = trunk_grad(0), g1 = trunk_grad(1), gs = trunk_grad(2);
  for (std::size_t i = 0; i < gs.size(); ++i)
    CHECK(gs[i] == doctest::Approx(g0[i] + g1[i]).epsilon(1e-10));
}

TEST_CASE("shortcut heads take Cr channels") {
  BuildOptions o = opts(NetMode::kNddr);
  o.shortcut = true;
  TaskGraph<float> net(BackboneSpec::toy_vgg(pixel_heads()), o);
  const auto* w = net.registry().find("task0/head/weight");
  REQUIRE(w != nullptr);
  CHECK(w->tensor.shape().c == 64);
  o.shortcut_channels = 24;
  TaskGraph<float> narrow(BackboneSpec::toy_vgg(pixel_heads()), o);
  CHECK(narrow.registry().find("task1/head/weight")->tensor.shape().c == 24);
}

TEST_CASE("checkpoint round trip into the same graph is exact") {
  const auto spec = BackboneSpec::toy_vgg(pixel_heads());
  TaskGraph<float> a(spec, opts(NetMode::kNddr, 1));
  TaskGraph<float> b(spec, opts(NetMode::kNddr, 2));
  b.load_checkpoint(a.to_checkpoint());
  for (std::size_t i = 0; i < a.registry().entries().size(); ++i) {
    const auto& ea = a.registry().entries()[i].tensor;
    const auto& eb = b.registry().entries()[i].tensor;
    CHECK(std::equal(ea.data().begin(), ea.data().end(), eb.data().begin()));
  }
}

TEST_CASE("mismatched checkpoints report every problem and leave the graph alone") {
  const auto spec = BackboneSpec::toy_vgg(pixel_heads());
  TaskGraph<float> a(spec, opts(NetMode::kSingle, 1));
  Checkpoint ck = a.to_checkpoint();
  Checkpoint broken;
  for (const auto& r : ck.records())
    if (r.name != "stage1/conv1/bias" && r.name != "head/bias") broken.add(r);
  broken.add_scalar("stray", 1.0);
  TaskGraph<float> b(spec, opts(NetMode::kSingle, 2));
  const auto before = b.to_checkpoint().encode();
  try {
    b.load_checkpoint(broken);
    FAIL("expected a mismatch");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("stage1/conv1/bias") != std::string::npos);
    CHECK(msg.find("head/bias") != std::string::npos);
    CHECK(msg.find("stray") != std::string::npos);
  }
  CHECK(b.to_checkpoint().encode() == before);
}

TEST_CASE("seeded build and step are reproducible") {
  auto run = [] {
    TaskGraph<float> net(BackboneSpec::toy_vgg(pixel_heads()), opts(NetMode::kNddr, 5));
    net.set_training(true);
    Graph<float> g;
    auto out = net.forward(g, random_tensor<float>({2, 16, 16, 3}, 6));
    g.backward(ops::add(g, ops::sum(g, out[0]), ops::sum(g, out[1])));
    std::vector<float> grads;
    for (const auto& e : net.registry().entries())
      if (e.tensor.has_grad()) grads.insert(grads.end(), e.tensor.grad().begin(), e.tensor.grad().end());
    return grads;
  };
  CHECK(run() == run());
}

TEST_CASE("mode names round trip") {
  for (NetMode m : {NetMode::kSingle, NetMode::kSharedTrunk, NetMode::kNddr,
                    NetMode::kCrossStitch, NetMode::kSluice})
    CHECK(parse_mode(mode_name(m)) == m);
  CHECK_THROWS_AS(parse_mode("bogus"), Error);
}
