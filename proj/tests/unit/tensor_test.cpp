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
#include "nddr/error.hpp"
#include "nddr/gradcheck.hpp"
#include "nddr/graph.hpp"
#include "nddr/ops.hpp"

using namespace nddr;
using nddr::testing::random_tensor;

TEST_CASE("elementwise add and annihilating mul") {
  Graph<double> g;
  Tensor<double> a({1, 1, 1, 2}, {1, 2});
  Tensor<double> b({1, 1, 1, 2}, {3, 4});
  auto s = ops::add(g, a, b);
  CHECK(s.data()[0] == 4);
  CHECK(s.data()[1] == 6);
  auto x = random_tensor<double>({2, 3, 3, 4}, 1);
  auto z = ops::mul(g, x, Tensor<double>::full(x.shape(), 0.0));
  for (double v : z.data()) CHECK(v == 0.0);
}

TEST_CASE("matmul with identity returns the operand") {
  Graph<double> g;
  Tensor<double> eye({1, 1, 3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  auto a = random_tensor<double>({1, 1, 3, 3}, 2);
  auto r = ops::matmul(g, eye, a);
  for (int i = 0; i < 9; ++i) CHECK(r.data()[i] == a.data()[i]);
}

TEST_CASE("shape mismatch names the primitive") {
  Graph<double> g;
  Tensor<double> a({1, 1, 1, 2}, {1, 2});
  Tensor<double> b({1, 1, 1, 3}, {1, 2, 3});
  try {
    ops::add(g, a, b);
    FAIL("expected a shape error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kShapeMismatch);
    CHECK(std::string(e.what()).find("add") != std::string::npos);
  }
}

TEST_CASE("backward of sum gives ones and of squares gives 2x") {
  Graph<double> g;
  Tensor<double> x({1, 1, 1, 4}, {1, 2, 3, 4}, true);
  g.backward(ops::sum(g, x));
  for (double v : x.grad()) CHECK(v == 1.0);

  Graph<double> g2;
  Tensor<double> y({1, 1, 1, 3}, {1, 2, 3}, true);
  g2.backward(ops::sum(g2, ops::mul(g2, y, y)));
  CHECK(y.grad()[0] == 2.0);
  CHECK(y.grad()[1] == 4.0);
  CHECK(y.grad()[2] == 6.0);
}

TEST_CASE("backward rejects non-scalar losses and consumed graphs") {
  Graph<double> g;
  Tensor<double> x({1, 1, 1, 2}, {1, 2}, true);
  auto y = ops::scale(g, x, 2.0);
  CHECK_THROWS_AS(g.backward(y), Error);
  auto l = ops::sum(g, y);
  g.backward(l);
  CHECK(g.consumed());
  CHECK_THROWS_AS(g.backward(l), Error);
}

TEST_CASE("gradients accumulate over a shared input") {
  Graph<double> g;
  Tensor<double> x({1, 1, 1, 3}, {1, -2, 3}, true);
  auto l = ops::add(g, ops::sum(g, x), ops::sum(g, ops::scale(g, x, 3.0)));
  g.backward(l);
  for (double v : x.grad()) CHECK(v == doctest::Approx(4.0));
}

TEST_CASE("gradient linearity over a composite") {
  auto x0 = random_tensor<double>({2, 2, 2, 3}, 7);
  auto w = random_tensor<double>({2, 2, 2, 3}, 8);
  auto grad_of = [&](double a, double b) {
    Graph<double> g;
    Tensor<double> x = x0.clone();
    x.set_requires_grad(true);
    auto l1 = ops::sum(g, ops::relu(g, ops::mul(g, x, w)));
    auto l2 = ops::sum(g, ops::mul(g, x, x));
    g.backward(ops::add(g, ops::scale(g, l1, a), ops::scale(g, l2, b)));
    return std::vector<double>(x.grad().begin(), x.grad().end());
  };
  const auto g1 = grad_of(1, 0), g2 = grad_of(0, 1), gab = grad_of(2.5, -0.75);
  for (std::size_t i = 0; i < g1.size(); ++i)
    CHECK(gab[i] == doctest::Approx(2.5 * g1[i] - 0.75 * g2[i]).epsilon(1e-12));
}

TEST_CASE("concat and slice channels") {
  Graph<double> g;
  Tensor<double> a({1, 1, 1, 2}, {1, 2}, true);
  Tensor<double> b({1, 1, 1, 2}, {3, 4}, true);
  auto c = ops::concat_channels<double>(g, {a, b});
  CHECK(c.shape().c == 4);
  for (int i = 0; i < 4; ++i) CHECK(c.data()[i] == i + 1);
  auto s = ops::slice_channels(g, c, 1, 2);
  CHECK(s.data()[0] == 2);
  CHECK(s.data()[1] == 3);
  g.backward(ops::sum(g, c));
  for (double v : a.grad()) CHECK(v == 1.0);
  for (double v : b.grad()) CHECK(v == 1.0);
  Graph<double> g1;
  auto one = ops::concat_channels<double>(g1, {a});
  CHECK(one.data()[0] == 1);
  CHECK(one.data()[1] == 2);
}

TEST_CASE("finite-difference oracle self-consistency") {
  auto x = random_tensor<double>({2, 3, 3, 4}, 3);
  const double sq = finite_difference_check<double>(
      [](Graph<double>& g, const Tensor<double>& t) { return ops::sum(g, ops::mul(g, t, t)); }, x);
  CHECK(sq <= 1e-6);

  // relu away from its kink
  auto y = random_tensor<double>({1, 2, 2, 3}, 4, 0.1, 2.0);
  for (std::size_t i = 0; i < y.data().size(); i += 2) y.data()[i] = -y.data()[i];
  const double r = finite_difference_check<double>(
      [](Graph<double>& g, const Tensor<double>& t) { return ops::sum(g, ops::relu(g, t)); }, y);
  CHECK(r <= 1e-6);

  const double c = finite_difference_check<double>(
      [](Graph<double>&, const Tensor<double>&) { return Tensor<double>::scalar(3.0); }, y);
  CHECK(c == 0.0);
}

TEST_CASE("finite-difference oracle reports NaN losses as failures") {
  auto x = random_tensor<double>({1, 1, 1, 2}, 5);
  const double e = finite_difference_check<double>(
      [](Graph<double>& g, const Tensor<double>& t) {
        return ops::scale(g, ops::sum(g, t), std::nan(""));
      },
      x);
  CHECK(std::isinf(e));
}

TEST_CASE("finite checking mode flags NaN outputs") {
  Graph<double> g;
  g.set_check_finite(true);
  Tensor<double> x({1, 1, 1, 1}, std::vector<double>{1.0});
  CHECK_THROWS_AS(ops::scale(g, x, std::nan("")), Error);
}

TEST_CASE("forward is bit-deterministic") {
  auto run = [] {
    Graph<float> g;
    auto x = random_tensor<float>({2, 4, 4, 3}, 11);
    auto w = random_tensor<float>({1, 1, 3, 5}, 12);
    Tensor<float> flat({1, 1, 32, 3}, std::vector<float>(x.data().begin(), x.data().end()));
    auto y = ops::matmul(g, flat, w);
    return std::vector<float>(y.data().begin(), y.data().end());
  };
  CHECK(run() == run());
}
