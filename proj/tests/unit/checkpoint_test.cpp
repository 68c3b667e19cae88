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

#include <cstring>

#include "doctest.h"
#include "helpers.hpp"
#include "nddr/checkpoint.hpp"
#include "nddr/error.hpp"

using namespace nddr;
using nddr::testing::random_tensor;
using nddr::testing::scratch_dir;

TEST_CASE("byte layout of a single record") {
  Checkpoint ck;
  ck.add_tensor("ab", Tensor<float>({1, 1, 1, 2}, {1.0f, -2.0f}));
  const std::string b = ck.encode();
  REQUIRE(b.size() == 4 + 4 + 8 + 4 + 2 + 1 + 1 + 4 * 8 + 2 * 4);
  CHECK(b.substr(0, 4) == "NDDR");
  std::uint32_t version = 0;
  std::memcpy(&version, b.data() + 4, 4);
  CHECK(version == 1);
  std::uint64_t count = 0;
  std::memcpy(&count, b.data() + 8, 8);
  CHECK(count == 1);
  CHECK(b.substr(20, 2) == "ab");
  CHECK(static_cast<int>(b[22]) == 1);  // f32
  CHECK(static_cast<int>(b[23]) == 4);  // ndim
  float v[2] = {0, 0};
  std::memcpy(v, b.data() + 56, 8);
  CHECK(v[0] == 1.0f);
  CHECK(v[1] == -2.0f);
}

TEST_CASE("file round trip is bit exact for both dtypes") {
  const auto dir = scratch_dir("ckpt");
  Checkpoint ck;
  ck.add_tensor("f", random_tensor<float>({2, 3, 1, 4}, 1));
  ck.add_tensor("d", random_tensor<double>({1, 2, 2, 2}, 2));
  ck.add_scalar("meta/step", 42);
  ck.save(dir / "a.ckpt");
  const Checkpoint back = Checkpoint::load(dir / "a.ckpt");
  CHECK(back.encode() == ck.encode());
  CHECK(back.scalar("meta/step").value() == 42);
  const auto t = record_to_tensor<double>(*back.find("d"));
  CHECK(t.shape() == Shape{1, 2, 2, 2});
}

TEST_CASE("corrupt and truncated files are structured errors") {
  Checkpoint ck;
  ck.add_tensor("x", random_tensor<double>({1, 1, 2, 2}, 3));
  std::string b = ck.encode();
  std::string bad = b;
  bad[0] = 'X';
  try {
    Checkpoint::decode(bad);
    FAIL("expected a format error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kFormat);
  }
  std::string ver = b;
  ver[4] = 9;
  CHECK_THROWS_AS(Checkpoint::decode(ver), Error);
  for (std::size_t cut : {std::size_t{3}, std::size_t{12}, b.size() - 1})
    CHECK_THROWS_AS(Checkpoint::decode(b.substr(0, cut)), Error);
  CHECK_THROWS_AS(Checkpoint::load("/nonexistent/dir/x.ckpt"), Error);
}

TEST_CASE("duplicate names are rejected") {
  Checkpoint ck;
  ck.add_scalar("a", 1);
  CHECK_THROWS_AS(ck.add_scalar("a", 2), Error);
}
