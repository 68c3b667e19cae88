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
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "nddr/data.hpp"
#include "nddr/error.hpp"

using namespace nddr;
using nddr::testing::scratch_dir;

TEST_CASE("shapes dataset layout and unit normals") {
  const Dataset d = gen_shapes_tasks(6, 32, 3, 7);
  CHECK(d.size() == 6);
  REQUIRE(d.tasks.size() == 2);
  CHECK(d.tasks[0] == TaskDescriptor{TaskKind::kPixelClass, 3});
  CHECK(d.tasks[1].kind == TaskKind::kPixelDirection);
  for (const auto& s : d.samples) {
    CHECK(s.input.shape() == Shape{1, 32, 32, 3});
    for (float v : s.labels[0].data()) CHECK((v >= 0 && v < 3));
    const auto& dir = s.labels[1];
    const auto& mask = s.masks[1];
    for (std::int64_t p = 0; p < 32 * 32; ++p) {
      if (mask.data()[p] == 0) continue;
      const float* v = dir.ptr() + 3 * p;
      CHECK(std::abs(std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("generators are deterministic and seed-sensitive") {
  CHECK(datasets_identical(gen_shapes_tasks(4, 16, 3, 9), gen_shapes_tasks(4, 16, 3, 9)));
  CHECK_FALSE(datasets_identical(gen_shapes_tasks(4, 16, 3, 9), gen_shapes_tasks(4, 16, 3, 10)));
  CHECK(datasets_identical(gen_attr_tasks(5, 16, 2), gen_attr_tasks(5, 16, 2)));
}

TEST_CASE("hw must divide by the pooling factor") {
  CHECK_THROWS_AS(gen_shapes_tasks(2, 30, 3, 0), Error);
  CHECK_NOTHROW(gen_shapes_tasks(1, 48, 3, 0));
}

TEST_CASE("one disk: class map and radial boundary normals") {
  const ShapeDesc disk{ShapeDesc::Kind::kDisk, 16, 16, 8, 1};
  const Sample s = render_shapes(32, 2, std::span<const ShapeDesc>(&disk, 1), 0);
  const auto& cls = s.labels[0];
  CHECK(cls.at(0, 16, 16, 0) == 1.0f);
  CHECK(cls.at(0, 10, 14, 0) == 1.0f);
  CHECK(cls.at(0, 0, 0, 0) == 0.0f);
  CHECK(cls.at(0, 31, 2, 0) == 0.0f);
  int band = 0;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      if (s.masks[1].at(0, y, x, 0) == 0) continue;
      ++band;
      const double rx = x + 0.5 - 16, ry = y + 0.5 - 16;
      const double r = std::hypot(rx, ry);
      CHECK(std::abs(r - 8) <= 2.5);
      const double nx = s.labels[1].at(0, y, x, 0), ny = s.labels[1].at(0, y, x, 1);
      // in-plane component points along the radius
      CHECK((nx * rx + ny * ry) / (std::hypot(nx, ny) * r) >= 0.99);
    }
  CHECK(band > 0);
}

TEST_CASE("normal mask equals the class boundary band") {
  const Dataset d = gen_shapes_tasks(3, 32, 4, 5);
  for (const auto& s : d.samples)
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) {
        const float c = s.labels[0].at(0, y, x, 0);
        bool edge = false;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int yy = y + dy, xx = x + dx;
            if (yy < 0 || xx < 0 || yy >= 32 || xx >= 32) continue;
            edge = edge || s.labels[0].at(0, yy, xx, 0) != c;
          }
        CHECK((s.masks[1].at(0, y, x, 0) != 0) == edge);
      }
}

TEST_CASE("attribute bins") {
  const auto r = attr_radius_range(32);
  CHECK(attr_age_bin(r.r_min, r) == 0);
  CHECK(attr_age_bin(r.r_max, r) == 99);
  CHECK(attr_age_bin(r.r_min + 0.505 * (r.r_max - r.r_min), r) == 50);
  const Dataset d = gen_attr_tasks(10000, 16, 1);
  std::vector<int> groups(10, 0);
  for (const auto& s : d.samples) {
    const int age = static_cast<int>(s.labels[0].data()[0]);
    const int gender = static_cast<int>(s.labels[1].data()[0]);
    CHECK((age >= 0 && age < 100));
    CHECK((gender == 0 || gender == 1));
    ++groups[age / 10];
  }
  for (int g : groups) CHECK(std::abs(g - 1000) <= 50);
}

TEST_CASE("dataset round trip and errors") {
  const auto dir = scratch_dir("dataset");
  const Dataset d = gen_shapes_tasks(3, 16, 3, 2);
  save_dataset(d, dir);
  CHECK(datasets_identical(load_dataset(dir), d));

  std::filesystem::remove(dir / "task1_mask_00002");
  try {
    load_dataset(dir);
    FAIL("expected a missing-file error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("task1_mask_00002") != std::string::npos);
  }

  save_dataset(d, dir);
  std::string manifest;
  {
    std::ifstream in(dir / "manifest");
    manifest.assign(std::istreambuf_iterator<char>(in), {});
  }
  const auto pos = manifest.find("\"tasks\"");
  REQUIRE(pos != std::string::npos);
  const auto close = manifest.find(']', pos);
  manifest.insert(close, ",{\"kind\":\"image-class\",\"classes\":2}");
  {
    std::ofstream out(dir / "manifest", std::ios::trunc);
    out << manifest;
  }
  try {
    load_dataset(dir);
    FAIL("expected a consistency error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("3 tasks") != std::string::npos);
  }
}
