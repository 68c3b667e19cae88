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

#include "nddr/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "nddr/checkpoint.hpp"
#include "nddr/error.hpp"
#include "nddr/losses.hpp"
#include "nddr/random.hpp"

namespace nddr {

const char* task_kind_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kPixelClass: return "pixel-class";
    case TaskKind::kPixelDirection: return "pixel-direction";
    case TaskKind::kImageClass: return "image-class";
  }
  return "?";
}

TaskKind parse_task_kind(std::string_view text) {
  for (TaskKind k : {TaskKind::kPixelClass, TaskKind::kPixelDirection, TaskKind::kImageClass})
    if (text == task_kind_name(k)) return k;
  fail(ErrorCode::kFormat, "unknown task kind '", text, "'");
}

template <typename T>
Batch<T> make_batch(const Dataset& d, std::span<const std::size_t> indices) {
  require(!indices.empty(), ErrorCode::kInvalidArgument, "empty batch");
  const std::int64_t n = static_cast<std::int64_t>(indices.size());
  const Shape in = d.samples.at(indices[0]).input.shape();
  Batch<T> b;
  b.input = Tensor<T>(Shape{n, in.h, in.w, in.c});
  const std::int64_t per = in.h * in.w * in.c;
  for (std::int64_t k = 0; k < n; ++k) {
    const auto src = d.samples.at(indices[k]).input.data();
    require(static_cast<std::int64_t>(src.size()) == per, ErrorCode::kShapeMismatch,
            "sample ", indices[k], " input size differs from the batch");
    std::copy(src.begin(), src.end(), b.input.ptr() + k * per);
  }
  const std::size_t tasks = d.tasks.size();
  b.classes.resize(tasks);
  b.directions.resize(tasks);
  b.masks.resize(tasks);
  for (std::size_t t = 0; t < tasks; ++t) {
    const Shape ls = d.samples[indices[0]].labels[t].shape();
    const Shape ms = d.samples[indices[0]].masks[t].shape();
    b.masks[t] = Tensor<T>(Shape{n, ms.h, ms.w, 1});
    if (d.tasks[t].kind == TaskKind::kPixelDirection)
      b.directions[t] = Tensor<T>(Shape{n, ls.h, ls.w, ls.c});
    const std::int64_t lper = ls.h * ls.w * ls.c;
    const std::int64_t mper = ms.h * ms.w;
    for (std::int64_t k = 0; k < n; ++k) {
      const Sample& s = d.samples[indices[k]];
      const auto lab = s.labels[t].data();
      const auto msk = s.masks[t].data();
      std::copy(msk.begin(), msk.end(), b.masks[t].ptr() + k * mper);
      if (d.tasks[t].kind == TaskKind::kPixelDirection) {
        std::copy(lab.begin(), lab.end(), b.directions[t].ptr() + k * lper);
      } else {
        for (std::size_t p = 0; p < lab.size(); ++p)
          b.classes[t].push_back(msk[p] > 0.5f ? static_cast<std::int32_t>(lab[p])
                                               : kIgnoreLabel);
      }
    }
  }
  return b;
}

template Batch<float> make_batch(const Dataset&, std::span<const std::size_t>);
template Batch<double> make_batch(const Dataset&, std::span<const std::size_t>);

namespace {

std::array<float, 3> class_colour(int cls) {
  static constexpr std::array<std::array<float, 3>, 6> kFixed = {{{0.45f, 0.45f, 0.45f},
                                                                  {0.90f, 0.20f, 0.20f},
                                                                  {0.20f, 0.80f, 0.30f},
                                                                  {0.20f, 0.30f, 0.90f},
                                                                  {0.90f, 0.80f, 0.20f},
                                                                  {0.80f, 0.30f, 0.80f}}};
  if (cls < static_cast<int>(kFixed.size())) return kFixed[cls];
  Rng rng(mix_seed(0xc0105, cls));
  return {static_cast<float>(rng.uniform(0.05, 0.95)), static_cast<float>(rng.uniform(0.05, 0.95)),
          static_cast<float>(rng.uniform(0.05, 0.95))};
}

bool inside(const ShapeDesc& s, double x, double y) {
  const double dx = x - s.cx;
  const double dy = y - s.cy;
  if (s.kind == ShapeDesc::Kind::kDisk) return dx * dx + dy * dy <= s.radius * s.radius;
  return std::abs(dx) <= s.radius && std::abs(dy) <= s.radius;
}

// Signed distance (negative inside) and its gradient, the outward normal.
double signed_distance(const ShapeDesc& s, double x, double y, double& gx, double& gy) {
  const double dx = x - s.cx;
  const double dy = y - s.cy;
  if (s.kind == ShapeDesc::Kind::kDisk) {
    const double r = std::hypot(dx, dy);
    if (r < 1e-12) {
      gx = 1;
      gy = 0;
    } else {
      gx = dx / r;
      gy = dy / r;
    }
    return r - s.radius;
  }
  const double qx = std::abs(dx) - s.radius;
  const double qy = std::abs(dy) - s.radius;
  const double sx = dx < 0 ? -1.0 : 1.0;
  const double sy = dy < 0 ? -1.0 : 1.0;
  if (qx > 0 || qy > 0) {
    const double ox = std::max(qx, 0.0);
    const double oy = std::max(qy, 0.0);
    const double len = std::hypot(ox, oy);
    gx = sx * ox / len;
    gy = sy * oy / len;
    return len;
  }
  if (qx >= qy) {
    gx = sx;
    gy = 0;
    return qx;
  }
  gx = 0;
  gy = sy;
  return qy;
}

constexpr double kNormalZ = 0.5;
constexpr int kSuper = 4;

}  // namespace

Sample render_shapes(std::int64_t hw, std::int64_t classes, std::span<const ShapeDesc> shapes,
                     std::uint64_t noise_seed, double noise) {
  require(hw >= 1 && classes >= 2, ErrorCode::kInvalidArgument,
          "render needs hw >= 1 and classes >= 2");
  Tensor<float> image(Shape{1, hw, hw, 3});
  Tensor<float> label(Shape{1, hw, hw, 1});
  Tensor<float> normal(Shape{1, hw, hw, 3});
  Tensor<float> nmask(Shape{1, hw, hw, 1});
  Tensor<float> cmask = Tensor<float>::full(Shape{1, hw, hw, 1}, 1.0f);
  for (const auto& s : shapes)
    require(s.cls >= 1 && s.cls < classes, ErrorCode::kInvalidArgument, "shape class ", s.cls,
            " outside [1,", classes, ")");

  Rng rng(noise_seed);
  const auto bg = class_colour(0);
  for (std::int64_t y = 0; y < hw; ++y)
    for (std::int64_t x = 0; x < hw; ++x) {
      std::array<double, 3> rgb = {bg[0], bg[1], bg[2]};
      int cls = 0;
      for (const auto& s : shapes) {
        int hits = 0;
        for (int sy = 0; sy < kSuper; ++sy)
          for (int sx = 0; sx < kSuper; ++sx)
            hits += inside(s, x + (sx + 0.5) / kSuper, y + (sy + 0.5) / kSuper);
        const double cover = static_cast<double>(hits) / (kSuper * kSuper);
        const auto col = class_colour(s.cls);
        for (int c = 0; c < 3; ++c) rgb[c] = (1 - cover) * rgb[c] + cover * col[c];
        if (inside(s, x + 0.5, y + 0.5)) cls = s.cls;
      }
      for (int c = 0; c < 3; ++c)
        image.at(0, y, x, c) = static_cast<float>(2.0 * (rgb[c] + rng.normal(0.0, noise)) - 1.0);
      label.at(0, y, x, 0) = static_cast<float>(cls);
    }

  // Boundary band: any 3x3 neighbour with a different class.
  for (std::int64_t y = 0; y < hw; ++y)
    for (std::int64_t x = 0; x < hw; ++x) {
      const float own = label.at(0, y, x, 0);
      bool band = false;
      for (std::int64_t dy = -1; dy <= 1 && !band; ++dy)
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
          const std::int64_t yy = y + dy;
          const std::int64_t xx = x + dx;
          if (yy < 0 || xx < 0 || yy >= hw || xx >= hw) continue;
          if (label.at(0, yy, xx, 0) != own) {
            band = true;
            break;
          }
        }
      if (!band || shapes.empty()) continue;
      double best = INFINITY;
      double nx = 0;
      double ny = 0;
      for (const auto& s : shapes) {
        double gx = 0;
        double gy = 0;
        const double d = std::abs(signed_distance(s, x + 0.5, y + 0.5, gx, gy));
        if (d < best) {
          best = d;
          nx = gx;
          ny = gy;
        }
      }
      const double len = std::sqrt(nx * nx + ny * ny + kNormalZ * kNormalZ);
      normal.at(0, y, x, 0) = static_cast<float>(nx / len);
      normal.at(0, y, x, 1) = static_cast<float>(ny / len);
      normal.at(0, y, x, 2) = static_cast<float>(kNormalZ / len);
      nmask.at(0, y, x, 0) = 1.0f;
    }

  Sample s;
  s.input = image;
  s.labels = {label, normal};
  s.masks = {cmask, nmask};
  return s;
}

namespace {

std::uint64_t sample_seed(std::uint64_t seed, const std::string& split, std::int64_t i) {
  return mix_seed(mix_seed(seed, hash_name(split)), static_cast<std::uint64_t>(i));
}

std::vector<ShapeDesc> random_scene(std::int64_t hw, std::int64_t classes, Rng& rng) {
  std::vector<ShapeDesc> shapes;
  const int want = static_cast<int>(rng.integer(1, 3));
  for (int tries = 0; tries < 100 && static_cast<int>(shapes.size()) < want; ++tries) {
    ShapeDesc s;
    s.kind = rng.integer(0, 1) == 0 ? ShapeDesc::Kind::kDisk : ShapeDesc::Kind::kSquare;
    s.radius = rng.uniform(0.15 * hw, 0.3 * hw);
    s.cx = rng.uniform(s.radius + 1, hw - s.radius - 1);
    s.cy = rng.uniform(s.radius + 1, hw - s.radius - 1);
    s.cls = static_cast<int>(rng.integer(1, classes - 1));
    // Circumscribed circles plus a two pixel gap keep shapes disjoint.
    bool clear = true;
    for (const auto& o : shapes) {
      const double gap = std::hypot(s.cx - o.cx, s.cy - o.cy);
      if (gap < std::numbers::sqrt2 * (s.radius + o.radius) + 2) clear = false;
    }
    if (clear) shapes.push_back(s);
  }
  return shapes;
}

}  // namespace

Dataset gen_shapes_tasks(std::int64_t n, std::int64_t hw, std::int64_t classes,
                         std::uint64_t seed, const std::string& split,
                         std::int64_t pool_factor) {
  require(n >= 0, ErrorCode::kInvalidArgument, "sample count must be >= 0, got ", n);
  require(classes >= 2 && classes < kIgnoreLabel, ErrorCode::kInvalidArgument,
          "classes must be in [2,", kIgnoreLabel, "), got ", classes);
  require(pool_factor >= 1 && hw >= pool_factor && hw % pool_factor == 0,
          ErrorCode::kInvalidArgument, "hw ", hw, " is not divisible by the backbone pooling factor ",
          pool_factor);
  Dataset d;
  d.generator = "shapes";
  d.seed = seed;
  d.split = split;
  d.hw = hw;
  d.channels = 3;
  d.tasks = {{TaskKind::kPixelClass, classes}, {TaskKind::kPixelDirection, 3}};
  d.samples.reserve(n);
  for (std::int64_t i = 0; i < n; ++i) {
    Rng rng(sample_seed(seed, split, i));
    const auto shapes = random_scene(hw, classes, rng);
    d.samples.push_back(render_shapes(hw, classes, shapes, rng.engine()()));
  }
  return d;
}

AttrRange attr_radius_range(std::int64_t hw) {
  return {0.15 * static_cast<double>(hw), 0.45 * static_cast<double>(hw)};
}

int attr_age_bin(double radius, const AttrRange& range) {
  const double t = 100.0 * (radius - range.r_min) / (range.r_max - range.r_min);
  return std::clamp(static_cast<int>(std::floor(t)), 0, 99);
}

Dataset gen_attr_tasks(std::int64_t n, std::int64_t hw, std::uint64_t seed,
                       const std::string& split) {
  require(n >= 0, ErrorCode::kInvalidArgument, "sample count must be >= 0, got ", n);
  require(hw >= 8, ErrorCode::kInvalidArgument, "attribute images need hw >= 8, got ", hw);
  Dataset d;
  d.generator = "attrs";
  d.seed = seed;
  d.split = split;
  d.hw = hw;
  d.channels = 3;
  d.tasks = {{TaskKind::kImageClass, 100}, {TaskKind::kImageClass, 2}};
  const AttrRange range = attr_radius_range(hw);
  const std::uint64_t base = mix_seed(seed, hash_name(split));

  // Each block of 100 consecutive samples covers every size bin once.
  std::vector<int> perm(100);
  for (std::int64_t i = 0; i < n; ++i) {
    if (i % 100 == 0) {
      for (int b = 0; b < 100; ++b) perm[b] = b;
      Rng prng(mix_seed(base, 0x5eed0000ULL + static_cast<std::uint64_t>(i / 100)));
      std::shuffle(perm.begin(), perm.end(), prng.engine());
    }
    Rng rng(sample_seed(seed, split, i));
    const int bin = perm[i % 100];
    const double r =
        range.r_min + (bin + rng.uniform(0.02, 0.98)) * (range.r_max - range.r_min) / 100.0;
    const int gender = static_cast<int>(rng.integer(0, 1));
    const double theta =
        (gender == 0 ? 0.0 : std::numbers::pi / 2) + rng.uniform(-0.26, 0.26);
    const double cx = hw / 2.0 + rng.uniform(-1.5, 1.5);
    const double cy = hw / 2.0 + rng.uniform(-1.5, 1.5);
    const double a = r;
    const double b = 0.6 * r;
    const double ct = std::cos(theta);
    const double st = std::sin(theta);

    Tensor<float> image(Shape{1, hw, hw, 3});
    for (std::int64_t y = 0; y < hw; ++y)
      for (std::int64_t x = 0; x < hw; ++x) {
        int hits = 0;
        for (int sy = 0; sy < kSuper; ++sy)
          for (int sx = 0; sx < kSuper; ++sx) {
            const double px = x + (sx + 0.5) / kSuper - cx;
            const double py = y + (sy + 0.5) / kSuper - cy;
            const double u = (ct * px + st * py) / a;
            const double v = (-st * px + ct * py) / b;
            hits += u * u + v * v <= 1.0;
          }
        const double cover = static_cast<double>(hits) / (kSuper * kSuper);
        for (int c = 0; c < 3; ++c)
          image.at(0, y, x, c) =
              static_cast<float>(1.6 * cover - 0.8 + rng.normal(0.0, 0.1));
      }
    Sample s;
    s.input = image;
    s.labels = {Tensor<float>::full(Shape{}, static_cast<float>(attr_age_bin(r, range))),
                Tensor<float>::full(Shape{}, static_cast<float>(gender))};
    s.masks = {Tensor<float>::full(Shape{}, 1.0f), Tensor<float>::full(Shape{}, 1.0f)};
    d.samples.push_back(std::move(s));
  }
  return d;
}

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string indexed(const std::string& stem, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_%05zu", i);
  return stem + buf;
}

void write_tensor(const fs::path& path, const std::string& name, const Tensor<float>& t) {
  Checkpoint ck;
  ck.add_tensor(name, t);
  ck.save(path);
}

Tensor<float> read_tensor(const fs::path& path, const std::string& name) {
  const Checkpoint ck = Checkpoint::load(path);
  const auto* r = ck.find(name);
  require(r != nullptr && ck.records().size() == 1, ErrorCode::kFormat, "tensor file ",
          path.string(), " must hold exactly one record named '", name, "'");
  return record_to_tensor<float>(*r);
}

}  // namespace

void save_dataset(const Dataset& d, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::kIo, "cannot create dataset directory ", dir.string(), ": ",
          ec.message());
  json m;
  m["format"] = "nddr-dataset";
  m["version"] = 1;
  m["generator"] = d.generator;
  m["seed"] = d.seed;
  m["split"] = d.split;
  m["count"] = d.samples.size();
  m["hw"] = d.hw;
  m["channels"] = d.channels;
  m["tasks"] = json::array();
  for (const auto& t : d.tasks)
    m["tasks"].push_back({{"kind", task_kind_name(t.kind)}, {"classes", t.classes}});
  {
    std::ofstream out(dir / "manifest", std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::kIo, "cannot write ", (dir / "manifest").string());
    out << m.dump(2) << "\n";
  }
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const Sample& s = d.samples[i];
    write_tensor(dir / indexed("input", i), "input", s.input);
    for (std::size_t t = 0; t < d.tasks.size(); ++t) {
      write_tensor(dir / indexed(cat("task", t, "_label"), i), "label", s.labels[t]);
      write_tensor(dir / indexed(cat("task", t, "_mask"), i), "mask", s.masks[t]);
    }
  }
}

Dataset load_dataset(const fs::path& dir) {
  const fs::path mpath = dir / "manifest";
  std::ifstream in(mpath, std::ios::binary);
  require(in.good(), ErrorCode::kIo, "missing dataset manifest ", mpath.string());
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, "manifest ", mpath.string(), " is not valid JSON: ", e.what());
  }

  std::vector<std::string> problems;
  auto need = [&](const char* key, json::value_t type) {
    if (!m.contains(key)) {
      problems.push_back(cat("manifest field '", key, "' missing"));
      return false;
    }
    const auto actual = m[key].type();
    const bool numeric = type == json::value_t::number_unsigned &&
                         (actual == json::value_t::number_integer ||
                          actual == json::value_t::number_unsigned);
    if (actual != type && !numeric) {
      problems.push_back(cat("manifest field '", key, "' has type ", m[key].type_name()));
      return false;
    }
    return true;
  };
  const bool ok = need("generator", json::value_t::string) & need("seed", json::value_t::number_unsigned) &
                  need("split", json::value_t::string) & need("count", json::value_t::number_unsigned) &
                  need("hw", json::value_t::number_unsigned) &
                  need("channels", json::value_t::number_unsigned) &
                  need("tasks", json::value_t::array);
  if (!ok) {
    std::string msg = cat("inconsistent dataset ", dir.string(), ":");
    for (const auto& p : problems) msg += "\n  " + p;
    fail(ErrorCode::kFormat, msg);
  }

  Dataset d;
  d.generator = m["generator"].get<std::string>();
  d.seed = m["seed"].get<std::uint64_t>();
  d.split = m["split"].get<std::string>();
  d.hw = m["hw"].get<std::int64_t>();
  d.channels = m["channels"].get<std::int64_t>();
  const auto count = m["count"].get<std::size_t>();
  for (std::size_t t = 0; t < m["tasks"].size(); ++t) {
    const auto& jt = m["tasks"][t];
    if (!jt.contains("kind") || !jt["kind"].is_string() || !jt.contains("classes") ||
        !jt["classes"].is_number_integer()) {
      problems.push_back(cat("manifest tasks[", t, "] needs string 'kind' and integer 'classes'"));
      continue;
    }
    try {
      d.tasks.push_back({parse_task_kind(jt["kind"].get<std::string>()),
                         jt["classes"].get<std::int64_t>()});
    } catch (const Error& e) {
      problems.push_back(cat("manifest tasks[", t, "]: ", e.what()));
    }
  }

  // Label file sets actually present, by task index.
  std::set<std::size_t> present;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    const std::string name = entry.path().filename().string();
    std::size_t t = 0;
    int used = 0;
    if (std::sscanf(name.c_str(), "task%zu_label_%*5u%n", &t, &used) >= 1 &&
        used == static_cast<int>(name.size()))
      present.insert(t);
  }
  const std::size_t declared = m["tasks"].size();
  if (present.size() != declared || (!present.empty() && *present.rbegin() + 1 != present.size()))
    problems.push_back(cat("manifest declares ", declared, " tasks but ", present.size(),
                           " task label file sets are present"));

  std::vector<std::string> missing;
  auto check = [&](const fs::path& p) {
    if (!fs::exists(p)) missing.push_back(p.filename().string());
  };
  for (std::size_t i = 0; i < count; ++i) {
    check(dir / indexed("input", i));
    for (std::size_t t = 0; t < declared; ++t) {
      check(dir / indexed(cat("task", t, "_label"), i));
      check(dir / indexed(cat("task", t, "_mask"), i));
    }
  }
  constexpr std::size_t kListed = 20;
  for (std::size_t k = 0; k < missing.size() && k < kListed; ++k)
    problems.push_back(cat("missing tensor file ", missing[k]));
  if (missing.size() > kListed)
    problems.push_back(cat("... and ", missing.size() - kListed, " more missing files"));
  if (!problems.empty()) {
    std::string msg = cat("inconsistent dataset ", dir.string(), ":");
    for (const auto& p : problems) msg += "\n  " + p;
    fail(ErrorCode::kFormat, msg);
  }

  for (std::size_t i = 0; i < count; ++i) {
    Sample s;
    s.input = read_tensor(dir / indexed("input", i), "input");
    if (s.input.shape() != Shape{1, d.hw, d.hw, d.channels})
      problems.push_back(cat(indexed("input", i), ": shape ", s.input.shape().str(),
                             " disagrees with manifest hw=", d.hw, " channels=", d.channels));
    for (std::size_t t = 0; t < d.tasks.size(); ++t) {
      const std::string lname = indexed(cat("task", t, "_label"), i);
      s.labels.push_back(read_tensor(dir / lname, "label"));
      s.masks.push_back(read_tensor(dir / indexed(cat("task", t, "_mask"), i), "mask"));
      const Shape ls = s.labels.back().shape();
      const bool pixel = d.tasks[t].kind != TaskKind::kImageClass;
      const std::int64_t lc = d.tasks[t].kind == TaskKind::kPixelDirection ? 3 : 1;
      const Shape want = pixel ? Shape{1, d.hw, d.hw, lc} : Shape{};
      if (ls != want)
        problems.push_back(cat(lname, ": shape ", ls.str(), " disagrees with task ", t, " kind ",
                               task_kind_name(d.tasks[t].kind), " (expected ", want.str(), ")"));
    }
    d.samples.push_back(std::move(s));
  }
  if (!problems.empty()) {
    std::string msg = cat("inconsistent dataset ", dir.string(), ":");
    for (const auto& p : problems) msg += "\n  " + p;
    fail(ErrorCode::kFormat, msg);
  }
  return d;
}

namespace {

bool same_tensor(const Tensor<float>& a, const Tensor<float>& b) {
  if (a.shape() != b.shape()) return false;
  const auto x = a.data();
  const auto y = b.data();
  return std::memcmp(x.data(), y.data(), x.size() * sizeof(float)) == 0;
}

}  // namespace

bool datasets_identical(const Dataset& a, const Dataset& b) {
  if (a.generator != b.generator || a.seed != b.seed || a.split != b.split || a.hw != b.hw ||
      a.channels != b.channels || a.tasks != b.tasks || a.samples.size() != b.samples.size())
    return false;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const Sample& x = a.samples[i];
    const Sample& y = b.samples[i];
    if (!same_tensor(x.input, y.input) || x.labels.size() != y.labels.size()) return false;
    for (std::size_t t = 0; t < x.labels.size(); ++t)
      if (!same_tensor(x.labels[t], y.labels[t]) || !same_tensor(x.masks[t], y.masks[t]))
        return false;
  }
  return true;
}

}  // namespace nddr
