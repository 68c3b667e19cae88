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

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "nddr/ablate.hpp"
#include "nddr/error.hpp"
#include "nddr/run_config.hpp"

using namespace nddr;
using nddr::testing::scratch_dir;

TEST_CASE("config text parsing") {
  const auto kv = parse_config_text("# comment\nmode = shared  # trailing\n\n steps=10\n");
  CHECK(kv.at("mode") == "shared");
  CHECK(kv.at("steps") == "10");
  CHECK_THROWS_AS(parse_config_text("no equals sign"), Error);
}

TEST_CASE("flags beat the config file which beats defaults") {
  const auto spec = RunSpec::resolve("train", {{"steps", "5"}, {"data", "d"}, {"out", "o"}},
                                     {{"steps", "7"}, {"wd", "0.01"}});
  CHECK(spec.get_int("steps") == 5);
  CHECK(spec.get_double("wd") == 0.01);
  CHECK(spec.get("init") == "diag:0.9,0.1");
  CHECK(spec.get_double("nddr-lr-scale") == 100);
  CHECK(spec.get("mode") == "nddr");
}

TEST_CASE("auto defaults follow the mode") {
  const auto single = RunSpec::resolve("train", {{"mode", "single"}, {"data", "d"}, {"out", "o"}});
  CHECK(single.get_double("base-lr") == 0.05);
  CHECK(single.get_int("batch-size") == 16);
  const auto fused = RunSpec::resolve("train", {{"data", "d"}, {"out", "o"}});
  CHECK(fused.get_double("base-lr") == 1e-3);
  CHECK(fused.get_int("batch-size") == 4);
}

TEST_CASE("missing and unknown keys are usage errors") {
  try {
    RunSpec::resolve("train", {{"data", "d"}});
    FAIL("expected missing --out");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
    CHECK(std::string(e.what()).find("--out") != std::string::npos);
  }
  CHECK_THROWS_AS(RunSpec::resolve("train", {{"data", "d"}, {"out", "o"}, {"bogus", "1"}}), Error);
  CHECK_THROWS_AS(RunSpec::resolve("nope", {}), Error);
  const auto s = RunSpec::resolve("train", {{"data", "d"}, {"out", "o"}, {"steps", "x"}});
  CHECK_THROWS_AS(s.get_int("steps"), Error);
  CHECK_THROWS_AS(s.get_bool("mode"), Error);
}

TEST_CASE("echo reproduces the resolved spec") {
  const auto spec = RunSpec::resolve("train", {{"mode", "sluice"}, {"data", "d"}, {"out", "o"}});
  const auto back = RunSpec::from_json(spec.to_json());
  CHECK(back.command() == "train");
  CHECK(back.values() == spec.values());
  CHECK(back.to_json() == spec.to_json());
  CHECK(spec.get_int("sluice-subspaces") == 2);
}

TEST_CASE("every command table resolves with its required keys") {
  for (const auto& c : command_names()) {
    std::map<std::string, std::string> flags;
    for (const auto& k : command_keys(c))
      if (k.fallback == kRequired) flags[k.key] = k.key == "axis" ? "init" : "x";
    CHECK_NOTHROW(RunSpec::resolve(c, flags));
  }
}

TEST_CASE("train rejects single mode with shortcut") {
  const auto dir = scratch_dir("single_shortcut");
  CHECK(run_command(RunSpec::resolve("gen-data", {{"n", "2"}, {"hw", "16"}, {"out", (dir / "d").string()}}),
                    {}) == 0);
  const auto spec = RunSpec::resolve("train", {{"mode", "single"},
                                               {"shortcut", "true"},
                                               {"steps", "0"},
                                               {"data", (dir / "d").string()},
                                               {"out", (dir / "o").string()}});
  CHECK_THROWS_AS(run_command(spec, {}), Error);
}

TEST_CASE("ablation grids") {
  const auto init = default_grid("init");
  REQUIRE(init.size() == 6);
  CHECK(init[0].value == "diag:1,0");
  CHECK(init[5].value == "xavier");
  const auto lr = default_grid("lr-scale");
  REQUIRE(lr.size() == 4);
  CHECK(lr[0].key == "nddr-lr-scale");
  CHECK(lr[3].value == "1000");
  CHECK_THROWS_AS(default_grid("depth"), Error);
  const auto p = parse_grid("init", "diag:0.8,0.2; xavier");
  REQUIRE(p.size() == 2);
  CHECK(p[0].value == "diag:0.8,0.2");
  CHECK(parse_grid("lr-scale", "1,10").size() == 2);
  CHECK_THROWS_AS(parse_grid("lr-scale", "ten"), Error);
}

TEST_CASE("ablation csv has mean and std per metric") {
  AblationRow row;
  row.point = {"init", "diag:1,0"};
  row.columns = {{"task1/mean_angle", {10, 20, 30}}, {"task0/pacc", {0.5, 0.5, 0.5}}};
  const std::string csv = ablation_csv({row});
  CHECK(csv.rfind("key,value,repeats,task1/mean_angle_mean,task1/mean_angle_std,task0/pacc_mean,task0/pacc_std\n", 0) == 0);
  CHECK(csv.find("init,\"diag:1,0\",3,20,10,0.5,0\n") != std::string::npos);
}

TEST_CASE("ablation columns put direction metrics first") {
  TrainOutcome o;
  o.final_eval.task("task0").set("loss", 1);
  o.final_eval.task("task0").set("pacc", 0.9);
  o.final_eval.task("task1").set("loss", 2);
  o.final_eval.task("task1").set("within_30", 0.8);
  o.has_train = true;
  o.final_train.task("task0").set("loss", 0.25);
  o.final_train.task("task1").set("loss", 0.5);
  const auto cols = ablation_columns(o);
  REQUIRE(cols.size() == 5);
  CHECK(cols[0].first == "task1/within_30");
  CHECK(cols[1].first == "task0/pacc");
  CHECK(cols.back().first == "train_loss");
  CHECK(cols.back().second == 0.75);
}
