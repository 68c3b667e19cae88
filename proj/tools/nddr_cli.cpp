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

// Command-line front end. Options are generated from the library's command
// tables, so the CLI and the config files accept the same keys.
//
// Exit codes: 0 success, 1 runtime or check failure, 2 usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nddr/nddr.h"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

const std::map<std::string, std::string> kAbout = {
    {"gen-data", "write a deterministic synthetic dataset"},
    {"train", "train a single, shared-trunk or fused network"},
    {"ablate", "sweep one training key over a grid of values"},
    {"gradcheck", "finite-difference gradient checks in f64"},
    {"count-params", "fusion parameter ledger for a backbone"},
    {"eval", "evaluate a checkpoint on a dataset"},
};

struct OptionSlot {
  std::string key;
  CLI::Option* option = nullptr;
  bool boolean = false;
};

struct Command {
  std::string name;
  CLI::App* app = nullptr;
  std::vector<OptionSlot> slots;
};

void print_line(const char* line, void*) {
  std::fputs(line, stdout);
  std::fputc('\n', stdout);
  std::fflush(stdout);
}

int report(nddr_status st) {
  std::fprintf(stderr, "error (%s): %s\n", nddr_status_name(st), nddr_last_error());
  return st == NDDR_ERR_INVALID_ARGUMENT ? kExitUsage : kExitFailure;
}

int execute(nddr_spec* spec) {
  int code = 0;
  const nddr_status st = nddr_run(spec, print_line, nullptr, &code);
  nddr_spec_destroy(spec);
  if (st != NDDR_OK) return report(st);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NDDR-CNN multi-task fusion toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", nddr_version());

  std::vector<Command> commands;
  std::map<std::string, std::string> config_paths;
  commands.reserve(nddr_command_count());
  for (size_t c = 0; c < nddr_command_count(); ++c) {
    Command cmd;
    cmd.name = nddr_command_name(c);
    const auto about = kAbout.find(cmd.name);
    cmd.app = app.add_subcommand(cmd.name, about == kAbout.end() ? "" : about->second);
    cmd.app->add_option("--config", config_paths[cmd.name], "key = value config file");
    size_t keys = 0;
    nddr_command_key_count(cmd.name.c_str(), &keys);
    for (size_t k = 0; k < keys; ++k) {
      const char *key = nullptr, *fallback = nullptr, *help = nullptr;
      nddr_command_key(cmd.name.c_str(), k, &key, &fallback, &help);
      OptionSlot slot;
      slot.key = key;
      slot.boolean = std::string(fallback) == "true" || std::string(fallback) == "false";
      std::string desc = help;
      if (std::string(fallback) == "<required>")
        desc += " (required)";
      else if (*fallback)
        desc += std::string(" [") + fallback + "]";
      slot.option = cmd.app->add_option("--" + slot.key)->description(desc);
      // A bare boolean flag means true.
      if (slot.boolean) slot.option->expected(0, 1);
      cmd.slots.push_back(slot);
    }
    commands.push_back(std::move(cmd));
  }
  std::string replay_path;
  CLI::App* replay = app.add_subcommand("replay", "rerun a command from its run.json echo");
  replay->add_option("run_json", replay_path, "run.json written by an earlier run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (replay->parsed()) {
    std::ifstream in(replay_path, std::ios::binary);
    if (!in) {
      std::fprintf(stderr, "error: cannot read %s\n", replay_path.c_str());
      return kExitFailure;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    nddr_spec* spec = nullptr;
    const nddr_status st = nddr_spec_from_json(ss.str().c_str(), &spec);
    if (st != NDDR_OK) return report(st);
    return execute(spec);
  }

  for (const Command& cmd : commands) {
    if (!cmd.app->parsed()) continue;
    nddr_spec* spec = nullptr;
    nddr_status st = nddr_spec_create(cmd.name.c_str(), &spec);
    if (st != NDDR_OK) return report(st);
    const std::string& cfg = config_paths[cmd.name];
    if (!cfg.empty() && (st = nddr_spec_load_config(spec, cfg.c_str())) != NDDR_OK) {
      nddr_spec_destroy(spec);
      return report(st);
    }
    // Only options given on the command line override the config file.
    for (const OptionSlot& slot : cmd.slots) {
      if (slot.option->count() == 0) continue;
      const auto& res = slot.option->results();
      std::string value = res.empty() ? "" : res.back();
      if (slot.boolean && value.empty()) value = "true";
      nddr_spec_set(spec, slot.key.c_str(), value.c_str());
    }
    return execute(spec);
  }
  return kExitUsage;
}
