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
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nddr/checkpoint.hpp"
#include "nddr/net.hpp"
#include "nddr/report.hpp"
#include "nddr/train.hpp"

namespace nddr {

struct KeySpec {
  std::string key;
  std::string fallback;  // "" for optional; kRequired when it must be given
  std::string help;
};

inline constexpr std::string_view kRequired = "<required>";
inline constexpr std::string_view kAuto = "auto";

const std::vector<std::string>& command_names();
// Keys accepted by a command, in echo order.
const std::vector<KeySpec>& command_keys(const std::string& command);

// "key = value" lines; '#' starts a comment; blank lines are skipped.
std::map<std::string, std::string> parse_config_text(std::string_view text);
std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path);

// A command with every key resolved (flags, then config file, then defaults).
class RunSpec {
 public:
  static RunSpec resolve(const std::string& command,
                         const std::map<std::string, std::string>& flags,
                         const std::map<std::string, std::string>& file = {});

  const std::string& command() const { return command_; }
  const std::vector<std::pair<std::string, std::string>>& values() const { return values_; }

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;  // comma separated
  void set(const std::string& key, const std::string& value);

  std::string to_json() const;
  static RunSpec from_json(std::string_view text);

 private:
  std::string command_;
  std::vector<std::pair<std::string, std::string>> values_;
};

using LineSink = std::function<void(const std::string&)>;

// Runs a resolved command. Returns the exit status (0 ok, 1 check failure);
// errors are thrown as nddr::Error.
int run_command(const RunSpec& spec, const LineSink& out);

// Network description stored next to the weights so eval can rebuild it.
void write_net_meta(Checkpoint& ck, const TaskGraph<float>& net);
TaskGraph<float> net_from_checkpoint(const Checkpoint& ck);

BackboneSpec backbone_for(const Dataset& data);
BuildOptions build_options_from(const RunSpec& spec, int tasks);
TrainConfig train_config_from(const RunSpec& spec);

struct TrainOutcome {
  std::vector<MetricsReport> reports;
  MetricsReport final_eval;   // last record on the eval split, or train if none
  MetricsReport final_train;  // last record on the train split (when evaluated)
  bool has_train = false;
};

// The full train command: build, optional warm start, train, and write
// run.json, metrics.jsonl, summary.csv and model.ckpt into out.
TrainOutcome run_training(const RunSpec& spec, const LineSink& out);

}  // namespace nddr
