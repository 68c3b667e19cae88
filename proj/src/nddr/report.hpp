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
#include <string>
#include <utility>
#include <vector>

namespace nddr {

struct TaskMetrics {
  std::string task;                                   // "task0", "task1", ...
  std::vector<std::pair<std::string, double>> values;  // insertion order is kept

  void set(const std::string& name, double value);
  const double* get(const std::string& name) const;
};

struct MetricsReport {
  std::int64_t step = 0;
  std::uint64_t seed = 0;
  std::string split = "eval";
  std::string mode;
  std::string init;
  double lr_scale = 1.0;
  std::vector<TaskMetrics> tasks;

  TaskMetrics& task(const std::string& name);
  const TaskMetrics* find(const std::string& name) const;
  double value(const std::string& task_name, const std::string& metric) const;

  // One JSON object on one line; doubles print with round-trip precision.
  std::string to_json_line() const;
  static MetricsReport from_json_line(const std::string& line);
};

// Appends one line per report.
void append_metrics_log(const std::filesystem::path& path, const MetricsReport& report);

std::vector<MetricsReport> read_metrics_log(const std::filesystem::path& path);

// Columns: step,task,metric,value. Rows follow report order.
std::string summary_csv(const std::vector<MetricsReport>& reports);
void write_text(const std::filesystem::path& path, const std::string& text);

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace nddr
