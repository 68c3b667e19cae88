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

#include "nddr/report.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nddr/error.hpp"

namespace nddr {

using json = nlohmann::json;

void TaskMetrics::set(const std::string& name, double value) {
  for (auto& [k, v] : values)
    if (k == name) {
      v = value;
      return;
    }
  values.emplace_back(name, value);
}

const double* TaskMetrics::get(const std::string& name) const {
  for (const auto& [k, v] : values)
    if (k == name) return &v;
  return nullptr;
}

TaskMetrics& MetricsReport::task(const std::string& name) {
  for (auto& t : tasks)
    if (t.task == name) return t;
  tasks.push_back({name, {}});
  return tasks.back();
}

const TaskMetrics* MetricsReport::find(const std::string& name) const {
  for (const auto& t : tasks)
    if (t.task == name) return &t;
  return nullptr;
}

double MetricsReport::value(const std::string& task_name, const std::string& metric) const {
  const TaskMetrics* t = find(task_name);
  const double* v = t != nullptr ? t->get(metric) : nullptr;
  require(v != nullptr, ErrorCode::kInvalidArgument, "report has no metric ", task_name, "/",
          metric);
  return *v;
}

std::string MetricsReport::to_json_line() const {
  // ordered_json keeps the key order stable across runs.
  nlohmann::ordered_json j;
  j["step"] = step;
  j["seed"] = seed;
  j["split"] = split;
  j["mode"] = mode;
  j["init"] = init;
  j["lr_scale"] = lr_scale;
  auto& jt = j["tasks"];
  jt = nlohmann::ordered_json::object();
  for (const auto& t : tasks) {
    nlohmann::ordered_json m = nlohmann::ordered_json::object();
    for (const auto& [k, v] : t.values) m[k] = v;
    jt[t.task] = m;
  }
  return j.dump();
}

MetricsReport MetricsReport::from_json_line(const std::string& line) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(line);
    MetricsReport r;
    r.step = j.at("step").get<std::int64_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.split = j.at("split").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.init = j.at("init").get<std::string>();
    r.lr_scale = j.at("lr_scale").get<double>();
    for (const auto& [name, m] : j.at("tasks").items()) {
      TaskMetrics& t = r.task(name);
      for (const auto& [k, v] : m.items()) t.set(k, v.get<double>());
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, "bad metrics line: ", e.what());
  }
}

void append_metrics_log(const std::filesystem::path& path, const MetricsReport& report) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  require(out.good(), ErrorCode::kIo, "cannot append to ", path.string());
  out << report.to_json_line() << "\n";
}

std::vector<MetricsReport> read_metrics_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kIo, "cannot read ", path.string());
  std::vector<MetricsReport> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(MetricsReport::from_json_line(line));
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string summary_csv(const std::vector<MetricsReport>& reports) {
  std::string out = "step,task,metric,value\n";
  for (const auto& r : reports)
    for (const auto& t : r.tasks)
      for (const auto& [k, v] : t.values)
        out += cat(r.step, ",", t.task, ",", k, ",", format_double(v), "\n");
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::kIo, "cannot write ", path.string());
  out << text;
  require(out.good(), ErrorCode::kIo, "write failed for ", path.string());
}

}  // namespace nddr
