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

#include "nddr/ablate.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <thread>

#include "nddr/error.hpp"
#include "nddr/fusion.hpp"

namespace nddr {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

const char* axis_key(const std::string& axis) {
  if (axis == "init") return "init";
  if (axis == "lr-scale") return "nddr-lr-scale";
  fail(ErrorCode::kInvalidArgument, "--axis expects init|lr-scale, got '", axis, "'");
}

// 0 direction, 1 segmentation, 2 everything else.
int column_group(const std::string& metric) {
  if (metric.find("angle") != std::string::npos || metric.find("within_") != std::string::npos)
    return 0;
  if (metric == "miou" || metric == "pacc") return 1;
  return 2;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? NAN : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

std::vector<AblationPoint> default_grid(const std::string& axis) {
  const std::string key = axis_key(axis);
  if (axis == "init")
    return {{key, "diag:1,0"},   {key, "diag:0.9,0.1"}, {key, "diag:0.5,0.5"},
            {key, "diag:0.1,0.9"}, {key, "diag:0,1"},     {key, "xavier"}};
  return {{key, "1"}, {key, "10"}, {key, "100"}, {key, "1000"}};
}

std::vector<AblationPoint> parse_grid(const std::string& axis, const std::string& text) {
  const std::string key = axis_key(axis);
  std::string body = text;
  if (axis == "lr-scale" && body.find(';') == std::string::npos)
    for (char& c : body)
      if (c == ',') c = ';';
  std::vector<AblationPoint> out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    if (axis == "init") {
      InitPolicy::parse(item);  // validates
    } else {
      double v = 0;
      try {
        std::size_t used = 0;
        v = std::stod(item, &used);
        require(used == item.size(), ErrorCode::kInvalidArgument, "");
      } catch (const std::exception&) {
        fail(ErrorCode::kInvalidArgument, "lr-scale grid value '", item, "' is not a number");
      }
      require(v > 0, ErrorCode::kInvalidArgument, "lr-scale grid values must be > 0, got ", item);
    }
    out.push_back({key, item});
  }
  require(!out.empty(), ErrorCode::kInvalidArgument, "--grid is empty");
  return out;
}

std::vector<std::pair<std::string, double>> ablation_columns(const TrainOutcome& outcome) {
  std::vector<std::pair<std::string, double>> cols;
  for (int group = 0; group < 3; ++group)
    for (const auto& t : outcome.final_eval.tasks)
      for (const auto& [k, v] : t.values)
        if (column_group(k) == group) cols.emplace_back(t.task + "/" + k, v);
  if (outcome.has_train) {
    double loss = 0;
    for (const auto& t : outcome.final_train.tasks)
      if (const double* l = t.get("loss")) loss += *l;
    cols.emplace_back("train_loss", loss);
  }
  return cols;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "key,value,repeats";
  if (!rows.empty())
    for (const auto& [name, samples] : rows.front().columns)
      out += "," + name + "_mean," + name + "_std";
  out += "\n";
  for (const auto& row : rows) {
    std::string value = row.point.value;
    if (value.find(',') != std::string::npos) value = "\"" + value + "\"";
    const std::size_t reps = row.columns.empty() ? 0 : row.columns.front().second.size();
    out += row.point.key + "," + value + "," + std::to_string(reps);
    for (const auto& [name, samples] : row.columns)
      out += "," + format_double(mean_of(samples)) + "," + format_double(std_of(samples));
    out += "\n";
  }
  return out;
}

std::vector<AblationRow> run_ablation(const RunSpec& spec, const LineSink& out) {
  const std::string axis = spec.get("axis");
  const auto grid = spec.get("grid").empty() ? default_grid(axis) : parse_grid(axis, spec.get("grid"));
  const std::int64_t repeats = spec.get_int("repeats");
  const std::int64_t workers = spec.get_int("workers");
  require(repeats >= 1, ErrorCode::kInvalidArgument, "--repeats must be >= 1");
  require(workers >= 1, ErrorCode::kInvalidArgument, "--workers must be >= 1");
  const fs::path root = spec.get("out");
  const std::int64_t base_seed = spec.get_int("seed");

  // Per-run train specs; validated up front so a bad grid fails before any work.
  struct Job {
    std::size_t point;
    std::int64_t rep;
    RunSpec run;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < grid.size(); ++p)
    for (std::int64_t r = 0; r < repeats; ++r) {
      std::map<std::string, std::string> flags;
      for (const auto& [k, v] : spec.values())
        if (k != "axis" && k != "grid" && k != "repeats" && k != "workers") flags[k] = v;
      flags[grid[p].key] = grid[p].value;
      flags["seed"] = std::to_string(base_seed + r);
      flags["out"] = (root / cat("point", p) / cat("rep", r)).string();
      RunSpec run = RunSpec::resolve("train", flags);
      train_config_from(run);
      jobs.push_back({p, r, std::move(run)});
    }

  fs::create_directories(root);
  write_text(root / "run.json", spec.to_json());

  std::vector<TrainOutcome> outcomes(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const Job& job = jobs[j];
      const std::string tag =
          cat("[", grid[job.point].key, "=", grid[job.point].value, " rep ", job.rep, "] ");
      try {
        outcomes[j] = run_training(job.run, [&](const std::string& line) {
          std::lock_guard<std::mutex> lock(io);
          if (out) out(tag + line);
        });
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const auto n = static_cast<std::size_t>(std::min<std::int64_t>(workers, jobs.size()));
  for (std::size_t i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<AblationRow> rows(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) rows[p].point = grid[p];
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    AblationRow& row = rows[jobs[j].point];
    const auto cols = ablation_columns(outcomes[j]);
    if (row.columns.empty())
      for (const auto& [name, v] : cols) row.columns.push_back({name, {}});
    for (std::size_t c = 0; c < cols.size() && c < row.columns.size(); ++c)
      row.columns[c].second.push_back(cols[c].second);
  }
  write_text(root / "ablation.csv", ablation_csv(rows));
  return rows;
}

}  // namespace nddr
