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

#include <string>
#include <utility>
#include <vector>

#include "nddr/report.hpp"
#include "nddr/run_config.hpp"

namespace nddr {

// One grid point: the train key it overrides and the value used.
struct AblationPoint {
  std::string key;
  std::string value;
};

// init: diag 1,0 / 0.9,0.1 / 0.5,0.5 / 0.1,0.9 / 0,1 and xavier.
// lr-scale: 1, 10, 100, 1000.
std::vector<AblationPoint> default_grid(const std::string& axis);
// Grid values separated by ';' (init values contain commas); lr-scale also
// accepts ','.
std::vector<AblationPoint> parse_grid(const std::string& axis, const std::string& text);

struct AblationRow {
  AblationPoint point;
  std::vector<std::pair<std::string, std::vector<double>>> columns;  // one sample per repeat
};

// Rows are grid points; every metric gets a mean and a (sample) std column.
// Direction metrics come first, then segmentation, then the rest.
std::string ablation_csv(const std::vector<AblationRow>& rows);

// Runs every (point, repeat) as an isolated training run under
// out/point<i>/rep<r>, using up to `workers` threads, then writes
// out/ablation.csv.
std::vector<AblationRow> run_ablation(const RunSpec& spec, const LineSink& out);

// Metric columns extracted from one finished run.
std::vector<std::pair<std::string, double>> ablation_columns(const TrainOutcome& outcome);

}  // namespace nddr
