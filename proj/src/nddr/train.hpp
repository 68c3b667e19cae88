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
#include <functional>
#include <string>
#include <vector>

#include "nddr/data.hpp"
#include "nddr/fusion.hpp"
#include "nddr/net.hpp"
#include "nddr/report.hpp"

namespace nddr {

// Defaults are the single-task overfit setting; for_mode() gives the
// settings used when fine-tuning after a warm start.
struct TrainConfig {
  double base_lr = 0.05;
  double nddr_lr_scale = 100.0;
  double weight_decay = 5e-4;
  double momentum = 0.9;
  std::int64_t steps = 2000;
  std::int64_t batch_size = 16;
  std::uint64_t seed = 0;
  std::vector<double> loss_weights;  // empty means 1 for every task
  InitPolicy init = InitPolicy::diagonal(0.9, 0.1);
  std::vector<std::string> pretrain;
  double poly_power = 0.9;  // 0 keeps the learning rate constant
  std::int64_t eval_every = 0;  // 0 evaluates only before returning
  bool eval_train = false;      // also evaluate on the training split
  // Keep fusion batch norms on their running statistics while training.
  bool freeze_fusion_norm = false;

  void validate() const;
  // Defaults for a mode: single-task training, or fine-tuning a fused or
  // shared-trunk graph (base_lr 1e-3, batch 4).
  static TrainConfig for_mode(NetMode mode);
};

// Momentum SGD with l2 decay folded into the gradient:
//   v <- momentum * v + grad + 2 * lambda * w   (lambda only on decayed entries)
//   w <- w - base_lr * lr_scale * v
template <typename T>
class SgdOptimizer {
 public:
  explicit SgdOptimizer(const ParamRegistry<T>& registry);

  // Missing gradients count as zero. A non-finite gradient throws and names
  // the parameter; nothing is updated in that case.
  void step(ParamRegistry<T>& registry, const TrainConfig& cfg, double lr);

 private:
  std::vector<std::vector<T>> velocity_;
};

double learning_rate_at(const TrainConfig& cfg, std::int64_t step);

// Checks that the graph's heads fit the dataset's task descriptors.
template <typename T>
void check_compatible(const TaskGraph<T>& net, const Dataset& data);

// Loss of one network output against the batch labels of a dataset task.
template <typename T>
Tensor<T> task_loss(Graph<T>& g, const TaskDescriptor& desc, const Tensor<T>& output,
                    const Batch<T>& batch, int task);

struct EvalResult {
  MetricsReport report;
  std::vector<double> task_losses;  // one per network output
  double total_loss = 0;            // loss-weighted sum
};

// Eval-mode pass over the whole dataset in order; the graph's training flag
// is restored afterwards.
template <typename T>
EvalResult evaluate(TaskGraph<T>& net, const Dataset& data, std::int64_t batch_size = 16,
                    const std::vector<double>& loss_weights = {});

struct TrainResult {
  std::vector<MetricsReport> reports;
  std::vector<double> step_losses;
};

using ReportSink = std::function<void(const MetricsReport&)>;

template <typename T>
TrainResult train(TaskGraph<T>& net, const Dataset& train_data, const Dataset* eval_data,
                  const TrainConfig& cfg, const ReportSink& sink = {});

}  // namespace nddr
