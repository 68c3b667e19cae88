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

#include "nddr/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nddr/error.hpp"
#include "nddr/layers.hpp"
#include "nddr/losses.hpp"
#include "nddr/metrics.hpp"
#include "nddr/ops.hpp"
#include "nddr/random.hpp"

namespace nddr {

void TrainConfig::validate() const {
  require(base_lr > 0, ErrorCode::kInvalidArgument, "base_lr must be > 0, got ", base_lr);
  require(nddr_lr_scale >= 1, ErrorCode::kInvalidArgument, "nddr_lr_scale must be >= 1, got ",
          nddr_lr_scale);
  require(weight_decay >= 0, ErrorCode::kInvalidArgument, "weight decay must be >= 0, got ",
          weight_decay);
  require(momentum >= 0 && momentum < 1, ErrorCode::kInvalidArgument,
          "momentum must be in [0,1), got ", momentum);
  require(steps >= 0, ErrorCode::kInvalidArgument, "steps must be >= 0, got ", steps);
  require(batch_size >= 1, ErrorCode::kInvalidArgument, "batch size must be >= 1, got ",
          batch_size);
  require(poly_power >= 0, ErrorCode::kInvalidArgument, "poly power must be >= 0");
}

TrainConfig TrainConfig::for_mode(NetMode mode) {
  TrainConfig cfg;
  if (mode != NetMode::kSingle) {
    cfg.base_lr = 1e-3;
    cfg.batch_size = 4;
  }
  return cfg;
}

template <typename T>
SgdOptimizer<T>::SgdOptimizer(const ParamRegistry<T>& registry) {
  for (const auto& e : registry.entries()) velocity_.emplace_back(e.tensor.numel(), T(0));
}

template <typename T>
void SgdOptimizer<T>::step(ParamRegistry<T>& registry, const TrainConfig& cfg, double lr) {
  auto& entries = registry.entries();
  require(entries.size() == velocity_.size(), ErrorCode::kState,
          "optimizer was built for a different registry");
  for (const auto& e : entries) {
    if (!e.trainable() || !e.tensor.has_grad()) continue;
    for (T v : e.tensor.grad())
      require(std::isfinite(v), ErrorCode::kNotFinite, "non-finite gradient in parameter '",
              e.name, "'");
  }
  const T momentum = static_cast<T>(cfg.momentum);
  const T decay2 = static_cast<T>(2.0 * cfg.weight_decay);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& e = entries[i];
    if (!e.trainable()) continue;
    const T rate = static_cast<T>(lr * e.lr_scale);
    auto w = e.tensor.data();
    auto& v = velocity_[i];
    const bool has = e.tensor.has_grad();
    const bool decay = e.decay && cfg.weight_decay > 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      T g = has ? e.tensor.grad()[k] : T(0);
      if (decay) g += decay2 * w[k];
      v[k] = momentum * v[k] + g;
      w[k] -= rate * v[k];
    }
  }
}

double learning_rate_at(const TrainConfig& cfg, std::int64_t step) {
  if (cfg.poly_power <= 0 || cfg.steps <= 0) return cfg.base_lr;
  const double frac = 1.0 - static_cast<double>(step) / static_cast<double>(cfg.steps);
  return cfg.base_lr * std::pow(std::max(frac, 0.0), cfg.poly_power);
}

template <typename T>
void check_compatible(const TaskGraph<T>& net, const Dataset& data) {
  for (int t : net.task_ids()) {
    require(t < static_cast<int>(data.tasks.size()), ErrorCode::kInvalidArgument,
            "network serves task ", t, " but the dataset has ", data.tasks.size(), " tasks");
    const HeadSpec& head = net.spec().heads[t];
    const TaskDescriptor& d = data.tasks[t];
    const bool pixel = d.kind != TaskKind::kImageClass;
    require(pixel == (head.kind == HeadKind::kPixel) && head.outputs == d.classes,
            ErrorCode::kShapeMismatch, "task ", t, " is ", task_kind_name(d.kind), " with ",
            d.classes, " outputs but the network head ",
            head.kind == HeadKind::kPixel ? "is per-pixel" : "is per-image", " with ",
            head.outputs);
  }
  require(net.spec().input_channels == data.channels, ErrorCode::kShapeMismatch,
          "network takes ", net.spec().input_channels, " input channels, dataset has ",
          data.channels);
}

template <typename T>
Tensor<T> task_loss(Graph<T>& g, const TaskDescriptor& desc, const Tensor<T>& output,
                    const Batch<T>& batch, int task) {
  if (desc.kind == TaskKind::kPixelDirection)
    return ops::normal_loss(g, output, batch.directions[task], batch.masks[task]);
  return ops::softmax_cross_entropy(g, output, std::span<const std::int32_t>(batch.classes[task]));
}

namespace {

double weight_of(const std::vector<double>& weights, std::size_t i) {
  return i < weights.size() ? weights[i] : 1.0;
}

// Number of sites contributing to a task loss.
template <typename T>
double valid_count(const TaskDescriptor& desc, const Batch<T>& b, int task) {
  if (desc.kind == TaskKind::kPixelDirection) {
    double n = 0;
    for (T m : b.masks[task].data()) n += m != T(0);
    return n;
  }
  double n = 0;
  for (std::int32_t y : b.classes[task]) n += y != kIgnoreLabel;
  return n;
}

struct TaskAccumulator {
  double loss_sum = 0;
  double count = 0;
  std::vector<std::int32_t> pred;
  std::vector<std::int32_t> gt;
  std::vector<double> npred;
  std::vector<double> ngt;
  std::vector<double> nmask;
  std::vector<double> probs;
};

}  // namespace

template <typename T>
EvalResult evaluate(TaskGraph<T>& net, const Dataset& data, std::int64_t batch_size,
                    const std::vector<double>& loss_weights) {
  check_compatible(net, data);
  require(batch_size >= 1, ErrorCode::kInvalidArgument, "eval batch size must be >= 1");
  const bool was_training = net.training();
  net.set_training(false);
  const auto& ids = net.task_ids();
  std::vector<TaskAccumulator> acc(ids.size());
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    std::vector<std::size_t> idx(std::min<std::size_t>(batch_size, data.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const Batch<T> b = make_batch<T>(data, idx);
    Graph<T> g;
    g.set_grad_enabled(false);
    const auto outs = net.forward(g, b.input);
    for (std::size_t o = 0; o < ids.size(); ++o) {
      const int t = ids[o];
      const TaskDescriptor& d = data.tasks[t];
      const double n = valid_count(d, b, t);
      const double loss = static_cast<double>(task_loss(g, d, outs[o], b, t).item());
      acc[o].loss_sum += loss * n;
      acc[o].count += n;
      const auto vals = outs[o].data();
      if (d.kind == TaskKind::kPixelDirection) {
        acc[o].npred.insert(acc[o].npred.end(), vals.begin(), vals.end());
        const auto gt = b.directions[t].data();
        acc[o].ngt.insert(acc[o].ngt.end(), gt.begin(), gt.end());
        const auto m = b.masks[t].data();
        acc[o].nmask.insert(acc[o].nmask.end(), m.begin(), m.end());
      } else {
        const auto pred = argmax_rows<T>(vals, d.classes);
        acc[o].pred.insert(acc[o].pred.end(), pred.begin(), pred.end());
        acc[o].gt.insert(acc[o].gt.end(), b.classes[t].begin(), b.classes[t].end());
        if (d.kind == TaskKind::kImageClass && d.classes > 2) {
          Graph<T> pg;
          pg.set_grad_enabled(false);
          const auto p = ops::softmax(pg, outs[o]).data();
          acc[o].probs.insert(acc[o].probs.end(), p.begin(), p.end());
        }
      }
    }
  }
  net.set_training(was_training);

  EvalResult r;
  r.report.split = data.split;
  r.report.mode = mode_name(net.mode());
  r.report.init = net.options().init.str();
  for (std::size_t o = 0; o < ids.size(); ++o) {
    const int t = ids[o];
    const TaskDescriptor& d = data.tasks[t];
    TaskMetrics& tm = r.report.task(cat("task", t));
    const double loss = acc[o].count > 0 ? acc[o].loss_sum / acc[o].count : 0.0;
    r.task_losses.push_back(loss);
    r.total_loss += weight_of(loss_weights, t) * loss;
    tm.set("loss", loss);
    if (d.kind == TaskKind::kPixelDirection) {
      const auto m = normal_metrics<double>(acc[o].npred, acc[o].ngt, acc[o].nmask);
      tm.set("mean_angle", m.mean_deg);
      tm.set("median_angle", m.median_deg);
      tm.set("within_11.25", m.within[0]);
      tm.set("within_22.5", m.within[1]);
      tm.set("within_30", m.within[2]);
    } else if (d.kind == TaskKind::kPixelClass) {
      const auto m = seg_metrics(acc[o].pred, acc[o].gt, d.classes);
      tm.set("miou", m.miou);
      tm.set("pacc", m.pacc);
    } else {
      tm.set("acc", acc[o].pred.empty() ? 0.0 : classification_accuracy(acc[o].pred, acc[o].gt));
      if (!acc[o].probs.empty()) {
        const auto ages = age_expectation(acc[o].probs, d.classes);
        std::vector<double> gt(acc[o].gt.begin(), acc[o].gt.end());
        const auto e = abs_error_stats(ages, gt);
        tm.set("mean_ae", e.mean);
        tm.set("median_ae", e.median);
      }
    }
  }
  return r;
}

template <typename T>
TrainResult train(TaskGraph<T>& net, const Dataset& train_data, const Dataset* eval_data,
                  const TrainConfig& cfg, const ReportSink& sink) {
  cfg.validate();
  check_compatible(net, train_data);
  if (eval_data != nullptr) check_compatible(net, *eval_data);
  require(train_data.size() > 0 || cfg.steps == 0, ErrorCode::kInvalidArgument,
          "training set is empty");
  net.registry().set_fusion_lr_scale(cfg.nddr_lr_scale);
  SgdOptimizer<T> opt(net.registry());
  TrainResult result;

  auto emit = [&](std::int64_t step) {
    auto record = [&](const Dataset& d) {
      EvalResult e = evaluate(net, d, 16, cfg.loss_weights);
      e.report.step = step;
      e.report.seed = cfg.seed;
      e.report.lr_scale = cfg.nddr_lr_scale;
      if (sink) sink(e.report);
      result.reports.push_back(std::move(e.report));
    };
    if (cfg.eval_train || eval_data == nullptr) record(train_data);
    if (eval_data != nullptr) record(*eval_data);
  };

  const std::size_t n = train_data.size();
  const std::size_t bs = std::min<std::size_t>(cfg.batch_size, std::max<std::size_t>(n, 1));
  std::vector<std::size_t> order(n);
  std::size_t cursor = n;  // forces a shuffle before the first batch
  std::uint64_t epoch = 0;
  const auto& ids = net.task_ids();

  for (std::int64_t step = 0; step < cfg.steps; ++step) {
    if (cursor + bs > n) {
      std::iota(order.begin(), order.end(), 0);
      Rng rng(mix_seed(cfg.seed, 0xe90c0000ULL + epoch++));
      std::shuffle(order.begin(), order.end(), rng.engine());
      cursor = 0;
    }
    const std::span<const std::size_t> idx(order.data() + cursor, bs);
    cursor += bs;
    const Batch<T> b = make_batch<T>(train_data, idx);

    net.set_training(true);
    if (cfg.freeze_fusion_norm)
      for (int s = 0; s < net.fusion_layer_count(); ++s)
        if (auto* layer = net.nddr_layer(s)) layer->set_norm_mode(NormMode::kEval);
    net.registry().zero_grad();
    Graph<T> g;
    const auto outs = net.forward(g, b.input);
    Tensor<T> total;
    std::vector<double> parts;
    for (std::size_t o = 0; o < ids.size(); ++o) {
      const int t = ids[o];
      Tensor<T> l = task_loss(g, train_data.tasks[t], outs[o], b, t);
      parts.push_back(static_cast<double>(l.item()));
      const double w = weight_of(cfg.loss_weights, t);
      if (w != 1.0) l = ops::scale(g, l, static_cast<T>(w));
      total = total.defined() ? ops::add(g, total, l) : l;
    }
    const double loss = static_cast<double>(total.item());
    if (!std::isfinite(loss)) {
      std::string detail;
      for (std::size_t o = 0; o < parts.size(); ++o)
        detail += cat(" task", ids[o], "=", parts[o]);
      fail(ErrorCode::kNotFinite, "training diverged at step ", step, ": loss ", loss, " (",
           detail.substr(1), ")");
    }
    g.backward(total);
    opt.step(net.registry(), cfg, learning_rate_at(cfg, step));
    result.step_losses.push_back(loss);
    if (cfg.eval_every > 0 && (step + 1) % cfg.eval_every == 0 && step + 1 < cfg.steps)
      emit(step + 1);
  }
  net.set_training(false);
  net.registry().zero_grad();
  emit(cfg.steps);
  return result;
}

template class SgdOptimizer<float>;
template class SgdOptimizer<double>;
template void check_compatible(const TaskGraph<float>&, const Dataset&);
template void check_compatible(const TaskGraph<double>&, const Dataset&);
template Tensor<float> task_loss(Graph<float>&, const TaskDescriptor&, const Tensor<float>&,
                                 const Batch<float>&, int);
template Tensor<double> task_loss(Graph<double>&, const TaskDescriptor&, const Tensor<double>&,
                                  const Batch<double>&, int);
template EvalResult evaluate(TaskGraph<float>&, const Dataset&, std::int64_t,
                             const std::vector<double>&);
template EvalResult evaluate(TaskGraph<double>&, const Dataset&, std::int64_t,
                             const std::vector<double>&);
template TrainResult train(TaskGraph<float>&, const Dataset&, const Dataset*, const TrainConfig&,
                           const ReportSink&);
template TrainResult train(TaskGraph<double>&, const Dataset&, const Dataset*, const TrainConfig&,
                           const ReportSink&);

}  // namespace nddr
