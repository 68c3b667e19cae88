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

#include "nddr/net.hpp"

#include <cmath>
#include <map>

#include "nddr/error.hpp"
#include "nddr/ops.hpp"
#include "nddr/random.hpp"

namespace nddr {

const char* mode_name(NetMode mode) {
  switch (mode) {
    case NetMode::kSingle: return "single";
    case NetMode::kSharedTrunk: return "shared";
    case NetMode::kNddr: return "nddr";
    case NetMode::kCrossStitch: return "cross-stitch";
    case NetMode::kSluice: return "sluice";
  }
  return "?";
}

NetMode parse_mode(std::string_view text) {
  for (NetMode m : {NetMode::kSingle, NetMode::kSharedTrunk, NetMode::kNddr,
                    NetMode::kCrossStitch, NetMode::kSluice})
    if (text == mode_name(m)) return m;
  fail(ErrorCode::kInvalidArgument, "unknown mode '", text,
       "', expected single|shared|nddr|cross-stitch|sluice");
}

BackboneSpec BackboneSpec::toy_vgg(std::vector<HeadSpec> heads, std::int64_t input_channels) {
  BackboneSpec spec;
  spec.input_channels = input_channels;
  spec.heads = std::move(heads);
  const PoolSpec down{2, 2, 0};
  const PoolSpec keep{3, 1, 1};
  spec.stages = {{2, 8, true, down}, {2, 16, true, down}, {2, 32, true, keep}, {2, 64, true, keep}};
  return spec;
}

std::vector<std::int64_t> BackboneSpec::stage_channels() const {
  std::vector<std::int64_t> out;
  for (const auto& s : stages) out.push_back(s.channels);
  return out;
}

std::int64_t BackboneSpec::reduction() const {
  std::int64_t r = 1;
  for (const auto& s : stages)
    if (s.pool) r *= s.pool_spec.stride;
  return r;
}

template <typename T>
void ParamRegistry<T>::add(ParamEntry<T> entry) {
  require(find(entry.name) == nullptr, ErrorCode::kInvalidArgument, "duplicate parameter name '",
          entry.name, "'");
  entries_.push_back(std::move(entry));
}

template <typename T>
const ParamEntry<T>* ParamRegistry<T>::find(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return &e;
  return nullptr;
}

template <typename T>
std::int64_t ParamRegistry<T>::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& e : entries_)
    if (e.trainable()) n += e.tensor.numel();
  return n;
}

template <typename T>
void ParamRegistry<T>::set_fusion_lr_scale(double scale) {
  for (auto& e : entries_)
    if (e.fusion) e.lr_scale = scale;
}

template <typename T>
void ParamRegistry<T>::zero_grad() {
  for (auto& e : entries_)
    if (e.trainable()) e.tensor.clear_grad();
}

namespace {

template <typename T>
Tensor<T> he_normal(Shape shape, std::int64_t fan_in, std::uint64_t seed) {
  Tensor<T> t(shape, true);
  Rng rng(seed);
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (T& v : t.data()) v = static_cast<T>(rng.normal(0.0, stddev));
  return t;
}

std::string prefix_for(NetMode mode, int branch) {
  if (mode == NetMode::kSingle) return "";
  if (mode == NetMode::kSharedTrunk) return "trunk/";
  return cat("task", branch, "/");
}

}  // namespace

template <typename T>
TaskGraph<T>::TaskGraph(const BackboneSpec& spec, const BuildOptions& options)
    : spec_(spec), options_(options) {
  const NetMode mode = options.mode;
  const int k = options.tasks;
  require(k >= 1, ErrorCode::kInvalidArgument, "task count must be >= 1, got ", k);
  require(!is_fusion_mode(mode) || k >= 2, ErrorCode::kInvalidArgument, "mode '",
          mode_name(mode), "' fuses tasks and needs K >= 2, got ", k);
  require(!options.shortcut || is_fusion_mode(mode), ErrorCode::kInvalidArgument,
          "shortcut aggregation is only defined for fusion modes, not '", mode_name(mode), "'");
  require(static_cast<int>(spec.heads.size()) == k, ErrorCode::kInvalidArgument, "spec has ",
          spec.heads.size(), " heads for ", k, " tasks");
  require(!spec.stages.empty(), ErrorCode::kInvalidArgument, "backbone needs at least one stage");
  require(mode != NetMode::kSingle || (options.task >= 0 && options.task < k),
          ErrorCode::kInvalidArgument, "single-mode task index ", options.task,
          " outside [0,", k, ")");

  const std::uint64_t seed = options.seed;
  const int branches = (mode == NetMode::kSingle || mode == NetMode::kSharedTrunk) ? 1 : k;
  if (mode == NetMode::kSingle) {
    task_ids_ = {options.task};
  } else {
    for (int i = 0; i < k; ++i) task_ids_.push_back(i);
  }

  auto add_param = [&](std::string name, Tensor<T> t, ParamRole role, bool fusion, int branch,
                       std::string local) {
    ParamEntry<T> e;
    e.name = std::move(name);
    e.tensor = std::move(t);
    e.role = role;
    e.fusion = fusion;
    e.decay = role == ParamRole::kWeight;
    e.branch = branch;
    e.local_name = std::move(local);
    registry_.add(std::move(e));
  };

  // Backbone branches.
  branches_.resize(branches);
  for (int b = 0; b < branches; ++b) {
    const std::string prefix = prefix_for(mode, b);
    std::int64_t cin = spec.input_channels;
    for (std::size_t s = 0; s < spec.stages.size(); ++s) {
      const StageSpec& st = spec.stages[s];
      require(st.convs >= 1 && st.channels >= 1, ErrorCode::kInvalidArgument, "stage ", s + 1,
              " needs convs >= 1 and channels >= 1");
      std::vector<Conv2dParams<T>> convs;
      for (int c = 0; c < st.convs; ++c) {
        const std::string local = cat("stage", s + 1, "/conv", c + 1, "/");
        const std::int64_t fan_in = spec.kernel * spec.kernel * cin;
        Conv2dParams<T> p;
        p.weight = he_normal<T>(Shape{st.channels, spec.kernel, spec.kernel, cin}, fan_in,
                                mix_seed(seed, hash_name(prefix + local + "weight")));
        p.bias = Tensor<T>(Shape{1, 1, 1, st.channels}, true);
        p.stride = 1;
        p.padding = spec.kernel / 2;
        add_param(prefix + local + "weight", p.weight, ParamRole::kWeight, false, b,
                  local + "weight");
        add_param(prefix + local + "bias", p.bias, ParamRole::kBias, false, b, local + "bias");
        convs.push_back(p);
        cin = st.channels;
      }
      branches_[b].push_back(std::move(convs));
    }
  }

  // Fusion layers at every stage end.
  if (is_fusion_mode(mode)) {
    for (std::size_t s = 0; s < spec.stages.size(); ++s) {
      InitPolicy init = options.init;
      init.seed = mix_seed(seed, 1000 + s);
      const std::int64_t c = spec.stages[s].channels;
      if (mode == NetMode::kNddr) {
        NddrLayer<T> layer(k, c, init, options.nddr);
        layer.set_norm_identity();
        fusions_.emplace_back(std::move(layer));
      } else if (mode == NetMode::kCrossStitch) {
        fusions_.emplace_back(CrossStitchLayer<T>(k, init));
      } else {
        require(c % options.sluice_subspaces == 0, ErrorCode::kInvalidArgument, "stage ", s + 1,
                " width ", c, " not divisible by ", options.sluice_subspaces, " subspaces");
        fusions_.emplace_back(SluiceLayer<T>(k, options.sluice_subspaces, init));
      }
      register_fusion(s, fusions_.back());
    }
  }

  // Shortcut aggregation, one per task.
  std::int64_t head_in = spec.stages.back().channels;
  if (options.shortcut) {
    const std::int64_t cr =
        options.shortcut_channels > 0 ? options.shortcut_channels : spec.stages.back().channels;
    for (int i = 0; i < k; ++i) {
      InitPolicy init = options.init;
      init.seed = mix_seed(seed, 2000 + i);
      shortcuts_.emplace_back(spec.stage_channels(), cr, init, options.shortcut_resize);
      const std::string prefix = cat("shortcut", i, "/");
      add_param(prefix + "weight", shortcuts_.back().weight(), ParamRole::kWeight, false, -1, "");
      add_param(prefix + "bias", shortcuts_.back().bias(), ParamRole::kBias, false, -1, "");
    }
    head_in = cr;
  }

  // Heads.
  for (int out = 0; out < static_cast<int>(task_ids_.size()); ++out) {
    const int task = task_ids_[out];
    const HeadSpec& hs = spec.heads[task];
    require(hs.outputs >= 1, ErrorCode::kInvalidArgument, "head ", task, " needs >= 1 output");
    const std::string prefix = mode == NetMode::kSingle ? "" : cat("task", task, "/");
    Head head;
    head.kind = hs.kind;
    head.weight = he_normal<T>(Shape{hs.outputs, 1, 1, head_in}, head_in,
                               mix_seed(seed, hash_name(prefix + "head/weight")));
    head.bias = Tensor<T>(Shape{1, 1, 1, hs.outputs}, true);
    const int branch = mode == NetMode::kSingle ? 0 : task;
    add_param(prefix + "head/weight", head.weight, ParamRole::kWeight, false, branch,
              "head/weight");
    add_param(prefix + "head/bias", head.bias, ParamRole::kBias, false, branch, "head/bias");
    heads_.push_back(std::move(head));
  }
}

template <typename T>
void TaskGraph<T>::register_fusion(std::size_t stage, FusionLayer& layer) {
  const std::string prefix = cat("fusion", stage + 1, "/");
  auto add = [&](std::string name, Tensor<T> t, ParamRole role) {
    ParamEntry<T> e;
    e.name = prefix + name;
    e.tensor = std::move(t);
    e.role = role;
    e.fusion = true;
    e.decay = role == ParamRole::kWeight;
    registry_.add(std::move(e));
  };
  if (auto* nddr = std::get_if<NddrLayer<T>>(&layer)) {
    for (int i = 0; i < nddr->tasks(); ++i) {
      add(cat("task", i, "/weight"), nddr->weight(i), ParamRole::kWeight);
      if (nddr->bias(i).defined()) add(cat("task", i, "/bias"), nddr->bias(i), ParamRole::kBias);
    }
    auto& norms = nddr->norms();
    for (std::size_t j = 0; j < norms.size(); ++j) {
      const std::string bn = norms.size() == 1 ? "bn/" : cat("bn", j, "/");
      if (norms[j].affine) {
        add(bn + "gamma", norms[j].gamma, ParamRole::kNormScale);
        add(bn + "beta", norms[j].beta, ParamRole::kNormShift);
      }
      add(bn + "running_mean", norms[j].running_mean, ParamRole::kBuffer);
      add(bn + "running_var", norms[j].running_var, ParamRole::kBuffer);
    }
  } else if (auto* cs = std::get_if<CrossStitchLayer<T>>(&layer)) {
    add("mixing", cs->mixing(), ParamRole::kMixing);
  } else if (auto* sl = std::get_if<SluiceLayer<T>>(&layer)) {
    add("mixing", sl->mixing(), ParamRole::kMixing);
  }
}

template <typename T>
Tensor<T> TaskGraph<T>::run_stage(Graph<T>& g, int branch, std::size_t stage, const Tensor<T>& x) {
  Tensor<T> h = x;
  for (const auto& conv : branches_[branch][stage]) h = ops::relu(g, ops::conv2d(g, h, conv));
  const StageSpec& st = spec_.stages[stage];
  if (st.pool) h = ops::max_pool(g, h, st.pool_spec);
  return h;
}

template <typename T>
Tensor<T> TaskGraph<T>::run_head(Graph<T>& g, int out, const Tensor<T>& feat, std::int64_t h,
                                 std::int64_t w) {
  Head& head = heads_[out];
  if (head.kind == HeadKind::kVector)
    return ops::fully_connected(g, ops::global_avg_pool(g, feat), head.weight, head.bias);
  Tensor<T> logits = ops::conv1x1(g, feat, head.weight, head.bias);
  if (logits.shape().h != h || logits.shape().w != w) logits = ops::resize(g, logits, h, w);
  return logits;
}

template <typename T>
std::vector<Tensor<T>> TaskGraph<T>::forward(Graph<T>& g, const Tensor<T>& x) {
  require(x.shape().c == spec_.input_channels, ErrorCode::kShapeMismatch, "network expects ",
          spec_.input_channels, " input channels, got ", x.shape().str());
  const int branches = static_cast<int>(branches_.size());
  std::vector<Tensor<T>> feats(branches, x);
  std::vector<std::vector<Tensor<T>>> levels(branches);
  for (std::size_t s = 0; s < spec_.stages.size(); ++s) {
    for (int b = 0; b < branches; ++b) feats[b] = run_stage(g, b, s, feats[b]);
    if (!fusions_.empty()) {
      feats = std::visit([&](auto& layer) { return layer.forward(g, feats); }, fusions_[s]);
      if (options_.shortcut)
        for (int b = 0; b < branches; ++b) levels[b].push_back(feats[b]);
    }
  }
  const std::int64_t h = x.shape().h;
  const std::int64_t w = x.shape().w;
  std::vector<Tensor<T>> outputs;
  for (int out = 0; out < static_cast<int>(heads_.size()); ++out) {
    const int b = branches == 1 ? 0 : task_ids_[out];
    Tensor<T> feat = feats[b];
    if (options_.shortcut)
      feat = shortcuts_[b].forward(g, levels[b], feat.shape().h, feat.shape().w);
    outputs.push_back(run_head(g, out, feat, h, w));
  }
  return outputs;
}

template <typename T>
void TaskGraph<T>::set_training(bool training) {
  training_ = training;
  for (auto& f : fusions_)
    if (auto* nddr = std::get_if<NddrLayer<T>>(&f))
      nddr->set_norm_mode(training ? NormMode::kTrain : NormMode::kEval);
}

template <typename T>
void TaskGraph<T>::set_fusion_norm_identity() {
  for (auto& f : fusions_)
    if (auto* nddr = std::get_if<NddrLayer<T>>(&f)) nddr->set_norm_identity();
  training_ = false;
}

template <typename T>
NddrLayer<T>* TaskGraph<T>::nddr_layer(int stage) {
  if (stage < 0 || stage >= static_cast<int>(fusions_.size())) return nullptr;
  return std::get_if<NddrLayer<T>>(&fusions_[stage]);
}

template <typename T>
Checkpoint TaskGraph<T>::to_checkpoint() const {
  Checkpoint ck;
  for (const auto& e : registry_.entries()) ck.add_tensor(e.name, e.tensor);
  return ck;
}

namespace {

template <typename T>
void copy_record(const CheckpointRecord& r, Tensor<T>& dst) {
  const auto values = r.values<T>();
  std::copy(values.begin(), values.end(), dst.data().begin());
}

bool is_meta(std::string_view name) { return name.substr(0, 5) == "meta/"; }

[[noreturn]] void report(const std::vector<std::string>& problems) {
  std::string msg = cat(problems.size(), " checkpoint mismatch(es):");
  for (const auto& p : problems) msg += "\n  " + p;
  fail(ErrorCode::kShapeMismatch, msg);
}

}  // namespace

template <typename T>
void TaskGraph<T>::load_checkpoint(const Checkpoint& ck) {
  std::vector<std::string> problems;
  std::vector<std::pair<const CheckpointRecord*, ParamEntry<T>*>> plan;
  for (auto& e : registry_.entries()) {
    const auto* r = ck.find(e.name);
    if (r == nullptr) {
      problems.push_back(cat("missing '", e.name, "'"));
    } else if (r->shape() != e.tensor.shape() || r->dims.size() > 4) {
      problems.push_back(cat("shape of '", e.name, "': checkpoint ", r->shape().str(), ", graph ",
                             e.tensor.shape().str()));
    } else {
      plan.emplace_back(r, &e);
    }
  }
  for (const auto& r : ck.records())
    if (!is_meta(r.name) && registry_.find(r.name) == nullptr)
      problems.push_back(cat("unexpected '", r.name, "'"));
  if (!problems.empty()) report(problems);
  for (auto& [r, e] : plan) copy_record(*r, e->tensor);
}

template <typename T>
void TaskGraph<T>::load_pretrained(std::span<const Checkpoint> per_task) {
  const int needed = options_.mode == NetMode::kSingle ? 1 : options_.tasks;
  require(static_cast<int>(per_task.size()) == needed, ErrorCode::kInvalidArgument, "mode '",
          mode_name(options_.mode), "' needs ", needed, " single-task checkpoints, got ",
          per_task.size());
  std::vector<std::string> problems;
  std::vector<std::pair<const CheckpointRecord*, ParamEntry<T>*>> plan;
  std::vector<std::map<std::string, bool>> used(per_task.size());
  for (auto& e : registry_.entries()) {
    if (e.branch < 0) continue;
    const auto& ck = per_task[e.branch];
    const auto* r = ck.find(e.local_name);
    if (r == nullptr) {
      problems.push_back(cat("checkpoint ", e.branch, ": missing '", e.local_name, "' for '",
                             e.name, "'"));
      continue;
    }
    used[e.branch][e.local_name] = true;
    if (r->shape() != e.tensor.shape()) {
      problems.push_back(cat("checkpoint ", e.branch, ": shape of '", e.local_name, "' is ",
                             r->shape().str(), ", '", e.name, "' needs ",
                             e.tensor.shape().str()));
      continue;
    }
    plan.emplace_back(r, &e);
  }
  // Shared-trunk graphs take only the trunk from checkpoint 0, so extra head
  // records there are expected.
  for (std::size_t i = 0; i < per_task.size(); ++i)
    for (const auto& r : per_task[i].records()) {
      if (is_meta(r.name) || used[i].count(r.name)) continue;
      if (options_.mode == NetMode::kSharedTrunk && r.name.substr(0, 5) == "head/") continue;
      if (options_.mode == NetMode::kSharedTrunk && i > 0) continue;
      problems.push_back(cat("checkpoint ", i, ": unmatched '", r.name, "'"));
    }
  if (!problems.empty()) report(problems);
  for (auto& [r, e] : plan) copy_record(*r, e->tensor);
}

std::int64_t closed_form_parameter_count(const BackboneSpec& spec, const BuildOptions& options) {
  const NetMode mode = options.mode;
  const int k = options.tasks;
  std::int64_t backbone = 0;
  std::int64_t cin = spec.input_channels;
  for (const auto& st : spec.stages)
    for (int c = 0; c < st.convs; ++c) {
      backbone += spec.kernel * spec.kernel * cin * st.channels + st.channels;
      cin = st.channels;
    }
  const std::int64_t last = spec.stages.back().channels;
  const std::int64_t cr =
      options.shortcut ? (options.shortcut_channels > 0 ? options.shortcut_channels : last) : last;
  auto head = [&](int task) {
    const auto& h = spec.heads[task];
    return h.outputs * cr + h.outputs;
  };
  if (mode == NetMode::kSingle) return backbone + head(options.task);
  std::int64_t heads = 0;
  for (int i = 0; i < k; ++i) heads += head(i);
  if (mode == NetMode::kSharedTrunk) return backbone + heads;

  std::int64_t fusion = 0;
  std::int64_t sum_c = 0;
  for (const auto& st : spec.stages) {
    const std::int64_t c = st.channels;
    sum_c += c;
    if (mode == NetMode::kNddr) {
      fusion += k * (k * c * c + (options.nddr.bias ? c : 0));
      if (options.nddr.affine && options.nddr.norm != NddrNorm::kNone) fusion += 2 * k * c;
    } else if (mode == NetMode::kCrossStitch) {
      fusion += k * k;
    } else {
      const std::int64_t rows = k * options.sluice_subspaces;
      fusion += rows * rows;
    }
  }
  const std::int64_t shortcut = options.shortcut ? k * (cr * sum_c + cr) : 0;
  return k * backbone + heads + fusion + shortcut;
}

template class ParamRegistry<float>;
template class ParamRegistry<double>;
template class TaskGraph<float>;
template class TaskGraph<double>;

}  // namespace nddr
