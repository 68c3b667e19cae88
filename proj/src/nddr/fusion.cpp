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

#include "nddr/fusion.hpp"

#include <cmath>
#include <sstream>

#include "nddr/error.hpp"
#include "nddr/ops.hpp"
#include "nddr/random.hpp"

namespace nddr {

InitPolicy InitPolicy::parse(std::string_view text) {
  if (text == "xavier") return xavier(0);
  constexpr std::string_view prefix = "diag:";
  if (text.substr(0, prefix.size()) == prefix) {
    const std::string body(text.substr(prefix.size()));
    const auto comma = body.find(',');
    if (comma != std::string::npos) {
      try {
        std::size_t used_a = 0, used_b = 0;
        const std::string a_str = body.substr(0, comma);
        const std::string b_str = body.substr(comma + 1);
        const double a = std::stod(a_str, &used_a);
        const double b = std::stod(b_str, &used_b);
        if (used_a == a_str.size() && used_b == b_str.size()) return diagonal(a, b);
      } catch (const std::exception&) {
      }
    }
  }
  fail(ErrorCode::kInvalidArgument, "invalid init policy '", text,
       "', expected diag:ALPHA,BETA or xavier");
}

std::string InitPolicy::str() const {
  if (kind == Kind::kXavier) return "xavier";
  std::ostringstream os;
  os << "diag:" << alpha << "," << beta;
  return os.str();
}

template <typename T>
std::vector<Tensor<T>> diagonal_init(int tasks, std::int64_t channels, double alpha,
                                     double beta) {
  const std::int64_t in = tasks * channels;
  std::vector<Tensor<T>> out;
  for (int i = 0; i < tasks; ++i) {
    Tensor<T> w(Shape{channels, 1, 1, in}, true);
    for (std::int64_t c = 0; c < channels; ++c)
      for (int j = 0; j < tasks; ++j)
        w.ptr()[c * in + j * channels + c] = static_cast<T>(j == i ? alpha : beta);
    out.push_back(std::move(w));
  }
  return out;
}

template <typename T>
std::vector<Tensor<T>> xavier_init(int tasks, std::int64_t channels, std::uint64_t seed) {
  const std::int64_t in = tasks * channels;
  const double limit = std::sqrt(6.0 / static_cast<double>(in + channels));
  Rng rng(seed);
  std::vector<Tensor<T>> out;
  for (int i = 0; i < tasks; ++i) {
    Tensor<T> w(Shape{channels, 1, 1, in}, true);
    for (T& v : w.data()) v = static_cast<T>(rng.uniform(-limit, limit));
    out.push_back(std::move(w));
  }
  return out;
}

template <typename T>
NddrLayer<T>::NddrLayer(int tasks, std::int64_t channels, const InitPolicy& init,
                        NddrOptions options)
    : tasks_(tasks), channels_(channels), options_(options) {
  require(tasks >= 1 && channels >= 1, ErrorCode::kInvalidArgument,
          "NDDR layer needs tasks >= 1 and channels >= 1");
  weights_ = init.kind == InitPolicy::Kind::kDiagonal
                 ? diagonal_init<T>(tasks, channels, init.alpha, init.beta)
                 : xavier_init<T>(tasks, channels, init.seed);
  for (int i = 0; i < tasks; ++i)
    biases_.push_back(options.bias ? Tensor<T>(Shape{1, 1, 1, channels}, true) : Tensor<T>());
  if (options.norm == NddrNorm::kShared) {
    norms_.push_back(BatchNormState<T>::create(tasks * channels, options.affine));
  } else if (options.norm == NddrNorm::kPerTask) {
    for (int i = 0; i < tasks; ++i)
      norms_.push_back(BatchNormState<T>::create(channels, options.affine));
  }
}

template <typename T>
std::vector<Tensor<T>> NddrLayer<T>::forward(Graph<T>& g,
                                             const std::vector<Tensor<T>>& features) {
  require(static_cast<int>(features.size()) == tasks_, ErrorCode::kShapeMismatch,
          "nddr_forward: expected ", tasks_, " task features, got ", features.size());
  for (std::size_t j = 0; j < features.size(); ++j)
    require(features[j].shape().c == channels_, ErrorCode::kShapeMismatch,
            "nddr_forward: task ", j, " features have ", features[j].shape().c,
            " channels, layer expects ", channels_);
  Tensor<T> fused;
  if (options_.norm == NddrNorm::kPerTask) {
    std::vector<Tensor<T>> normed;
    for (int j = 0; j < tasks_; ++j) normed.push_back(ops::batch_norm(g, features[j], norms_[j]));
    fused = ops::concat_channels(g, normed);
  } else {
    fused = ops::concat_channels(g, features);
    if (options_.norm == NddrNorm::kShared) fused = ops::batch_norm(g, fused, norms_[0]);
  }
  std::vector<Tensor<T>> out;
  out.reserve(tasks_);
  for (int i = 0; i < tasks_; ++i) out.push_back(ops::conv1x1(g, fused, weights_[i], biases_[i]));
  return out;
}

template <typename T>
std::vector<T> NddrLayer<T>::projection_matrix(int task) const {
  const std::int64_t in = tasks_ * channels_;
  std::vector<T> m(static_cast<std::size_t>(in * channels_));
  const T* w = weights_[task].ptr();
  for (std::int64_t c = 0; c < channels_; ++c)
    for (std::int64_t r = 0; r < in; ++r) m[r * channels_ + c] = w[c * in + r];
  return m;
}

template <typename T>
void NddrLayer<T>::set_norm_mode(NormMode mode) {
  for (auto& n : norms_) n.mode = mode;
}

template <typename T>
void NddrLayer<T>::set_norm_identity() {
  for (auto& n : norms_) n.set_identity();
}

namespace {

template <typename T>
Tensor<T> mixing_from_policy(int rows, int subspaces, const InitPolicy& init) {
  const int tasks = rows / subspaces;
  Tensor<T> m(Shape{1, 1, rows, rows}, true);
  if (init.kind == InitPolicy::Kind::kXavier) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + subspaces));
    Rng rng(init.seed);
    for (T& v : m.data()) v = static_cast<T>(rng.uniform(-limit, limit));
    return m;
  }
  for (int i = 0; i < tasks; ++i)
    for (int s = 0; s < subspaces; ++s)
      for (int j = 0; j < tasks; ++j)
        m.ptr()[(i * subspaces + s) * rows + j * subspaces + s] =
            static_cast<T>(i == j ? init.alpha : init.beta);
  return m;
}

template <typename T>
Tensor<T> mixing_from_values(int rows, std::vector<T> values) {
  require(static_cast<int>(values.size()) == rows * rows, ErrorCode::kShapeMismatch,
          "mixing matrix needs ", rows * rows, " entries, got ", values.size());
  return Tensor<T>(Shape{1, 1, rows, rows}, std::move(values), true);
}

// NDDR weights reproducing a subspace mixing: filter (s*B + b) of task i reads
// input channel (j*C + t*B + b) with weight M[(i,s),(j,t)].
template <typename T>
NddrLayer<T> constrained_nddr(int tasks, int subspaces, std::int64_t channels,
                              const Tensor<T>& mixing) {
  require(channels % subspaces == 0, ErrorCode::kInvalidArgument, "channels ", channels,
          " not divisible by ", subspaces, " subspaces");
  NddrLayer<T> layer(tasks, channels, InitPolicy::diagonal(0, 0),
                     NddrOptions{NddrNorm::kNone, false, false});
  const std::int64_t block = channels / subspaces;
  const std::int64_t in = tasks * channels;
  const int rows = tasks * subspaces;
  for (int i = 0; i < tasks; ++i) {
    T* w = layer.weight(i).ptr();
    for (int s = 0; s < subspaces; ++s)
      for (std::int64_t b = 0; b < block; ++b)
        for (int j = 0; j < tasks; ++j)
          for (int t = 0; t < subspaces; ++t)
            w[(s * block + b) * in + j * channels + t * block + b] =
                mixing.ptr()[(i * subspaces + s) * rows + j * subspaces + t];
  }
  return layer;
}

}  // namespace

template <typename T>
CrossStitchLayer<T>::CrossStitchLayer(int tasks, const InitPolicy& init)
    : tasks_(tasks), mixing_(mixing_from_policy<T>(tasks, 1, init)) {}

template <typename T>
CrossStitchLayer<T>::CrossStitchLayer(int tasks, std::vector<T> matrix)
    : tasks_(tasks), mixing_(mixing_from_values<T>(tasks, std::move(matrix))) {}

template <typename T>
std::vector<Tensor<T>> CrossStitchLayer<T>::forward(Graph<T>& g,
                                                    const std::vector<Tensor<T>>& features) {
  std::vector<Tensor<T>> out;
  for (int i = 0; i < tasks_; ++i) out.push_back(ops::subspace_mix(g, features, mixing_, i, 1));
  return out;
}

template <typename T>
NddrLayer<T> CrossStitchLayer<T>::as_nddr(std::int64_t channels) const {
  return constrained_nddr(tasks_, 1, channels, mixing_);
}

template <typename T>
SluiceLayer<T>::SluiceLayer(int tasks, int subspaces, const InitPolicy& init)
    : tasks_(tasks),
      subspaces_(subspaces),
      mixing_(mixing_from_policy<T>(tasks * subspaces, subspaces, init)) {
  require(subspaces >= 1, ErrorCode::kInvalidArgument, "sluice needs >= 1 subspace");
}

template <typename T>
SluiceLayer<T>::SluiceLayer(int tasks, int subspaces, std::vector<T> matrix)
    : tasks_(tasks),
      subspaces_(subspaces),
      mixing_(mixing_from_values<T>(tasks * subspaces, std::move(matrix))) {
  require(subspaces >= 1, ErrorCode::kInvalidArgument, "sluice needs >= 1 subspace");
}

template <typename T>
std::vector<Tensor<T>> SluiceLayer<T>::forward(Graph<T>& g,
                                               const std::vector<Tensor<T>>& features) {
  std::vector<Tensor<T>> out;
  for (int i = 0; i < tasks_; ++i)
    out.push_back(ops::subspace_mix(g, features, mixing_, i, subspaces_));
  return out;
}

template <typename T>
NddrLayer<T> SluiceLayer<T>::as_nddr(std::int64_t channels) const {
  return constrained_nddr(tasks_, subspaces_, channels, mixing_);
}

template <typename T>
ShortcutAggregator<T>::ShortcutAggregator(std::vector<std::int64_t> level_channels,
                                          std::int64_t out_channels, const InitPolicy& init,
                                          ResizeMode resize)
    : level_channels_(std::move(level_channels)), resize_(resize) {
  require(!level_channels_.empty(), ErrorCode::kInvalidArgument,
          "shortcut aggregation needs at least one level");
  std::int64_t in = 0;
  for (auto c : level_channels_) in += c;
  weight_ = Tensor<T>(Shape{out_channels, 1, 1, in}, true);
  bias_ = Tensor<T>(Shape{1, 1, 1, out_channels}, true);
  const std::int64_t last = level_channels_.back();
  if (init.kind == InitPolicy::Kind::kDiagonal && last == out_channels) {
    // Start as a passthrough of the deepest level.
    for (std::int64_t c = 0; c < out_channels; ++c) weight_.ptr()[c * in + (in - last) + c] = T(1);
  } else {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out_channels));
    Rng rng(mix_seed(init.seed, 0x5c));
    for (T& v : weight_.data()) v = static_cast<T>(rng.uniform(-limit, limit));
  }
}

template <typename T>
Tensor<T> ShortcutAggregator<T>::forward(Graph<T>& g, const std::vector<Tensor<T>>& levels,
                                         std::int64_t target_h, std::int64_t target_w) {
  require(!levels.empty(), ErrorCode::kInvalidArgument, "shortcut_aggregate: empty level list");
  require(levels.size() == level_channels_.size(), ErrorCode::kShapeMismatch,
          "shortcut_aggregate: expected ", level_channels_.size(), " levels, got ", levels.size());
  std::vector<Tensor<T>> resized;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const Shape& s = levels[l].shape();
    require(s.c == level_channels_[l], ErrorCode::kShapeMismatch, "shortcut_aggregate: level ",
            l, " has ", s.c, " channels, expected ", level_channels_[l]);
    if (s.h == target_h && s.w == target_w)
      resized.push_back(levels[l]);
    else
      resized.push_back(ops::resize(g, levels[l], target_h, target_w, resize_));
  }
  const Tensor<T> cat = ops::concat_channels(g, resized);
  return ops::conv1x1(g, cat, weight_, bias_);
}

FusionParamCount count_fusion_params(int tasks, std::span<const std::int64_t> stage_channels,
                                     bool with_bias) {
  FusionParamCount count;
  for (std::int64_t c : stage_channels) count.per_task += tasks * c * c + (with_bias ? c : 0);
  count.total = tasks * count.per_task;
  return count;
}

namespace ops {

template <typename T>
Tensor<T> subspace_mix(Graph<T>& g, const std::vector<Tensor<T>>& features,
                       const Tensor<T>& mixing, int task, int subspaces) {
  const int tasks = static_cast<int>(features.size());
  require(tasks >= 1, ErrorCode::kInvalidArgument, "subspace_mix: empty feature list");
  const Shape& s = features[0].shape();
  for (int j = 1; j < tasks; ++j)
    require(features[j].shape() == s, ErrorCode::kShapeMismatch, "subspace_mix: task ", j,
            " features ", features[j].shape().str(), " differ from task 0 ", s.str());
  require(s.c % subspaces == 0, ErrorCode::kInvalidArgument, "subspace_mix: ", s.c,
          " channels not divisible by ", subspaces, " subspaces");
  const int rows = tasks * subspaces;
  require(mixing.shape() == Shape{1, 1, rows, rows}, ErrorCode::kShapeMismatch,
          "subspace_mix: mixing must be (1,1,", rows, ",", rows, "), got ", mixing.shape().str());
  require(task >= 0 && task < tasks, ErrorCode::kInvalidArgument, "subspace_mix: task ", task,
          " out of range");
  const std::int64_t c = s.c;
  const std::int64_t block = c / subspaces;
  const std::int64_t sites = s.sites();
  const T* m = mixing.ptr();
  Tensor<T> out(s);
  T* o = out.ptr();
  for (int j = 0; j < tasks; ++j) {
    const T* f = features[j].ptr();
    for (int si = 0; si < subspaces; ++si)
      for (int t = 0; t < subspaces; ++t) {
        const T coef = m[(task * subspaces + si) * rows + j * subspaces + t];
        for (std::int64_t p = 0; p < sites; ++p)
          for (std::int64_t b = 0; b < block; ++b)
            o[p * c + si * block + b] += coef * f[p * c + t * block + b];
      }
  }
  g.check_output("subspace_mix", out);
  std::vector<Tensor<T>> inputs = features;
  inputs.push_back(mixing);
  if (g.wants_grad(inputs)) {
    g.record("subspace_mix", inputs, out,
             [fs = features, mx = mixing, out, task, subspaces, rows, c, block,
              sites]() mutable {
               const T* go = out.grad().data();
               const T* m = mx.ptr();
               const int tasks = static_cast<int>(fs.size());
               for (int j = 0; j < tasks; ++j) {
                 const T* f = fs[j].ptr();
                 T* gf = fs[j].requires_grad() ? fs[j].grad_buffer().data() : nullptr;
                 T* gm = mx.requires_grad() ? mx.grad_buffer().data() : nullptr;
                 for (int si = 0; si < subspaces; ++si)
                   for (int t = 0; t < subspaces; ++t) {
                     const std::int64_t mi = (task * subspaces + si) * rows + j * subspaces + t;
                     const T coef = m[mi];
                     T acc = 0;
                     for (std::int64_t p = 0; p < sites; ++p)
                       for (std::int64_t b = 0; b < block; ++b) {
                         const T d = go[p * c + si * block + b];
                         if (gf) gf[p * c + t * block + b] += coef * d;
                         acc += d * f[p * c + t * block + b];
                       }
                     if (gm) gm[mi] += acc;
                   }
               }
             });
  }
  return out;
}

template Tensor<float> subspace_mix(Graph<float>&, const std::vector<Tensor<float>>&,
                                    const Tensor<float>&, int, int);
template Tensor<double> subspace_mix(Graph<double>&, const std::vector<Tensor<double>>&,
                                     const Tensor<double>&, int, int);

}  // namespace ops

template std::vector<Tensor<float>> diagonal_init(int, std::int64_t, double, double);
template std::vector<Tensor<double>> diagonal_init(int, std::int64_t, double, double);
template std::vector<Tensor<float>> xavier_init(int, std::int64_t, std::uint64_t);
template std::vector<Tensor<double>> xavier_init(int, std::int64_t, std::uint64_t);
template class NddrLayer<float>;
template class NddrLayer<double>;
template class CrossStitchLayer<float>;
template class CrossStitchLayer<double>;
template class SluiceLayer<float>;
template class SluiceLayer<double>;
template class ShortcutAggregator<float>;
template class ShortcutAggregator<double>;

}  // namespace nddr
