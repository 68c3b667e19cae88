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

#include "nddr/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nddr/error.hpp"
#include "nddr/fusion.hpp"
#include "nddr/layers.hpp"
#include "nddr/losses.hpp"
#include "nddr/ops.hpp"
#include "nddr/random.hpp"

namespace nddr {

template <typename T>
double finite_difference_check(const LossFn<T>& f, std::vector<Tensor<T>> inputs, double eps) {
  for (auto& x : inputs) {
    x.set_requires_grad(true);
    x.clear_grad();
  }
  std::vector<std::vector<T>> analytic;
  {
    Graph<T> g;
    const Tensor<T> loss = f(g);
    if (!std::isfinite(static_cast<double>(loss.item()))) return INFINITY;
    g.backward(loss);
    for (auto& x : inputs) {
      if (x.has_grad())
        analytic.emplace_back(x.grad().begin(), x.grad().end());
      else
        analytic.emplace_back(x.numel(), T(0));
    }
  }
  auto eval = [&]() {
    Graph<T> g;
    g.set_grad_enabled(false);
    return static_cast<double>(f(g).item());
  };
  double worst = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto data = inputs[i].data();
    for (std::size_t k = 0; k < data.size(); ++k) {
      const T saved = data[k];
      data[k] = static_cast<T>(saved + eps);
      const double up = eval();
      data[k] = static_cast<T>(saved - eps);
      const double down = eval();
      data[k] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) return INFINITY;
      const double numeric = (up - down) / (2 * eps);
      const double a = static_cast<double>(analytic[i][k]);
      worst = std::max(worst, std::abs(a - numeric) / std::max(1.0, std::abs(a)));
    }
  }
  for (auto& x : inputs) x.clear_grad();
  return worst;
}

template <typename T>
double finite_difference_check(const std::function<Tensor<T>(Graph<T>&, const Tensor<T>&)>& f,
                               Tensor<T> x, double eps) {
  return finite_difference_check<T>([&](Graph<T>& g) { return f(g, x); },
                                    std::vector<Tensor<T>>{x}, eps);
}

template double finite_difference_check(const LossFn<float>&, std::vector<Tensor<float>>, double);
template double finite_difference_check(const LossFn<double>&, std::vector<Tensor<double>>,
                                        double);
template double finite_difference_check(
    const std::function<Tensor<float>(Graph<float>&, const Tensor<float>&)>&, Tensor<float>,
    double);
template double finite_difference_check(
    const std::function<Tensor<double>(Graph<double>&, const Tensor<double>&)>&, Tensor<double>,
    double);

namespace {

using D = double;
using TD = Tensor<D>;

// Values in [-2, 2] at least 1e-3 away from zero.
TD random_tensor(Shape s, Rng& rng) {
  TD t(s);
  for (D& v : t.data()) {
    const D mag = rng.uniform(0.05, 2.0);
    v = rng.integer(0, 1) == 0 ? mag : -mag;
  }
  return t;
}

// Pairwise distinct values spread over [-2, 2], so max-pool windows have a
// unique winner with a wide margin.
TD distinct_tensor(Shape s, Rng& rng) {
  TD t(s);
  const std::int64_t n = s.numel();
  std::vector<std::int64_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  for (std::int64_t i = 0; i < n; ++i)
    t.ptr()[i] = -2.0 + 4.0 * (static_cast<D>(perm[i]) + 0.5) / static_cast<D>(n);
  return t;
}

// sum(R * y) for a fixed random R, turning any op into a scalar loss.
TD project(Graph<D>& g, const TD& y, const TD& r) { return ops::sum(g, ops::mul(g, y, r)); }

struct Config {
  std::string shape;
  std::vector<TD> inputs;
  LossFn<D> loss;
};

using Maker = std::function<Config(Rng&)>;

std::int64_t pick(Rng& rng, std::int64_t lo, std::int64_t hi) { return rng.integer(lo, hi); }

Config make_conv2d(Rng& rng) {
  const std::int64_t n = pick(rng, 1, 2), cin = pick(rng, 1, 3), f = pick(rng, 1, 3);
  const std::int64_t k = pick(rng, 1, 3);
  const int stride = static_cast<int>(pick(rng, 1, 2));
  const int pad = static_cast<int>(pick(rng, 0, k - 1));
  const std::int64_t h = pick(rng, k, 5), w = pick(rng, k, 5);
  TD x = random_tensor({n, h, w, cin}, rng);
  TD wt = random_tensor({f, k, k, cin}, rng);
  TD b = random_tensor({1, 1, 1, f}, rng);
  const std::int64_t oh = conv_out_size(h, k, stride, pad), ow = conv_out_size(w, k, stride, pad);
  TD r = random_tensor({n, oh, ow, f}, rng);
  Config c{cat("x", Shape{n, h, w, cin}.str(), " k", k, " s", stride, " p", pad), {x, wt, b}, {}};
  c.loss = [=](Graph<D>& g) {
    return project(g, ops::conv2d(g, x, Conv2dParams<D>{wt, b, stride, pad}), r);
  };
  return c;
}

Config make_conv1x1(Rng& rng) {
  const std::int64_t n = pick(rng, 1, 3), h = pick(rng, 1, 4), w = pick(rng, 1, 4);
  const std::int64_t cin = pick(rng, 1, 5), cout = pick(rng, 1, 5);
  TD x = random_tensor({n, h, w, cin}, rng);
  TD wt = random_tensor({cout, 1, 1, cin}, rng);
  TD b = random_tensor({1, 1, 1, cout}, rng);
  TD r = random_tensor({n, h, w, cout}, rng);
  Config c{x.shape().str(), {x, wt, b}, {}};
  c.loss = [=](Graph<D>& g) { return project(g, ops::conv1x1(g, x, wt, b), r); };
  return c;
}

Config make_batch_norm(Rng& rng) {
  const std::int64_t n = pick(rng, 2, 4), h = pick(rng, 1, 3), w = pick(rng, 1, 3);
  const std::int64_t ch = pick(rng, 1, 3);
  TD x = random_tensor({n, h, w, ch}, rng);
  TD gamma = random_tensor({1, 1, 1, ch}, rng);
  TD beta = random_tensor({1, 1, 1, ch}, rng);
  TD r = random_tensor(x.shape(), rng);
  Config c{x.shape().str() + " train", {x, gamma, beta}, {}};
  c.loss = [=](Graph<D>& g) {
    BatchNormState<D> s = BatchNormState<D>::create(ch);
    s.gamma = gamma;
    s.beta = beta;
    s.mode = NormMode::kTrain;
    return project(g, ops::batch_norm(g, x, s), r);
  };
  return c;
}

Config make_max_pool(Rng& rng) {
  const int window = static_cast<int>(pick(rng, 2, 3));
  const int stride = static_cast<int>(pick(rng, 1, 2));
  const int pad = static_cast<int>(pick(rng, 0, window - 1));
  const std::int64_t n = pick(rng, 1, 2), h = pick(rng, window, 6), w = pick(rng, window, 6);
  const std::int64_t ch = pick(rng, 1, 3);
  TD x = distinct_tensor({n, h, w, ch}, rng);
  const std::int64_t oh = conv_out_size(h, window, stride, pad);
  const std::int64_t ow = conv_out_size(w, window, stride, pad);
  TD r = random_tensor({n, oh, ow, ch}, rng);
  const PoolSpec spec{window, stride, pad};
  Config c{cat(x.shape().str(), " w", window, " s", stride, " p", pad), {x}, {}};
  c.loss = [=](Graph<D>& g) { return project(g, ops::max_pool(g, x, spec), r); };
  return c;
}

Config make_resize(Rng& rng, ResizeMode mode) {
  const std::int64_t n = pick(rng, 1, 2), h = pick(rng, 1, 5), w = pick(rng, 1, 5);
  const std::int64_t ch = pick(rng, 1, 3), oh = pick(rng, 1, 8), ow = pick(rng, 1, 8);
  TD x = random_tensor({n, h, w, ch}, rng);
  TD r = random_tensor({n, oh, ow, ch}, rng);
  Config c{cat(x.shape().str(), " -> ", oh, "x", ow), {x}, {}};
  c.loss = [=](Graph<D>& g) { return project(g, ops::resize(g, x, oh, ow, mode), r); };
  return c;
}

Config make_fully_connected(Rng& rng) {
  const std::int64_t n = pick(rng, 1, 3), h = pick(rng, 1, 3), w = pick(rng, 1, 3);
  const std::int64_t ch = pick(rng, 1, 3), f = pick(rng, 1, 4);
  TD x = random_tensor({n, h, w, ch}, rng);
  TD wt = random_tensor({f, 1, 1, h * w * ch}, rng);
  TD b = random_tensor({1, 1, 1, f}, rng);
  TD r = random_tensor({n, 1, 1, f}, rng);
  Config c{cat(x.shape().str(), " F", f), {x, wt, b}, {}};
  c.loss = [=](Graph<D>& g) { return project(g, ops::fully_connected(g, x, wt, b), r); };
  return c;
}

Config make_softmax(Rng& rng) {
  const std::int64_t n = pick(rng, 1, 3), h = pick(rng, 1, 3), ch = pick(rng, 2, 6);
  TD x = random_tensor({n, h, 1, ch}, rng);
  TD r = random_tensor(x.shape(), rng);
  Config c{x.shape().str(), {x}, {}};
  c.loss = [=](Graph<D>& g) { return project(g, ops::softmax(g, x), r); };
  return c;
}

Config make_softmax_ce(Rng& rng) {
  const std::int64_t n = pick(rng, 1, 3), h = pick(rng, 1, 3), w = pick(rng, 1, 3);
  const std::int64_t cls = pick(rng, 2, 6);
  TD x = random_tensor({n, h, w, cls}, rng);
  std::vector<std::int32_t> labels(x.shape().sites());
  for (auto& y : labels)
    y = rng.integer(0, 4) == 0 ? kIgnoreLabel : static_cast<std::int32_t>(rng.integer(0, cls - 1));
  labels[0] = 0;  // at least one counted site
  Config c{x.shape().str(), {x}, {}};
  c.loss = [=](Graph<D>& g) { return ops::softmax_cross_entropy<D>(g, x, labels); };
  return c;
}

Config make_normal_loss(Rng& rng) {
  const std::int64_t n = pick(rng, 1, 2), h = pick(rng, 1, 4), w = pick(rng, 1, 4);
  TD pred = random_tensor({n, h, w, 3}, rng);
  TD gt(pred.shape());
  TD mask({n, h, w, 1});
  for (std::int64_t p = 0; p < pred.shape().sites(); ++p) {
    D v[3];
    D len = 0;
    for (D& c : v) {
      c = rng.normal(0, 1);
      len += c * c;
    }
    len = std::sqrt(len);
    for (int k = 0; k < 3; ++k) gt.ptr()[3 * p + k] = v[k] / len;
    mask.ptr()[p] = p == 0 || rng.integer(0, 3) != 0 ? 1.0 : 0.0;
  }
  Config c{pred.shape().str() + " masked", {pred}, {}};
  c.loss = [=](Graph<D>& g) { return ops::normal_loss(g, pred, gt, mask); };
  return c;
}

Config make_nddr(Rng& rng) {
  const int k = static_cast<int>(pick(rng, 2, 3));
  const std::int64_t ch = pick(rng, 1, 3);
  const std::int64_t n = pick(rng, 2, 3), h = pick(rng, 1, 3), w = pick(rng, 1, 3);
  auto layer = std::make_shared<NddrLayer<D>>(k, ch, InitPolicy::xavier(rng.engine()()));
  layer->set_norm_mode(NormMode::kTrain);
  std::vector<TD> feats;
  std::vector<TD> rs;
  for (int i = 0; i < k; ++i) {
    feats.push_back(random_tensor({n, h, w, ch}, rng));
    rs.push_back(random_tensor({n, h, w, ch}, rng));
  }
  Config c{cat("K", k, " ", feats[0].shape().str(), " shared bn train"), feats, {}};
  for (int i = 0; i < k; ++i) {
    for (D& v : layer->bias(i).data()) v = rng.uniform(-1, 1);
    c.inputs.push_back(layer->weight(i));
    c.inputs.push_back(layer->bias(i));
  }
  for (auto& s : layer->norms()) {
    for (D& v : s.gamma.data()) v = rng.uniform(0.5, 1.5);
    for (D& v : s.beta.data()) v = rng.uniform(-0.5, 0.5);
    c.inputs.push_back(s.gamma);
    c.inputs.push_back(s.beta);
  }
  c.loss = [=](Graph<D>& g) {
    // Fresh running statistics per call keep the function pure.
    for (auto& s : layer->norms()) {
      std::fill(s.running_mean.data().begin(), s.running_mean.data().end(), 0.0);
      std::fill(s.running_var.data().begin(), s.running_var.data().end(), 1.0);
    }
    const auto outs = layer->forward(g, feats);
    TD total = project(g, outs[0], rs[0]);
    for (int i = 1; i < k; ++i) total = ops::add(g, total, project(g, outs[i], rs[i]));
    return total;
  };
  return c;
}

Config make_shortcut(Rng& rng) {
  const int levels = static_cast<int>(pick(rng, 2, 3));
  const std::int64_t n = pick(rng, 1, 2);
  std::vector<std::int64_t> chans;
  std::vector<TD> feats;
  std::int64_t h = 6;
  for (int l = 0; l < levels; ++l) {
    chans.push_back(pick(rng, 1, 3));
    feats.push_back(random_tensor({n, h, h, chans.back()}, rng));
    h = std::max<std::int64_t>(1, h / 2);
  }
  const std::int64_t th = feats.back().shape().h;
  const std::int64_t cr = pick(rng, 1, 3);
  auto agg = std::make_shared<ShortcutAggregator<D>>(chans, cr, InitPolicy::xavier(rng.engine()()));
  for (D& v : agg->bias().data()) v = rng.uniform(-1, 1);
  TD r = random_tensor({n, th, th, cr}, rng);
  Config c{cat(levels, " levels to ", th, "x", th, " Cr", cr), feats, {}};
  c.inputs.push_back(agg->weight());
  c.inputs.push_back(agg->bias());
  c.loss = [=](Graph<D>& g) { return project(g, agg->forward(g, feats, th, th), r); };
  return c;
}

Config make_relu(Rng& rng) {
  TD x = random_tensor({pick(rng, 1, 2), pick(rng, 1, 4), pick(rng, 1, 4), pick(rng, 1, 3)}, rng);
  TD r = random_tensor(x.shape(), rng);
  Config c{x.shape().str(), {x}, {}};
  c.loss = [=](Graph<D>& g) { return project(g, ops::relu(g, x), r); };
  return c;
}

Config make_matmul(Rng& rng) {
  const std::int64_t n = pick(rng, 1, 4), kdim = pick(rng, 1, 4), f = pick(rng, 1, 4);
  TD a = random_tensor({n, 1, 1, kdim}, rng);
  TD b = random_tensor({1, 1, kdim, f}, rng);
  TD r = random_tensor({n, 1, 1, f}, rng);
  Config c{cat(n, "x", kdim, " * ", kdim, "x", f), {a, b}, {}};
  c.loss = [=](Graph<D>& g) { return project(g, ops::matmul(g, a, b), r); };
  return c;
}

Config make_concat(Rng& rng) {
  const int k = static_cast<int>(pick(rng, 1, 3));
  const std::int64_t n = pick(rng, 1, 2), h = pick(rng, 1, 3), w = pick(rng, 1, 3);
  std::vector<TD> xs;
  std::int64_t total = 0;
  for (int i = 0; i < k; ++i) {
    xs.push_back(random_tensor({n, h, w, pick(rng, 1, 3)}, rng));
    total += xs.back().shape().c;
  }
  TD r = random_tensor({n, h, w, total}, rng);
  Config c{cat(k, " inputs"), xs, {}};
  c.loss = [=](Graph<D>& g) { return project(g, ops::concat_channels(g, xs), r); };
  return c;
}

Config make_gap(Rng& rng) {
  TD x = random_tensor({pick(rng, 1, 3), pick(rng, 1, 4), pick(rng, 1, 4), pick(rng, 1, 3)}, rng);
  TD r = random_tensor({x.shape().n, 1, 1, x.shape().c}, rng);
  Config c{x.shape().str(), {x}, {}};
  c.loss = [=](Graph<D>& g) { return project(g, ops::global_avg_pool(g, x), r); };
  return c;
}

Config make_mix(Rng& rng, int subspaces) {
  const int k = static_cast<int>(pick(rng, 2, 3));
  const std::int64_t ch = subspaces * pick(rng, 1, 2);
  const std::int64_t n = pick(rng, 1, 2), h = pick(rng, 1, 3), w = pick(rng, 1, 3);
  const int rows = k * subspaces;
  TD mixing = random_tensor({1, 1, rows, rows}, rng);
  std::vector<TD> feats;
  std::vector<TD> rs;
  for (int i = 0; i < k; ++i) {
    feats.push_back(random_tensor({n, h, w, ch}, rng));
    rs.push_back(random_tensor({n, h, w, ch}, rng));
  }
  Config c{cat("K", k, " S", subspaces, " ", feats[0].shape().str()), feats, {}};
  c.inputs.push_back(mixing);
  c.loss = [=](Graph<D>& g) {
    TD total;
    for (int i = 0; i < k; ++i) {
      TD l = project(g, ops::subspace_mix(g, feats, mixing, i, subspaces), rs[i]);
      total = total.defined() ? ops::add(g, total, l) : l;
    }
    return total;
  };
  return c;
}

const std::vector<std::pair<std::string, Maker>>& suite() {
  static const std::vector<std::pair<std::string, Maker>> kSuite = {
      {"conv2d", make_conv2d},
      {"conv1x1", make_conv1x1},
      {"batch_norm", make_batch_norm},
      {"max_pool", make_max_pool},
      {"bilinear_resize", [](Rng& r) { return make_resize(r, ResizeMode::kBilinear); }},
      {"nearest_resize", [](Rng& r) { return make_resize(r, ResizeMode::kNearest); }},
      {"fully_connected", make_fully_connected},
      {"softmax", make_softmax},
      {"softmax_cross_entropy", make_softmax_ce},
      {"normal_loss", make_normal_loss},
      {"nddr_forward", make_nddr},
      {"shortcut_aggregate", make_shortcut},
      {"relu", make_relu},
      {"matmul", make_matmul},
      {"concat_channels", make_concat},
      {"global_avg_pool", make_gap},
      {"cross_stitch", [](Rng& r) { return make_mix(r, 1); }},
      {"sluice", [](Rng& r) { return make_mix(r, 2); }},
  };
  return kSuite;
}

}  // namespace

const std::vector<std::string>& gradient_suite_ops() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, maker] : suite()) out.push_back(name);
    return out;
  }();
  return names;
}

std::vector<GradcheckCase> run_gradient_suite(const std::string& module, std::uint64_t seed,
                                              int shapes, double tolerance, double eps) {
  require(shapes >= 1, ErrorCode::kInvalidArgument, "gradcheck needs >= 1 shape per op");
  std::vector<GradcheckCase> out;
  for (const auto& [name, maker] : suite()) {
    if (module != "all" && module != name) continue;
    GradcheckCase gc;
    gc.op = name;
    Rng rng(mix_seed(seed, hash_name(name)));
    for (int s = 0; s < shapes; ++s) {
      Config c = maker(rng);
      const double err = finite_difference_check<D>(c.loss, c.inputs, eps);
      if (!(err <= gc.max_rel_error) || s == 0) {
        if (!(err <= gc.max_rel_error) || gc.worst_shape.empty()) gc.worst_shape = c.shape;
        gc.max_rel_error = std::isnan(err) ? INFINITY : std::max(gc.max_rel_error, err);
      }
      ++gc.shapes;
    }
    gc.passed = gc.max_rel_error <= tolerance;
    out.push_back(gc);
  }
  require(!out.empty(), ErrorCode::kInvalidArgument, "unknown gradcheck module '", module, "'");
  return out;
}

}  // namespace nddr
