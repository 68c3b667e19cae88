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

#include "nddr/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nddr/ablate.hpp"
#include "nddr/data.hpp"
#include "nddr/error.hpp"
#include "nddr/fusion.hpp"
#include "nddr/gradcheck.hpp"

namespace nddr {

namespace fs = std::filesystem;

namespace {

const std::string kReq(kRequired);
const std::string kAut(kAuto);

std::vector<KeySpec> train_keys() {
  return {
      {"mode", "nddr", "single|shared|nddr|cross-stitch|sluice"},
      {"task", "0", "task index served by a single-mode graph"},
      {"shortcut", "false", "aggregate every fusion level before the heads"},
      {"init", "diag:0.9,0.1", "fusion init: diag:a,b or xavier"},
      {"nddr-lr-scale", "100", "learning-rate multiplier for fusion parameters"},
      {"base-lr", kAut, "base learning rate (auto: 0.05 single, 0.001 otherwise)"},
      {"wd", "5e-4", "l2 weight decay on weights"},
      {"momentum", "0.9", "SGD momentum"},
      {"steps", "2000", "training steps"},
      {"batch-size", kAut, "minibatch size (auto: 16 single, 4 otherwise)"},
      {"poly-power", "0.9", "polynomial lr decay power, 0 for constant"},
      {"seed", "0", "initialization and shuffling seed"},
      {"loss-weights", "", "per-task loss weights, comma separated (default 1)"},
      {"data", kReq, "training dataset directory"},
      {"eval-data", "", "evaluation dataset directory"},
      {"eval-every", "0", "evaluation period in steps, 0 for end only"},
      {"eval-train", "false", "also evaluate on the training split"},
      {"pretrain", "", "single-task checkpoints, comma separated, one per branch"},
      {"nddr-norm", "shared", "fusion batch norm: shared|per-task|none"},
      {"nddr-affine", "true", "learned scale and shift in fusion batch norm"},
      {"freeze-fusion-norm", "false", "keep fusion batch norm on running statistics"},
      {"sluice-subspaces", "2", "subspaces per task for sluice mode"},
      {"shortcut-channels", "0", "shortcut reduction width, 0 for the last stage width"},
      {"shortcut-resize", "bilinear", "bilinear|nearest"},
      {"out", kReq, "output directory"},
  };
}

const std::map<std::string, std::vector<KeySpec>>& key_table() {
  static const std::map<std::string, std::vector<KeySpec>> table = [] {
    std::map<std::string, std::vector<KeySpec>> t;
    t["gen-data"] = {
        {"generator", "shapes", "shapes|attrs"},
        {"n", "64", "number of samples"},
        {"hw", "32", "image height and width"},
        {"classes", "3", "shape classes including background (shapes only)"},
        {"seed", "0", "generator seed"},
        {"split", "train", "split name mixed into the per-sample seed"},
        {"pool-factor", "16", "required divisor of hw (shapes only)"},
        {"out", kReq, "dataset directory"},
    };
    t["train"] = train_keys();
    auto ablate = train_keys();
    ablate.insert(ablate.begin(), {{"axis", kReq, "init|lr-scale"},
                                   {"grid", "", "grid values separated by ';' (default grid if empty)"},
                                   {"repeats", "1", "seeds per grid point"},
                                   {"workers", "1", "parallel training runs"}});
    t["ablate"] = ablate;
    t["gradcheck"] = {
        {"module", "all", "all or one op name"},
        {"dtype", "f64", "only f64 is supported"},
        {"seed", "0", "random shape seed"},
        {"shapes", "5", "random configurations per op"},
        {"tol", "1e-4", "max relative error"},
        {"eps", "1e-5", "central difference step"},
        {"out", "", "directory for run.json"},
    };
    t["count-params"] = {
        {"mode", "nddr", "build mode"},
        {"k", "2", "number of tasks"},
        {"channels", "", "stage widths, comma separated (default ToyVGG)"},
        {"convs", "2", "3x3 convs per stage, one value or one per stage"},
        {"bias", "false", "count fusion biases"},
        {"shortcut", "false", "include shortcut aggregation"},
        {"classes", "3", "outputs per task head"},
        {"out", "", "directory for run.json"},
    };
    t["eval"] = {
        {"ckpt", kReq, "checkpoint written by train"},
        {"data", kReq, "dataset directory"},
        {"batch-size", "16", "evaluation batch size"},
        {"out", "", "directory for run.json and metrics.jsonl"},
    };
    return t;
  }();
  return table;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

std::string group_digits(std::int64_t v) {
  std::string s = std::to_string(v < 0 ? -v : v);
  for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(i, ",");
  return v < 0 ? "-" + s : s;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"gen-data",  "train",        "ablate",
                                                 "gradcheck", "count-params", "eval"};
  return names;
}

const std::vector<KeySpec>& command_keys(const std::string& command) {
  const auto& t = key_table();
  const auto it = t.find(command);
  require(it != t.end(), ErrorCode::kInvalidArgument, "unknown command '", command, "'");
  return it->second;
}

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::kInvalidArgument, "config line ", lineno,
            ": expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    require(!key.empty(), ErrorCode::kInvalidArgument, "config line ", lineno, ": empty key");
    out[key] = trim(std::string_view(line).substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> parse_config_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kIo, "cannot read config file ", path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

RunSpec RunSpec::resolve(const std::string& command,
                         const std::map<std::string, std::string>& flags,
                         const std::map<std::string, std::string>& file) {
  const auto& keys = command_keys(command);
  auto known = [&](const std::string& k) {
    return std::any_of(keys.begin(), keys.end(), [&](const KeySpec& s) { return s.key == k; });
  };
  for (const auto& [k, v] : flags)
    require(known(k), ErrorCode::kInvalidArgument, "'", command, "' has no option '", k, "'");
  for (const auto& [k, v] : file)
    require(known(k), ErrorCode::kInvalidArgument, "config file key '", k,
            "' is not an option of '", command, "'");
  RunSpec spec;
  spec.command_ = command;
  std::vector<std::string> missing;
  for (const auto& ks : keys) {
    std::string value = ks.fallback;
    if (auto it = file.find(ks.key); it != file.end()) value = it->second;
    if (auto it = flags.find(ks.key); it != flags.end()) value = it->second;
    if (value == kReq) missing.push_back(ks.key);
    spec.values_.emplace_back(ks.key, value);
  }
  if (!missing.empty()) {
    std::string msg = cat("'", command, "' is missing required option(s):");
    for (const auto& m : missing) msg += " --" + m;
    fail(ErrorCode::kInvalidArgument, msg);
  }
  // Mode-dependent training defaults.
  if (command == "train" || command == "ablate") {
    const TrainConfig d = TrainConfig::for_mode(parse_mode(spec.get("mode")));
    if (spec.get("base-lr") == kAut) spec.set("base-lr", format_double(d.base_lr));
    if (spec.get("batch-size") == kAut) spec.set("batch-size", std::to_string(d.batch_size));
  }
  return spec;
}

const std::string& RunSpec::get(const std::string& key) const {
  for (const auto& [k, v] : values_)
    if (k == key) return v;
  fail(ErrorCode::kInvalidArgument, "'", command_, "' has no option '", key, "'");
}

double RunSpec::get_double(const std::string& key) const {
  const std::string& v = get(key);
  double out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  require(res.ec == std::errc() && res.ptr == v.data() + v.size() && std::isfinite(out),
          ErrorCode::kInvalidArgument, "--", key, " expects a number, got '", v, "'");
  return out;
}

std::int64_t RunSpec::get_int(const std::string& key) const {
  const std::string& v = get(key);
  std::int64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  require(res.ec == std::errc() && res.ptr == v.data() + v.size(), ErrorCode::kInvalidArgument,
          "--", key, " expects an integer, got '", v, "'");
  return out;
}

bool RunSpec::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(ErrorCode::kInvalidArgument, "--", key, " expects true or false, got '", v, "'");
}

std::vector<std::string> RunSpec::get_list(const std::string& key) const {
  return split(get(key), ',');
}

void RunSpec::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : values_)
    if (k == key) {
      v = value;
      return;
    }
  fail(ErrorCode::kInvalidArgument, "'", command_, "' has no option '", key, "'");
}

std::string RunSpec::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command_;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : values_) cfg[k] = v;
  j["config"] = cfg;
  return j.dump(2) + "\n";
}

RunSpec RunSpec::from_json(std::string_view text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, "run echo is not valid JSON: ", e.what());
  }
  require(j.contains("command") && j["command"].is_string() && j.contains("config") &&
              j["config"].is_object(),
          ErrorCode::kFormat, "run echo needs 'command' and 'config'");
  std::map<std::string, std::string> flags;
  for (const auto& [k, v] : j["config"].items()) {
    require(v.is_string(), ErrorCode::kFormat, "run echo value for '", k, "' is not a string");
    flags[k] = v.get<std::string>();
  }
  return resolve(j["command"].get<std::string>(), flags);
}

namespace {

// Scalar metadata and a byte copy of the config echo.
void add_bytes(Checkpoint& ck, const std::string& name, const std::string& text) {
  CheckpointRecord r;
  r.name = name;
  r.dtype = DType::kF64;
  r.dims = {text.size()};
  for (unsigned char c : text) r.f64.push_back(c);
  ck.add(std::move(r));
}

double meta(const Checkpoint& ck, const std::string& key) {
  const auto v = ck.scalar("meta/" + key);
  require(v.has_value(), ErrorCode::kFormat, "checkpoint lacks meta/", key,
          " (not written by train?)");
  return *v;
}

NddrNorm parse_norm(const std::string& s) {
  if (s == "shared") return NddrNorm::kShared;
  if (s == "per-task") return NddrNorm::kPerTask;
  if (s == "none") return NddrNorm::kNone;
  fail(ErrorCode::kInvalidArgument, "--nddr-norm expects shared|per-task|none, got '", s, "'");
}

ResizeMode parse_resize(const std::string& s) {
  if (s == "bilinear") return ResizeMode::kBilinear;
  if (s == "nearest") return ResizeMode::kNearest;
  fail(ErrorCode::kInvalidArgument, "resize mode must be bilinear|nearest, got '", s, "'");
}

}  // namespace

void write_net_meta(Checkpoint& ck, const TaskGraph<float>& net) {
  const auto& o = net.options();
  const auto& s = net.spec();
  ck.add_scalar("meta/mode", static_cast<double>(o.mode));
  ck.add_scalar("meta/tasks", o.tasks);
  ck.add_scalar("meta/task", o.task);
  ck.add_scalar("meta/shortcut", o.shortcut);
  ck.add_scalar("meta/sluice_subspaces", o.sluice_subspaces);
  ck.add_scalar("meta/shortcut_channels", static_cast<double>(o.shortcut_channels));
  ck.add_scalar("meta/shortcut_resize", static_cast<double>(o.shortcut_resize));
  ck.add_scalar("meta/nddr_norm", static_cast<double>(o.nddr.norm));
  ck.add_scalar("meta/nddr_affine", o.nddr.affine);
  ck.add_scalar("meta/nddr_bias", o.nddr.bias);
  ck.add_scalar("meta/input_channels", static_cast<double>(s.input_channels));
  for (std::size_t i = 0; i < s.heads.size(); ++i) {
    ck.add_scalar(cat("meta/head", i, "/kind"), static_cast<double>(s.heads[i].kind));
    ck.add_scalar(cat("meta/head", i, "/outputs"), static_cast<double>(s.heads[i].outputs));
  }
}

TaskGraph<float> net_from_checkpoint(const Checkpoint& ck) {
  BuildOptions o;
  o.mode = static_cast<NetMode>(static_cast<int>(meta(ck, "mode")));
  o.tasks = static_cast<int>(meta(ck, "tasks"));
  o.task = static_cast<int>(meta(ck, "task"));
  o.shortcut = meta(ck, "shortcut") != 0;
  o.sluice_subspaces = static_cast<int>(meta(ck, "sluice_subspaces"));
  o.shortcut_channels = static_cast<std::int64_t>(meta(ck, "shortcut_channels"));
  o.shortcut_resize = static_cast<ResizeMode>(static_cast<int>(meta(ck, "shortcut_resize")));
  o.nddr.norm = static_cast<NddrNorm>(static_cast<int>(meta(ck, "nddr_norm")));
  o.nddr.affine = meta(ck, "nddr_affine") != 0;
  o.nddr.bias = meta(ck, "nddr_bias") != 0;
  std::vector<HeadSpec> heads;
  for (int i = 0; i < o.tasks; ++i)
    heads.push_back({static_cast<HeadKind>(static_cast<int>(meta(ck, cat("head", i, "/kind")))),
                     static_cast<std::int64_t>(meta(ck, cat("head", i, "/outputs")))});
  TaskGraph<float> net(
      BackboneSpec::toy_vgg(heads, static_cast<std::int64_t>(meta(ck, "input_channels"))), o);
  net.load_checkpoint(ck);
  return net;
}

BackboneSpec backbone_for(const Dataset& data) {
  std::vector<HeadSpec> heads;
  for (const auto& t : data.tasks)
    heads.push_back({t.kind == TaskKind::kImageClass ? HeadKind::kVector : HeadKind::kPixel,
                     t.classes});
  return BackboneSpec::toy_vgg(heads, data.channels);
}

BuildOptions build_options_from(const RunSpec& spec, int tasks) {
  BuildOptions o;
  o.mode = parse_mode(spec.get("mode"));
  o.tasks = tasks;
  o.task = static_cast<int>(spec.get_int("task"));
  o.shortcut = spec.get_bool("shortcut");
  o.init = InitPolicy::parse(spec.get("init"));
  o.seed = static_cast<std::uint64_t>(spec.get_int("seed"));
  o.init.seed = o.seed;
  o.nddr.norm = parse_norm(spec.get("nddr-norm"));
  o.nddr.affine = spec.get_bool("nddr-affine");
  o.sluice_subspaces = static_cast<int>(spec.get_int("sluice-subspaces"));
  o.shortcut_channels = spec.get_int("shortcut-channels");
  o.shortcut_resize = parse_resize(spec.get("shortcut-resize"));
  return o;
}

TrainConfig train_config_from(const RunSpec& spec) {
  TrainConfig c;
  c.base_lr = spec.get_double("base-lr");
  c.nddr_lr_scale = spec.get_double("nddr-lr-scale");
  c.weight_decay = spec.get_double("wd");
  c.momentum = spec.get_double("momentum");
  c.steps = spec.get_int("steps");
  c.batch_size = spec.get_int("batch-size");
  c.seed = static_cast<std::uint64_t>(spec.get_int("seed"));
  c.poly_power = spec.get_double("poly-power");
  c.eval_every = spec.get_int("eval-every");
  c.eval_train = spec.get_bool("eval-train");
  c.freeze_fusion_norm = spec.get_bool("freeze-fusion-norm");
  c.init = InitPolicy::parse(spec.get("init"));
  c.pretrain = spec.get_list("pretrain");
  for (const auto& w : spec.get_list("loss-weights")) {
    double v = 0;
    const auto res = std::from_chars(w.data(), w.data() + w.size(), v);
    require(res.ec == std::errc() && res.ptr == w.data() + w.size() && v >= 0,
            ErrorCode::kInvalidArgument, "--loss-weights entries must be numbers >= 0, got '", w,
            "'");
    c.loss_weights.push_back(v);
  }
  c.validate();
  return c;
}

namespace {

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::kIo, "cannot create directory ", dir.string(), ": ", ec.message());
}

std::string report_line(const MetricsReport& r) {
  std::string s = cat("step ", r.step, " [", r.split, "]");
  for (const auto& t : r.tasks) {
    s += " " + t.task + ":";
    for (const auto& [k, v] : t.values) s += cat(" ", k, "=", format_double(v));
  }
  return s;
}

}  // namespace

TrainOutcome run_training(const RunSpec& spec, const LineSink& out) {
  auto say = [&](const std::string& s) {
    if (out) out(s);
  };
  const TrainConfig cfg = train_config_from(spec);
  const Dataset train_data = load_dataset(spec.get("data"));
  Dataset eval_data;
  const bool has_eval = !spec.get("eval-data").empty();
  if (has_eval) eval_data = load_dataset(spec.get("eval-data"));
  BuildOptions bo = build_options_from(spec, static_cast<int>(train_data.tasks.size()));
  TaskGraph<float> net(backbone_for(train_data), bo);
  if (!cfg.pretrain.empty()) {
    std::vector<Checkpoint> cks;
    for (const auto& p : cfg.pretrain) cks.push_back(Checkpoint::load(p));
    net.load_pretrained(cks);
  } else if (is_fusion_mode(bo.mode)) {
    say("note: fusion mode without --pretrain starts cold; warm starts from the single-task "
        "checkpoints fine-tune better");
  }

  const fs::path dir = spec.get("out");
  make_dir(dir);
  write_text(dir / "run.json", spec.to_json());
  const fs::path log = dir / "metrics.jsonl";
  write_text(log, "");
  TrainOutcome outcome;
  const TrainResult result =
      train(net, train_data, has_eval ? &eval_data : nullptr, cfg, [&](const MetricsReport& r) {
        MetricsReport tagged = r;
        tagged.init = is_fusion_mode(bo.mode) ? bo.init.str() : "none";
        append_metrics_log(log, tagged);
        say(report_line(tagged));
      });
  for (auto r : result.reports) {
    r.init = is_fusion_mode(bo.mode) ? bo.init.str() : "none";
    if (r.split == train_data.split && (!has_eval || r.split != eval_data.split || cfg.eval_train)) {
      outcome.final_train = r;
      outcome.has_train = true;
    }
    outcome.final_eval = r;
    outcome.reports.push_back(std::move(r));
  }
  write_text(dir / "summary.csv", summary_csv(outcome.reports));
  Checkpoint ck = net.to_checkpoint();
  write_net_meta(ck, net);
  ck.add_scalar("meta/step", static_cast<double>(cfg.steps));
  ck.add_scalar("meta/seed", static_cast<double>(cfg.seed));
  add_bytes(ck, "meta/config", spec.to_json());
  ck.save(dir / "model.ckpt");
  say(cat("wrote ", (dir / "model.ckpt").string()));
  return outcome;
}

namespace {

int cmd_gen_data(const RunSpec& spec, const LineSink& out) {
  const std::string gen = spec.get("generator");
  const std::int64_t n = spec.get_int("n");
  const std::int64_t hw = spec.get_int("hw");
  const auto seed = static_cast<std::uint64_t>(spec.get_int("seed"));
  Dataset d;
  if (gen == "shapes")
    d = gen_shapes_tasks(n, hw, spec.get_int("classes"), seed, spec.get("split"),
                         spec.get_int("pool-factor"));
  else if (gen == "attrs")
    d = gen_attr_tasks(n, hw, seed, spec.get("split"));
  else
    fail(ErrorCode::kInvalidArgument, "--generator expects shapes|attrs, got '", gen, "'");
  const fs::path dir = spec.get("out");
  save_dataset(d, dir);
  write_text(dir / "run.json", spec.to_json());
  std::string tasks;
  for (const auto& t : d.tasks) tasks += cat(tasks.empty() ? "" : ", ", task_kind_name(t.kind), "(", t.classes, ")");
  out(cat("dataset ", dir.string(), ": generator=", d.generator, " split=", d.split,
          " samples=", d.size(), " hw=", d.hw, " seed=", d.seed, " tasks=[", tasks, "]"));
  return 0;
}

int cmd_gradcheck(const RunSpec& spec, const LineSink& out) {
  require(spec.get("dtype") == "f64", ErrorCode::kInvalidArgument,
          "gradcheck runs in f64 only (finite differences are unreliable in f32), got --dtype ",
          spec.get("dtype"));
  if (!spec.get("out").empty()) {
    make_dir(spec.get("out"));
    write_text(fs::path(spec.get("out")) / "run.json", spec.to_json());
  }
  const double tol = spec.get_double("tol");
  const auto cases =
      run_gradient_suite(spec.get("module"), static_cast<std::uint64_t>(spec.get_int("seed")),
                         static_cast<int>(spec.get_int("shapes")), tol, spec.get_double("eps"));
  bool ok = true;
  for (const auto& c : cases) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-22s shapes=%d max_rel_err=%.3e %s", c.op.c_str(), c.shapes,
                  c.max_rel_error, c.passed ? "ok" : "FAIL");
    out(c.passed ? std::string(buf) : cat(buf, " (worst: ", c.worst_shape, ")"));
    ok = ok && c.passed;
  }
  out(cat(ok ? "all ops within " : "gradient check failed, tolerance ", format_double(tol)));
  return ok ? 0 : 1;
}

int cmd_count_params(const RunSpec& spec, const LineSink& out) {
  if (!spec.get("out").empty()) {
    make_dir(spec.get("out"));
    write_text(fs::path(spec.get("out")) / "run.json", spec.to_json());
  }
  const NetMode mode = parse_mode(spec.get("mode"));
  const int k = static_cast<int>(spec.get_int("k"));
  require(k >= 1, ErrorCode::kInvalidArgument, "--k must be >= 1");
  const std::int64_t classes = spec.get_int("classes");
  std::vector<HeadSpec> heads(k, HeadSpec{HeadKind::kPixel, classes});
  BackboneSpec bs = BackboneSpec::toy_vgg(heads);
  const auto widths = spec.get_list("channels");
  const auto convs = spec.get_list("convs");
  if (!widths.empty()) {
    require(convs.size() == 1 || convs.size() == widths.size(), ErrorCode::kInvalidArgument,
            "--convs needs one value or one per stage");
    bs.stages.clear();
    for (std::size_t s = 0; s < widths.size(); ++s) {
      StageSpec st;
      st.channels = std::stoll(widths[s]);
      st.convs = std::stoi(convs.size() == 1 ? convs[0] : convs[s]);
      require(st.channels >= 1 && st.convs >= 1, ErrorCode::kInvalidArgument,
              "stage widths and conv counts must be >= 1");
      bs.stages.push_back(st);
    }
  }
  const auto chans = bs.stage_channels();
  BuildOptions single;
  single.mode = NetMode::kSingle;
  single.tasks = k;
  const std::int64_t one = closed_form_parameter_count(bs, single);
  const std::int64_t head = classes * chans.back() + classes;
  const std::int64_t backbone = one - head;
  const bool bias = spec.get_bool("bias");
  const FusionParamCount fp = count_fusion_params(k, chans, bias);
  const double base = static_cast<double>(k * backbone);
  auto pct = [&](std::int64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * static_cast<double>(v) / base);
    return std::string(buf);
  };
  std::string widths_str;
  for (auto c : chans) widths_str += cat(widths_str.empty() ? "" : ",", c);
  out(cat("stages: ", widths_str, "  tasks: ", k));
  out(cat("backbone per branch: ", group_digits(backbone)));
  out(cat("backbone, ", k, " branches: ", group_digits(k * backbone)));
  out(cat("fusion per task: ", group_digits(fp.per_task), " (", pct(fp.per_task),
          " of the branch backbones)"));
  out(cat("fusion total: ", group_digits(fp.total), " (", pct(fp.total), ")"));
  BuildOptions bo;
  bo.mode = mode;
  bo.tasks = k;
  bo.shortcut = spec.get_bool("shortcut");
  bo.nddr.bias = bias;
  const std::int64_t closed = closed_form_parameter_count(bs, bo);
  out(cat("graph total (", mode_name(mode), bo.shortcut ? "+shortcut" : "", "): ",
          group_digits(closed)));
  // The registry walk builds the graph, which is cheap only at desk scale.
  if (closed < 50'000'000) {
    TaskGraph<float> net(bs, bo);
    const std::int64_t reg = net.parameter_count();
    out(cat("registry enumeration: ", group_digits(reg), reg == closed ? " (matches)" : " (MISMATCH)"));
    if (reg != closed) return 1;
  }
  return 0;
}

int cmd_eval(const RunSpec& spec, const LineSink& out) {
  const Checkpoint ck = Checkpoint::load(spec.get("ckpt"));
  TaskGraph<float> net = net_from_checkpoint(ck);
  const Dataset data = load_dataset(spec.get("data"));
  EvalResult r = evaluate(net, data, spec.get_int("batch-size"));
  r.report.step = static_cast<std::int64_t>(ck.scalar("meta/step").value_or(0));
  r.report.seed = static_cast<std::uint64_t>(ck.scalar("meta/seed").value_or(0));
  r.report.init = "none";
  out(r.report.to_json_line());
  if (!spec.get("out").empty()) {
    const fs::path dir = spec.get("out");
    make_dir(dir);
    write_text(dir / "run.json", spec.to_json());
    write_text(dir / "metrics.jsonl", r.report.to_json_line() + "\n");
    write_text(dir / "summary.csv", summary_csv({r.report}));
  }
  return 0;
}

int cmd_ablate(const RunSpec& spec, const LineSink& out) {
  const auto rows = run_ablation(spec, out);
  out(cat("wrote ", (fs::path(spec.get("out")) / "ablation.csv").string(), " (", rows.size(),
          " grid points)"));
  return 0;
}

}  // namespace

int run_command(const RunSpec& spec, const LineSink& out) {
  const LineSink sink = out ? out : LineSink([](const std::string&) {});
  const std::string& c = spec.command();
  if (c == "gen-data") return cmd_gen_data(spec, sink);
  if (c == "train") {
    run_training(spec, sink);
    return 0;
  }
  if (c == "ablate") return cmd_ablate(spec, sink);
  if (c == "gradcheck") return cmd_gradcheck(spec, sink);
  if (c == "count-params") return cmd_count_params(spec, sink);
  if (c == "eval") return cmd_eval(spec, sink);
  fail(ErrorCode::kInvalidArgument, "unknown command '", c, "'");
}

}  // namespace nddr
