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

#include "nddr/nddr.h"

#include <exception>
#include <map>
#include <new>
#include <optional>
#include <string>

#include "nddr/data.hpp"
#include "nddr/error.hpp"
#include "nddr/fusion.hpp"
#include "nddr/run_config.hpp"
#include "nddr/train.hpp"

struct nddr_spec {
  std::string command;
  std::map<std::string, std::string> flags;
  std::map<std::string, std::string> file;
  std::string json;
};

struct nddr_dataset {
  nddr::Dataset data;
};

struct nddr_net {
  explicit nddr_net(nddr::TaskGraph<float> g) : net(std::move(g)) {}
  nddr::TaskGraph<float> net;
  std::string report;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
nddr_status guard(F&& f) {
  try {
    g_last_error.clear();
    f();
    return NDDR_OK;
  } catch (const nddr::Error& e) {
    g_last_error = e.what();
    return static_cast<nddr_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return NDDR_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return NDDR_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  nddr::require(p != nullptr, nddr::ErrorCode::kInvalidArgument, what, " must not be null");
}

nddr::RunSpec resolve(const nddr_spec* s) { return nddr::RunSpec::resolve(s->command, s->flags, s->file); }

}  // namespace

extern "C" {

const char* nddr_last_error(void) { return g_last_error.c_str(); }

const char* nddr_version(void) { return "1.0.0"; }

const char* nddr_status_name(nddr_status status) {
  switch (status) {
    case NDDR_OK: return "ok";
    case NDDR_ERR_INVALID_ARGUMENT: return "invalid argument";
    case NDDR_ERR_SHAPE_MISMATCH: return "shape mismatch";
    case NDDR_ERR_IO: return "i/o error";
    case NDDR_ERR_FORMAT: return "format error";
    case NDDR_ERR_NOT_FINITE: return "non-finite value";
    case NDDR_ERR_STATE: return "invalid state";
    case NDDR_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

size_t nddr_command_count(void) { return nddr::command_names().size(); }

const char* nddr_command_name(size_t index) {
  const auto& names = nddr::command_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

nddr_status nddr_command_key_count(const char* command, size_t* count) {
  return guard([&] {
    need(command, "command");
    need(count, "count");
    *count = nddr::command_keys(command).size();
  });
}

nddr_status nddr_command_key(const char* command, size_t index, const char** key,
                             const char** fallback, const char** help) {
  return guard([&] {
    need(command, "command");
    const auto& keys = nddr::command_keys(command);
    nddr::require(index < keys.size(), nddr::ErrorCode::kInvalidArgument, "key index ", index,
                  " out of range for '", command, "'");
    if (key) *key = keys[index].key.c_str();
    if (fallback) *fallback = keys[index].fallback.c_str();
    if (help) *help = keys[index].help.c_str();
  });
}

nddr_status nddr_spec_create(const char* command, nddr_spec** out) {
  return guard([&] {
    need(command, "command");
    need(out, "out");
    nddr::command_keys(command);  // rejects unknown commands
    *out = new nddr_spec{command, {}, {}, {}};
  });
}

nddr_status nddr_spec_from_json(const char* json, nddr_spec** out) {
  return guard([&] {
    need(json, "json");
    need(out, "out");
    const nddr::RunSpec spec = nddr::RunSpec::from_json(json);
    auto* s = new nddr_spec{spec.command(), {}, {}, {}};
    for (const auto& [k, v] : spec.values()) s->flags[k] = v;
    *out = s;
  });
}

nddr_status nddr_spec_set(nddr_spec* spec, const char* key, const char* value) {
  return guard([&] {
    need(spec, "spec");
    need(key, "key");
    need(value, "value");
    spec->flags[key] = value;
  });
}

nddr_status nddr_spec_load_config(nddr_spec* spec, const char* path) {
  return guard([&] {
    need(spec, "spec");
    need(path, "path");
    spec->file = nddr::parse_config_file(path);
  });
}

nddr_status nddr_spec_resolved_json(nddr_spec* spec, const char** json) {
  return guard([&] {
    need(spec, "spec");
    need(json, "json");
    spec->json = resolve(spec).to_json();
    *json = spec->json.c_str();
  });
}

void nddr_spec_destroy(nddr_spec* spec) { delete spec; }

nddr_status nddr_run(nddr_spec* spec, nddr_line_fn on_line, void* user, int* exit_code) {
  return guard([&] {
    need(spec, "spec");
    const nddr::RunSpec rs = resolve(spec);
    const int rc = nddr::run_command(rs, [&](const std::string& line) {
      if (on_line) on_line(line.c_str(), user);
    });
    if (exit_code) *exit_code = rc;
  });
}

nddr_status nddr_dataset_shapes(int64_t n, int64_t hw, int64_t classes, uint64_t seed,
                                const char* split, nddr_dataset** out) {
  return guard([&] {
    need(out, "out");
    *out = new nddr_dataset{nddr::gen_shapes_tasks(n, hw, classes, seed, split ? split : "train")};
  });
}

nddr_status nddr_dataset_attrs(int64_t n, int64_t hw, uint64_t seed, const char* split,
                               nddr_dataset** out) {
  return guard([&] {
    need(out, "out");
    *out = new nddr_dataset{nddr::gen_attr_tasks(n, hw, seed, split ? split : "train")};
  });
}

nddr_status nddr_dataset_load(const char* dir, nddr_dataset** out) {
  return guard([&] {
    need(dir, "dir");
    need(out, "out");
    *out = new nddr_dataset{nddr::load_dataset(dir)};
  });
}

nddr_status nddr_dataset_save(const nddr_dataset* data, const char* dir) {
  return guard([&] {
    need(data, "data");
    need(dir, "dir");
    nddr::save_dataset(data->data, dir);
  });
}

nddr_status nddr_dataset_size(const nddr_dataset* data, size_t* samples, int64_t* hw,
                              size_t* tasks) {
  return guard([&] {
    need(data, "data");
    if (samples) *samples = data->data.size();
    if (hw) *hw = data->data.hw;
    if (tasks) *tasks = data->data.tasks.size();
  });
}

nddr_status nddr_dataset_equal(const nddr_dataset* a, const nddr_dataset* b, int* equal) {
  return guard([&] {
    need(a, "a");
    need(b, "b");
    need(equal, "equal");
    *equal = nddr::datasets_identical(a->data, b->data) ? 1 : 0;
  });
}

void nddr_dataset_destroy(nddr_dataset* data) { delete data; }

nddr_status nddr_net_load(const char* checkpoint, nddr_net** out) {
  return guard([&] {
    need(checkpoint, "checkpoint");
    need(out, "out");
    *out = new nddr_net(nddr::net_from_checkpoint(nddr::Checkpoint::load(checkpoint)));
  });
}

nddr_status nddr_net_parameter_count(const nddr_net* net, int64_t* count) {
  return guard([&] {
    need(net, "net");
    need(count, "count");
    *count = net->net.parameter_count();
  });
}

nddr_status nddr_net_evaluate(nddr_net* net, const nddr_dataset* data, int64_t batch_size,
                              const char** report_json) {
  return guard([&] {
    need(net, "net");
    need(data, "data");
    need(report_json, "report_json");
    net->report = nddr::evaluate(net->net, data->data, batch_size).report.to_json_line();
    *report_json = net->report.c_str();
  });
}

void nddr_net_destroy(nddr_net* net) { delete net; }

nddr_status nddr_count_fusion_params(int tasks, const int64_t* channels, size_t stages,
                                     int with_bias, int64_t* per_task, int64_t* total) {
  return guard([&] {
    need(channels, "channels");
    const auto c = nddr::count_fusion_params(
        tasks, std::span<const std::int64_t>(channels, stages), with_bias != 0);
    if (per_task) *per_task = c.per_task;
    if (total) *total = c.total;
  });
}

}  // extern "C"
