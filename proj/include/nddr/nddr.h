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

#ifndef NDDR_NDDR_H_
#define NDDR_NDDR_H_

#include <stddef.h>
#include <stdint.h>

#if defined(NDDR_BUILDING_LIBRARY)
#define NDDR_API __attribute__((visibility("default")))
#else
#define NDDR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Every call returns one; details go to nddr_last_error(). */
typedef enum nddr_status {
  NDDR_OK = 0,
  NDDR_ERR_INVALID_ARGUMENT = 1,
  NDDR_ERR_SHAPE_MISMATCH = 2,
  NDDR_ERR_IO = 3,
  NDDR_ERR_FORMAT = 4,
  NDDR_ERR_NOT_FINITE = 5,
  NDDR_ERR_STATE = 6,
  NDDR_ERR_INTERNAL = 7
} nddr_status;

typedef struct nddr_spec nddr_spec;       /* a command plus its options */
typedef struct nddr_dataset nddr_dataset; /* an in-memory dataset */
typedef struct nddr_net nddr_net;         /* a trained network */

/* Message for the last failing call on this thread ("" if none). */
NDDR_API const char* nddr_last_error(void);
NDDR_API const char* nddr_version(void);
NDDR_API const char* nddr_status_name(nddr_status status);

/* Command and option tables, for building front ends. */
NDDR_API size_t nddr_command_count(void);
NDDR_API const char* nddr_command_name(size_t index);
NDDR_API nddr_status nddr_command_key_count(const char* command, size_t* count);
/* fallback is "<required>" for mandatory keys and "" for optional ones. */
NDDR_API nddr_status nddr_command_key(const char* command, size_t index, const char** key,
                                      const char** fallback, const char** help);

/* Options set with nddr_spec_set win over config-file values, which win over
   the defaults. Resolution happens when the spec is run or echoed. */
NDDR_API nddr_status nddr_spec_create(const char* command, nddr_spec** out);
/* Rebuilds a spec from a run.json echo. */
NDDR_API nddr_status nddr_spec_from_json(const char* json, nddr_spec** out);
NDDR_API nddr_status nddr_spec_set(nddr_spec* spec, const char* key, const char* value);
NDDR_API nddr_status nddr_spec_load_config(nddr_spec* spec, const char* path);
/* Resolved config as JSON; the pointer stays valid until the next call on spec. */
NDDR_API nddr_status nddr_spec_resolved_json(nddr_spec* spec, const char** json);
NDDR_API void nddr_spec_destroy(nddr_spec* spec);

typedef void (*nddr_line_fn)(const char* line, void* user);
/* Runs the command. exit_code receives 0 on success or 1 when a check fails
   (gradcheck breach, parameter mismatch). Errors return a non-OK status. */
NDDR_API nddr_status nddr_run(nddr_spec* spec, nddr_line_fn on_line, void* user, int* exit_code);

NDDR_API nddr_status nddr_dataset_shapes(int64_t n, int64_t hw, int64_t classes, uint64_t seed,
                                         const char* split, nddr_dataset** out);
NDDR_API nddr_status nddr_dataset_attrs(int64_t n, int64_t hw, uint64_t seed, const char* split,
                                        nddr_dataset** out);
NDDR_API nddr_status nddr_dataset_load(const char* dir, nddr_dataset** out);
NDDR_API nddr_status nddr_dataset_save(const nddr_dataset* data, const char* dir);
NDDR_API nddr_status nddr_dataset_size(const nddr_dataset* data, size_t* samples, int64_t* hw,
                                       size_t* tasks);
NDDR_API nddr_status nddr_dataset_equal(const nddr_dataset* a, const nddr_dataset* b, int* equal);
NDDR_API void nddr_dataset_destroy(nddr_dataset* data);

/* Loads a checkpoint written by the train command. */
NDDR_API nddr_status nddr_net_load(const char* checkpoint, nddr_net** out);
NDDR_API nddr_status nddr_net_parameter_count(const nddr_net* net, int64_t* count);
/* Metrics as one JSON line; valid until the next call on net. */
NDDR_API nddr_status nddr_net_evaluate(nddr_net* net, const nddr_dataset* data,
                                       int64_t batch_size, const char** report_json);
NDDR_API void nddr_net_destroy(nddr_net* net);

/* Fusion parameters for K tasks over the given stage widths. */
NDDR_API nddr_status nddr_count_fusion_params(int tasks, const int64_t* channels,
                                              size_t stages, int with_bias, int64_t* per_task,
                                              int64_t* total);

#ifdef __cplusplus
}
#endif

#endif /* NDDR_NDDR_H_ */
