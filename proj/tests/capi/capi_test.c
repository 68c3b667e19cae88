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

/* Drives the shared library through its C interface only. */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <sys/stat.h>

#include "nddr/nddr.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: expected %s (last error: %s)\n", __FILE__, \
              __LINE__, #cond, nddr_last_error());                     \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

static int lines = 0;
static void count_line(const char* line, void* user) {
  (void)line;
  ++*(int*)user;
  ++lines;
}

static void path(char* buf, size_t cap, const char* root, const char* leaf) {
  snprintf(buf, cap, "%s/%s", root, leaf);
}

int main(int argc, char** argv) {
  const char* root = argc > 1 ? argv[1] : "capi_work";
  char data_dir[1024], run_dir[1024], ckpt[1024], cfg_path[1024];
  mkdir(root, 0755);
  path(data_dir, sizeof data_dir, root, "data");
  path(run_dir, sizeof run_dir, root, "run");
  path(ckpt, sizeof ckpt, run_dir, "model.ckpt");
  path(cfg_path, sizeof cfg_path, root, "train.cfg");

  EXPECT(strlen(nddr_version()) > 0);
  EXPECT(nddr_command_count() == 6);
  EXPECT(nddr_command_name(99) == NULL);

  /* command tables */
  size_t keys = 0;
  EXPECT(nddr_command_key_count("train", &keys) == NDDR_OK && keys > 10);
  const char *key = NULL, *fallback = NULL, *help = NULL;
  EXPECT(nddr_command_key("train", 0, &key, &fallback, &help) == NDDR_OK);
  EXPECT(key && strcmp(key, "mode") == 0);
  EXPECT(nddr_command_key_count("bogus", &keys) == NDDR_ERR_INVALID_ARGUMENT);
  EXPECT(strstr(nddr_last_error(), "bogus") != NULL);

  /* null handles are rejected, not dereferenced */
  EXPECT(nddr_spec_create(NULL, NULL) == NDDR_ERR_INVALID_ARGUMENT);
  EXPECT(nddr_dataset_size(NULL, NULL, NULL, NULL) == NDDR_ERR_INVALID_ARGUMENT);

  /* datasets */
  nddr_dataset *a = NULL, *b = NULL, *c = NULL;
  EXPECT(nddr_dataset_shapes(4, 16, 3, 5, "train", &a) == NDDR_OK);
  EXPECT(nddr_dataset_shapes(4, 30, 3, 5, "train", &c) == NDDR_ERR_INVALID_ARGUMENT);
  size_t n = 0, tasks = 0;
  int64_t hw = 0;
  EXPECT(nddr_dataset_size(a, &n, &hw, &tasks) == NDDR_OK && n == 4 && hw == 16 && tasks == 2);
  EXPECT(nddr_dataset_save(a, data_dir) == NDDR_OK);
  EXPECT(nddr_dataset_load(data_dir, &b) == NDDR_OK);
  int equal = 0;
  EXPECT(nddr_dataset_equal(a, b, &equal) == NDDR_OK && equal == 1);
  EXPECT(nddr_dataset_load("/nonexistent-nddr-dir", &c) == NDDR_ERR_IO);

  /* a short training run through a config file plus an explicit override */
  FILE* f = fopen(cfg_path, "w");
  EXPECT(f != NULL);
  if (f) {
    fprintf(f, "mode = single\nsteps = 50\n# comment\nbatch-size = 2\n");
    fclose(f);
  }
  nddr_spec* spec = NULL;
  EXPECT(nddr_spec_create("train", &spec) == NDDR_OK);
  EXPECT(nddr_spec_load_config(spec, cfg_path) == NDDR_OK);
  EXPECT(nddr_spec_set(spec, "steps", "3") == NDDR_OK);
  EXPECT(nddr_spec_set(spec, "data", data_dir) == NDDR_OK);
  EXPECT(nddr_spec_set(spec, "out", run_dir) == NDDR_OK);
  const char* json = NULL;
  EXPECT(nddr_spec_resolved_json(spec, &json) == NDDR_OK);
  EXPECT(json && strstr(json, "\"steps\": \"3\"") != NULL);
  EXPECT(json && strstr(json, "\"batch-size\": \"2\"") != NULL);
  int mine = 0, code = -1;
  EXPECT(nddr_run(spec, count_line, &mine, &code) == NDDR_OK && code == 0);
  EXPECT(mine > 0);
  nddr_spec_destroy(spec);

  /* the echo replays */
  nddr_spec* replay = NULL;
  char echo[1024];
  path(echo, sizeof echo, run_dir, "run.json");
  f = fopen(echo, "rb");
  EXPECT(f != NULL);
  if (f) {
    static char text[65536];
    size_t got = fread(text, 1, sizeof text - 1, f);
    text[got] = '\0';
    fclose(f);
    EXPECT(nddr_spec_from_json(text, &replay) == NDDR_OK);
    const char* again = NULL;
    EXPECT(nddr_spec_resolved_json(replay, &again) == NDDR_OK);
    EXPECT(again && strcmp(again, text) == 0);
    nddr_spec_destroy(replay);
  }

  /* evaluate the checkpoint */
  nddr_net* net = NULL;
  EXPECT(nddr_net_load(ckpt, &net) == NDDR_OK);
  int64_t params = 0;
  EXPECT(nddr_net_parameter_count(net, &params) == NDDR_OK && params > 0);
  const char* report = NULL;
  EXPECT(nddr_net_evaluate(net, b, 2, &report) == NDDR_OK);
  EXPECT(report && strstr(report, "\"pacc\"") != NULL);
  nddr_net_destroy(net);
  EXPECT(nddr_net_load("/nonexistent.ckpt", &net) == NDDR_ERR_IO);

  /* usage errors */
  nddr_spec* broken = NULL;
  EXPECT(nddr_spec_create("train", &broken) == NDDR_OK);
  EXPECT(nddr_run(broken, NULL, NULL, &code) == NDDR_ERR_INVALID_ARGUMENT);
  EXPECT(strstr(nddr_last_error(), "--data") != NULL);
  nddr_spec_destroy(broken);
  EXPECT(nddr_spec_create("frobnicate", &broken) == NDDR_ERR_INVALID_ARGUMENT);

  /* fusion ledger */
  const int64_t vgg[5] = {64, 128, 256, 512, 512};
  int64_t per_task = 0, total = 0;
  EXPECT(nddr_count_fusion_params(2, vgg, 5, 0, &per_task, &total) == NDDR_OK);
  EXPECT(per_task == 1220608 && total == 2441216);

  nddr_dataset_destroy(a);
  nddr_dataset_destroy(b);
  nddr_dataset_destroy(NULL);
  if (failures) fprintf(stderr, "%d failure(s)\n", failures);
  else printf("capi: all checks passed (%d progress lines)\n", lines);
  return failures ? 1 : 0;
}
