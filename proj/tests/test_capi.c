/* Copyright 2026 The nuclass Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

/* Exercises the shared library through its C header only. */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "nuclass/nuclass.h"

static int failures = 0;
static int checks = 0;

#define CHECK(cond)                                                   \
  do {                                                                \
    ++checks;                                                         \
    if (!(cond)) {                                                    \
      ++failures;                                                     \
      fprintf(stderr, "%s:%d: CHECK(%s) failed; last error: %s\n", __FILE__, __LINE__, #cond, nc_last_error()); \
    }                                                                 \
  } while (0)

#define TINY "{\"base_channels\": 2, \"kernel\": 3, \"seed\": 1}"

static int contains(const char* s, const char* needle) { return s && strstr(s, needle) != NULL; }

static void test_errors(void) {
  nc_model* m = NULL;
  CHECK(strlen(nc_version()) > 0);
  CHECK(strcmp(nc_status_string(NC_STALE_ERROR), "stale data") == 0);
  CHECK(nc_model_create("{not json", &m) == NC_CONFIG_ERROR);
  CHECK(m == NULL);
  CHECK(nc_model_create("{\"base_channel\": 2}", &m) == NC_CONFIG_ERROR);
  CHECK(contains(nc_last_error(), "base_channel"));
  CHECK(nc_model_create(TINY, NULL) == NC_INVALID_ARGUMENT);
  CHECK(nc_set_log_level("loud") == NC_INVALID_ARGUMENT);
  CHECK(nc_set_log_level("warn") == NC_OK);
  CHECK(strcmp(nc_last_error(), "") == 0);
  {
    nc_dataset* d = NULL;
    CHECK(nc_dataset_open("/nonexistent/manifest.json", &d) == NC_IO_ERROR);
    CHECK(contains(nc_last_error(), "/nonexistent/manifest.json"));
  }
}

static void test_model_and_enhance(const char* tmpdir) {
  enum { C = 3, H = 12, W = 16, N = 4 };
  float frames[N * C * H * W];
  float residual[C * H * W];
  nc_model* m = NULL;
  nc_model* stages[3] = {NULL, NULL, NULL};
  nc_frames* in = NULL;
  nc_frames* out = NULL;
  char* json = NULL;
  char* csv = NULL;
  char path[1024];
  size_t i, count = 0;
  int c = 0, h = 0, w = 0;
  double psnr = 0, ssim = 0;

  for (i = 0; i < N * C * H * W; ++i) frames[i] = (float)((i * 37) % 101) / 100.0f;
  CHECK(nc_model_create(TINY, &m) == NC_OK);
  CHECK(nc_model_info(m, &json) == NC_OK);
  CHECK(contains(json, "\"encoder_blocks\":6"));
  CHECK(contains(json, "\"downsampling_stages\":2"));
  nc_free_string(json);

  /* A fresh model predicts the zero residual. */
  CHECK(nc_model_forward(m, frames, C, H, W, residual) == NC_OK);
  for (i = 0; i < C * H * W; ++i) CHECK(residual[i] == 0.0f);
  CHECK(nc_model_forward(m, frames, C, 10, W, residual) == NC_SHAPE_ERROR);
  CHECK(contains(nc_last_error(), "divisible"));

  CHECK(nc_frames_create(N, C, H, W, frames, &in) == NC_OK);
  CHECK(nc_frames_count(in, &count) == NC_OK && count == N);
  CHECK(nc_enhance("base", (const nc_model* const*)&m, 1, in, NULL, 2, &out) == NC_OK);
  CHECK(nc_frames_count(out, &count) == NC_OK && count == N);
  CHECK(nc_frames_shape(out, 3, &c, &h, &w) == NC_OK && c == C && h == H && w == W);
  {
    float back[C * H * W];
    CHECK(nc_frames_copy(out, 2, back) == NC_OK);
    CHECK(memcmp(back, frames + 2 * C * H * W, sizeof back) == 0);
    CHECK(nc_frames_copy(out, 9, back) == NC_INVALID_ARGUMENT);
  }
  CHECK(nc_evaluate(in, out, 1, &json, &csv) == NC_OK);
  CHECK(contains(json, "quality_gate"));
  CHECK(contains(csv, "psnr"));
  nc_free_string(json);
  nc_free_string(csv);
  CHECK(nc_frame_metrics(frames, frames, C, H, W, &psnr, &ssim) == NC_OK);
  CHECK(isinf(psnr) && ssim == 1.0);
  nc_frames_free(out);
  out = NULL;

  CHECK(nc_model_create(TINY, &stages[0]) == NC_OK);
  CHECK(nc_model_create(TINY, &stages[1]) == NC_OK);
  CHECK(nc_enhance("diffusion", (const nc_model* const*)stages, 2, in, NULL, 1, &out) == NC_CONFIG_ERROR);
  CHECK(out == NULL);
  CHECK(nc_enhance("sideways", (const nc_model* const*)&m, 1, in, NULL, 1, &out) == NC_CONFIG_ERROR);
  {
    unsigned char resets[N] = {1, 0, 1, 0};
    CHECK(nc_enhance("sequential", (const nc_model* const*)&m, 1, in, resets, 1, &out) == NC_OK);
    nc_frames_free(out);
  }

  /* Checkpoints and quantization. */
  snprintf(path, sizeof path, "%s/m.ckpt", tmpdir);
  CHECK(nc_model_save(m, path) == NC_OK);
  {
    nc_model* back = NULL;
    nc_model* q = NULL;
    nc_model* qback = NULL;
    CHECK(nc_model_load(path, &back, &json) == NC_OK);
    CHECK(strcmp(json, "null") == 0);
    nc_free_string(json);
    CHECK(nc_quantize(m, 16, -1, &q, &json) == NC_OK);
    CHECK(contains(json, "\"payload_ratio\":0.5"));
    nc_free_string(json);
    snprintf(path, sizeof path, "%s/q.ckpt", tmpdir);
    CHECK(nc_model_save(q, path) == NC_OK);
    CHECK(nc_model_load(path, &qback, &json) == NC_OK);
    CHECK(contains(json, "\"total_bits\":16"));
    nc_free_string(json);
    CHECK(nc_quantization_deviation(m, qback, in, NULL, 0.01, 1, &json) == NC_OK);
    CHECK(contains(json, "within_gate"));
    nc_free_string(json);
    CHECK(nc_quantize(m, 1, -1, &q, NULL) != NC_OK);
    nc_model_free(back);
    nc_model_free(q);
    nc_model_free(qback);
  }
  CHECK(nc_model_load("/nonexistent.ckpt", &stages[2], NULL) == NC_IO_ERROR);

  /* Training on in-memory frames: identity targets, so losses stay tiny. */
  CHECK(nc_train_frames(&m, 1, in, in, in, in, "{\"epochs\": 2, \"batch_size\": 2}", &json, &csv) == NC_OK);
  CHECK(contains(json, "\"optimizer_steps\":4"));
  CHECK(contains(csv, "epoch,train_loss,val_loss,lr"));
  nc_free_string(json);
  nc_free_string(csv);
  CHECK(nc_train_frames(&m, 1, in, in, in, in, "{\"variant\": \"diffusion\", \"epochs\": 1}", &json, NULL) ==
        NC_CONFIG_ERROR);
  CHECK(contains(nc_last_error(), "3 models"));

  snprintf(path, sizeof path, "%s/frames", tmpdir);
  CHECK(nc_frames_write_dir(in, path) == NC_OK);
  {
    nc_frames* back = NULL;
    CHECK(nc_frames_read_dir(path, &back) == NC_OK);
    CHECK(nc_frames_count(back, &count) == NC_OK && count == N);
    nc_frames_free(back);
  }

  nc_frames_free(in);
  nc_model_free(m);
  nc_model_free(stages[0]);
  nc_model_free(stages[1]);
  nc_model_free(NULL);
  nc_frames_free(NULL);
}

int main(int argc, char** argv) {
  const char* tmpdir = argc > 1 ? argv[1] : ".";
  test_errors();
  test_model_and_enhance(tmpdir);
  printf("%d checks, %d failures\n", checks, failures);
  return failures ? 1 : 0;
}
