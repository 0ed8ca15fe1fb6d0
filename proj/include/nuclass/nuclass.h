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

/* C interface to the nuclass library.
 *
 * Every function returns an nc_status; on failure a message is available
 * from nc_last_error() on the calling thread until its next call into the
 * library. Strings returned through char** out-parameters are owned by the
 * caller and released with nc_free_string(). Frames are planar float
 * (channel, row, column) with values in [0,1]. Configurations and reports
 * are UTF-8 JSON. */

#ifndef NUCLASS_NUCLASS_H_
#define NUCLASS_NUCLASS_H_

#include <stddef.h>

#if defined(_WIN32)
#define NC_API __declspec(dllexport)
#else
#define NC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nc_status {
  NC_OK = 0,
  NC_CONFIG_ERROR = 1,
  NC_SHAPE_ERROR = 2,
  NC_IO_ERROR = 3,
  NC_RANGE_ERROR = 4,
  NC_ENVIRONMENT_ERROR = 5,
  NC_ALIGNMENT_ERROR = 6,
  NC_STALE_ERROR = 7,
  NC_PRECONDITION_ERROR = 8,
  NC_NUMERIC_ERROR = 9,
  NC_INVALID_ARGUMENT = 10, /* null handle or pointer, bad enum string */
  NC_INTERNAL_ERROR = 11
} nc_status;

typedef struct nc_model nc_model;
typedef struct nc_frames nc_frames;
typedef struct nc_dataset nc_dataset;

NC_API const char* nc_version(void);
NC_API const char* nc_status_string(nc_status status);
NC_API const char* nc_last_error(void);
NC_API void nc_free_string(char* s);
/* trace, debug, info, warn, error, critical or off. */
NC_API nc_status nc_set_log_level(const char* level);

/* ---- models ---- */

/* config_json may be NULL for the defaults; unknown fields are rejected. */
NC_API nc_status nc_model_create(const char* config_json, nc_model** out);
/* quant_json (optional) receives the fixed-point spec or "null". */
NC_API nc_status nc_model_load(const char* path, nc_model** out, char** quant_json);
/* Quantized models are written with integer payloads. */
NC_API nc_status nc_model_save(const nc_model* model, const char* path);
/* Config, parameter count, receptive field and block counts. */
NC_API nc_status nc_model_info(const nc_model* model, char** json);
/* residual receives channels*height*width values in [-1,1]. */
NC_API nc_status nc_model_forward(const nc_model* model, const float* frame, int channels, int height, int width,
                                  float* residual);
NC_API void nc_model_free(nc_model* model);

/* ---- frame sequences ---- */

/* data holds count frames of channels*height*width values each. */
NC_API nc_status nc_frames_create(size_t count, int channels, int height, int width, const float* data,
                                  nc_frames** out);
/* Every *.png of a directory in name order. */
NC_API nc_status nc_frames_read_dir(const char* dir, nc_frames** out);
/* Lossless 8-bit PNGs named 000000.png, 000001.png, ... */
NC_API nc_status nc_frames_write_dir(const nc_frames* frames, const char* dir);
NC_API nc_status nc_frames_count(const nc_frames* frames, size_t* count);
NC_API nc_status nc_frames_shape(const nc_frames* frames, size_t index, int* channels, int* height, int* width);
NC_API nc_status nc_frames_copy(const nc_frames* frames, size_t index, float* out);
NC_API void nc_frames_free(nc_frames* frames);

/* ---- enhancement ---- */

/* variant is "base", "sequential" or "diffusion" (three models, applied in
 * order). resets (optional, one byte per frame) restarts the sequential
 * feedback at frames where it is nonzero. */
NC_API nc_status nc_enhance(const char* variant, const nc_model* const* models, size_t n_models,
                            const nc_frames* input, const unsigned char* resets, int jobs, nc_frames** out);

/* ---- metrics ---- */

/* psnr_db is set to +inf for identical frames. */
NC_API nc_status nc_frame_metrics(const float* a, const float* b, int channels, int height, int width,
                                  double* psnr_db, double* ssim);
/* Per-frame and mean MAE/MSE/PSNR/SSIM plus the 30 dB / 0.9 quality gate. */
NC_API nc_status nc_evaluate(const nc_frames* a, const nc_frames* b, int jobs, char** json, char** csv);
/* Both (compressed, raw) and (enhanced, raw) rows with gates and a
 * side-by-side per-frame CSV. */
NC_API nc_status nc_compare(const nc_frames* compressed, const nc_frames* enhanced, const nc_frames* raw, int jobs,
                            char** json, char** csv);

/* ---- datasets ---- */

NC_API nc_status nc_dataset_build(const char* config_json, nc_dataset** out);
/* Fails with NC_STALE_ERROR if the manifest was edited. */
NC_API nc_status nc_dataset_open(const char* manifest_path, nc_dataset** out);
NC_API nc_status nc_dataset_manifest(const nc_dataset* dataset, char** json);
/* table (optional) receives a human-readable rendering. */
NC_API nc_status nc_dataset_bitrates(const nc_dataset* dataset, char** json, char** table);
/* split is "train" or "test". */
NC_API nc_status nc_dataset_load(const nc_dataset* dataset, const char* split, int jobs, nc_frames** compressed,
                                 nc_frames** raw);
NC_API void nc_dataset_free(nc_dataset* dataset);

/* ---- training ---- */

/* Trains in place: one model for base and sequential, three for diffusion
 * (the variant comes from config_json). The report is JSON; curve_csv
 * (optional) receives the per-epoch loss table. */
NC_API nc_status nc_train(nc_model* const* models, size_t n_models, const nc_dataset* dataset,
                          const char* config_json, char** report_json, char** curve_csv);
NC_API nc_status nc_train_frames(nc_model* const* models, size_t n_models, const nc_frames* train_compressed,
                                 const nc_frames* train_raw, const nc_frames* test_compressed,
                                 const nc_frames* test_raw, const char* config_json, char** report_json,
                                 char** curve_csv);

/* ---- quantization ---- */

/* frac_bits < 0 picks the largest fractional width that fits every
 * parameter. report_json (optional) holds the bit widths and size accounting. */
NC_API nc_status nc_quantize(const nc_model* model, int total_bits, int frac_bits, nc_model** out,
                             char** report_json);
/* raw may be NULL, in which case only output deviation is reported. */
NC_API nc_status nc_quantization_deviation(const nc_model* model, const nc_model* quantized, const nc_frames* probe,
                                           const nc_frames* raw, double gate, int jobs, char** json);

#ifdef __cplusplus
}
#endif

#endif /* NUCLASS_NUCLASS_H_ */
