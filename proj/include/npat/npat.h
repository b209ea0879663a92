/*
 * Copyright (c) 2026, The npat Authors. All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef NPAT_NPAT_H
#define NPAT_NPAT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NPAT_API __declspec(dllexport)
#else
#define NPAT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum npat_status {
  NPAT_OK = 0,
  NPAT_ERR_INVALID_ARGUMENT = 1,
  NPAT_ERR_DIMENSION = 2,
  NPAT_ERR_NUMERIC = 3,
  NPAT_ERR_PARSE = 4,
  NPAT_ERR_IO = 5,
  NPAT_ERR_CONFIG = 6,
  NPAT_ERR_ALIGNMENT_COLLAPSE = 7,
  NPAT_ERR_BUFFER_TOO_SMALL = 8,
  NPAT_ERR_INTERNAL = 99
} npat_status;

/* Message of the last failed call on this thread; "" after a success. */
NPAT_API const char* npat_last_error(void);
NPAT_API const char* npat_status_name(npat_status status);
NPAT_API const char* npat_version(void);

/*
 * String outputs: the text plus its terminator is copied into buf when cap is
 * large enough. *needed (if non-null) always receives the required size.
 * Returns NPAT_ERR_BUFFER_TOO_SMALL otherwise.
 */

/* ---- configuration ---- */

typedef struct npat_config npat_config;

NPAT_API npat_status npat_config_new(npat_config** out);
NPAT_API void npat_config_free(npat_config* config);
/* Applies a key = value file on top of the current values. */
NPAT_API npat_status npat_config_load(npat_config* config, const char* path);
NPAT_API npat_status npat_config_set(npat_config* config, const char* key, const char* value);
NPAT_API npat_status npat_config_get(const npat_config* config, const char* key, char* buf, size_t cap,
                                     size_t* needed);
NPAT_API npat_status npat_config_format(const npat_config* config, char* buf, size_t cap, size_t* needed);
NPAT_API npat_status npat_config_validate(const npat_config* config);
/* lambda as applied in training: 0 for systems without the guided loss. */
NPAT_API npat_status npat_config_effective_lambda(const npat_config* config, double* out);

NPAT_API size_t npat_mode_count(void);
NPAT_API const char* npat_mode_name(size_t index);

/* ---- metrics report ---- */

typedef struct npat_metrics {
  double feature_loss;
  double guided_loss;
  double timing_mae_frames;
  double monotonicity;
  double f0_rmse_cents;
  double missing_morae;
} npat_metrics;

typedef struct npat_report npat_report;

NPAT_API void npat_report_free(npat_report* report);
/* Number of evaluated modes (1 unless the report came from npat_ablate). */
NPAT_API size_t npat_report_modes(const npat_report* report);
/* Songs per mode, excluding the aggregate. */
NPAT_API size_t npat_report_songs(const npat_report* report);
/* song == npat_report_songs() selects the aggregate. */
NPAT_API npat_status npat_report_get(const npat_report* report, size_t mode, size_t song, npat_metrics* out);
NPAT_API npat_status npat_report_csv(const npat_report* report, char* buf, size_t cap, size_t* needed);
NPAT_API npat_status npat_report_table(const npat_report* report, char* buf, size_t cap, size_t* needed);

/* ---- commands; every path comes from the config ---- */

typedef struct npat_step_log {
  int step;
  double feat_dec;
  double feat_post;
  double guided;
  double total;
  double grad_norm;
} npat_step_log;

/* Called after every optimizer step; mode names the system being trained. */
typedef void (*npat_progress_fn)(void* user, const char* mode, const npat_step_log* log);

/* Writes the corpus to data_dir; checksum receives 16 hex digits. */
NPAT_API npat_status npat_gen_data(const npat_config* config, char checksum[17]);
NPAT_API npat_status npat_corpus_checksum(const npat_config* config, char checksum[17]);

/* Trains on data_dir, writing config.txt, train_log.csv and checkpoints under out_dir. */
NPAT_API npat_status npat_train(const npat_config* config, npat_progress_fn progress, void* user);

/* Evaluates the checkpoint on the test split and writes metrics.csv and metrics.txt under out_dir. */
NPAT_API npat_status npat_eval(const npat_config* config, npat_report** out);

/*
 * Song-level commands. song_index selects a corpus song; pass -1 with a
 * score_path to use a score file instead (not possible in noatt mode).
 */
NPAT_API npat_status npat_synth(const npat_config* config, int song_index, const char* score_path);
NPAT_API npat_status npat_export_alignment(const npat_config* config, int song_index, const char* score_path);
NPAT_API npat_status npat_export_penalty(const npat_config* config, int song_index, const char* score_path);

/* Trains and evaluates every mode in the config's modes list. */
NPAT_API npat_status npat_ablate(const npat_config* config, npat_progress_fn progress, void* user,
                                 npat_report** out);

#ifdef __cplusplus
}
#endif

#endif /* NPAT_NPAT_H */
