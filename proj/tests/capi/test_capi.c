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

/* C API checks, compiled as C so the header stays C-clean. */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "npat/npat.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

#define EXPECT_OK(call)                                                                    \
  do {                                                                                     \
    npat_status s_ = (call);                                                               \
    if (s_ != NPAT_OK) {                                                                   \
      fprintf(stderr, "%s:%d: %s -> %s: %s\n", __FILE__, __LINE__, #call, npat_status_name(s_), \
              npat_last_error());                                                          \
      ++failures;                                                                          \
    }                                                                                      \
  } while (0)

static const char* kTiny[][2] = {
    {"num_songs", "3"},     {"num_train", "2"},   {"min_notes", "2"},        {"max_notes", "2"},
    {"encoder_dim", "6"},   {"query_dim", "6"},   {"decoder_dim", "6"},      {"prenet1", "6"},
    {"prenet2", "4"},       {"aux_embed", "3"},   {"att_hidden", "4"},       {"att_embed", "3"},
    {"att_channels", "2"},  {"att_kernel", "5"},  {"postnet_channels", "4"}, {"postnet_layers", "2"},
    {"steps", "3"},         {"checkpoint_every", "2"}, {"threads", "1"},
};

static int progress_calls = 0;
static int last_step = 0;

static void on_progress(void* user, const char* mode, const npat_step_log* log) {
  EXPECT(user == &progress_calls);
  EXPECT(mode != NULL);
  EXPECT(log->step == last_step + 1);
  EXPECT(isfinite(log->total));
  last_step = log->step;
  ++progress_calls;
}

static void test_errors(void) {
  npat_config* c = NULL;
  char buf[8];
  size_t needed = 0;

  EXPECT(npat_config_new(NULL) == NPAT_ERR_INVALID_ARGUMENT);
  EXPECT(strlen(npat_last_error()) > 0);
  EXPECT_OK(npat_config_new(&c));
  EXPECT(strcmp(npat_last_error(), "") == 0);

  EXPECT(npat_config_set(c, "no_such_key", "1") == NPAT_ERR_CONFIG);
  EXPECT(strstr(npat_last_error(), "no_such_key") != NULL);
  EXPECT(npat_config_set(c, "steps", "ten") == NPAT_ERR_CONFIG);
  EXPECT(npat_config_set(c, "mode", "bogus") == NPAT_OK);
  EXPECT(npat_config_validate(c) == NPAT_ERR_CONFIG);
  EXPECT_OK(npat_config_set(c, "mode", "prop"));
  EXPECT_OK(npat_config_validate(c));
  EXPECT(npat_config_load(c, "/nonexistent/npat.cfg") == NPAT_ERR_IO);

  /* buffer protocol */
  EXPECT(npat_config_get(c, "lambda", buf, 2, &needed) == NPAT_ERR_BUFFER_TOO_SMALL);
  EXPECT(needed == 5);
  EXPECT_OK(npat_config_get(c, "lambda", buf, sizeof buf, &needed));
  EXPECT(strcmp(buf, "10.0") == 0);
  EXPECT(npat_config_format(c, NULL, 0, &needed) == NPAT_ERR_BUFFER_TOO_SMALL);
  EXPECT(needed > 100);

  double lambda = -1.0;
  EXPECT_OK(npat_config_effective_lambda(c, &lambda));
  EXPECT(lambda == 10.0);
  EXPECT_OK(npat_config_set(c, "mode", "base"));
  EXPECT_OK(npat_config_effective_lambda(c, &lambda));
  EXPECT(lambda == 0.0);

  EXPECT(npat_mode_count() == 9);
  EXPECT(strcmp(npat_mode_name(0), "base") == 0);
  EXPECT(strcmp(npat_mode_name(4), "prop") == 0);
  EXPECT(npat_mode_name(9) == NULL);

  EXPECT(strcmp(npat_status_name(NPAT_ERR_DIMENSION), "dimension mismatch") == 0);
  EXPECT(npat_report_modes(NULL) == 0);
  EXPECT(npat_report_csv(NULL, buf, sizeof buf, &needed) == NPAT_ERR_INVALID_ARGUMENT);
  npat_config_free(c);
  npat_config_free(NULL);
  npat_report_free(NULL);
}

static void test_pipeline(const char* root) {
  char data[512], out[512], path[600], sum1[17], sum2[17];
  npat_config* c = NULL;
  npat_report* r = NULL;
  npat_metrics m;
  size_t i, needed = 0;
  FILE* f;

  snprintf(data, sizeof data, "%s/data", root);
  snprintf(out, sizeof out, "%s/out", root);
  EXPECT_OK(npat_config_new(&c));
  for (i = 0; i < sizeof kTiny / sizeof kTiny[0]; ++i) EXPECT_OK(npat_config_set(c, kTiny[i][0], kTiny[i][1]));
  EXPECT_OK(npat_config_set(c, "data_dir", data));
  EXPECT_OK(npat_config_set(c, "out_dir", out));

  EXPECT(npat_eval(c, &r) != NPAT_OK); /* no corpus yet */
  EXPECT_OK(npat_gen_data(c, sum1));
  EXPECT(strlen(sum1) == 16);
  EXPECT_OK(npat_corpus_checksum(c, sum2));
  EXPECT(strcmp(sum1, sum2) == 0);

  EXPECT_OK(npat_train(c, on_progress, &progress_calls));
  EXPECT(progress_calls == 3);
  snprintf(path, sizeof path, "%s/train_log.csv", out);
  f = fopen(path, "r");
  EXPECT(f != NULL);
  if (f) fclose(f);

  EXPECT_OK(npat_eval(c, &r));
  EXPECT(npat_report_modes(r) == 1);
  EXPECT(npat_report_songs(r) == 1);
  EXPECT_OK(npat_report_get(r, 0, 1, &m));
  EXPECT(m.monotonicity >= 0.0 && m.monotonicity <= 1.0);
  EXPECT(npat_report_get(r, 0, 2, &m) == NPAT_ERR_INVALID_ARGUMENT);
  EXPECT(npat_report_get(r, 1, 0, &m) == NPAT_ERR_INVALID_ARGUMENT);
  EXPECT(npat_report_csv(r, NULL, 0, &needed) == NPAT_ERR_BUFFER_TOO_SMALL);
  {
    char* csv = (char*)malloc(needed);
    EXPECT_OK(npat_report_csv(r, csv, needed, &needed));
    EXPECT(strncmp(csv, "song,", 5) == 0);
    free(csv);
  }
  npat_report_free(r);

  EXPECT_OK(npat_export_alignment(c, 2, NULL));
  EXPECT_OK(npat_export_penalty(c, 0, NULL));
  EXPECT_OK(npat_synth(c, 2, NULL));
  EXPECT(npat_synth(c, 7, NULL) == NPAT_ERR_INVALID_ARGUMENT);
  EXPECT(npat_synth(c, -1, NULL) == NPAT_ERR_INVALID_ARGUMENT);
  snprintf(path, sizeof path, "%s/song_0002.alignment.pgm", out);
  f = fopen(path, "rb");
  EXPECT(f != NULL);
  if (f) fclose(f);

  /* checkpoint from a different shape */
  EXPECT_OK(npat_config_set(c, "decoder_dim", "5"));
  EXPECT(npat_eval(c, &r) == NPAT_ERR_DIMENSION);
  EXPECT(strstr(npat_last_error(), "does not match") != NULL);
  npat_config_free(c);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    fprintf(stderr, "usage: test_capi SCRATCH_DIR\n");
    return 2;
  }
  test_errors();
  test_pipeline(argv[1]);
  if (failures) {
    fprintf(stderr, "%d check(s) failed\n", failures);
    return 1;
  }
  printf("test_capi: all checks passed\n");
  return 0;
}
