// Copyright 2026 The zfumes Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// C interface to the zfumes simulation engine. Every function returns a
// status code; on failure zf_last_error() describes the problem. Strings
// returned through out-parameters stay valid until the owning handle is
// destroyed or, for zf_last_error, until the next failing call on the same
// thread.

#ifndef ZFUMES_ZFUMES_H
#define ZFUMES_ZFUMES_H

#include <stddef.h>

#if defined(_WIN32)
#define ZF_API __declspec(dllexport)
#else
#define ZF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum {
  ZF_OK = 0,
  ZF_ERR_INVALID = 2,  // bad argument, option or configuration
  ZF_ERR_RUNTIME = 3   // numerical or I/O failure
};

typedef struct zf_job zf_job;
typedef struct zf_table zf_table;

ZF_API const char* zf_version(void);
ZF_API const char* zf_last_error(void);

// Options shared by every command, with one-line help text.
ZF_API size_t zf_option_count(void);
ZF_API int zf_option_info(size_t index, const char** key, const char** help);

// Commands: bh-projective, bh-continuous, bh-ramp, toy, random-ham, formulas.
ZF_API int zf_job_create(const char* command, zf_job** out);
ZF_API void zf_job_destroy(zf_job* job);
ZF_API int zf_job_set(zf_job* job, const char* key, const char* value);
ZF_API int zf_job_validate(const zf_job* job);
ZF_API int zf_job_run(const zf_job* job, zf_table** out);

ZF_API void zf_table_destroy(zf_table* table);
ZF_API int zf_table_shape(const zf_table* table, size_t* rows, size_t* columns);
ZF_API int zf_table_column_name(const zf_table* table, size_t column, const char** out);
// Numeric cell; missing values read as NaN. Text cells are an error.
ZF_API int zf_table_value(const zf_table* table, size_t row, size_t column, double* out);
// Any cell as it appears in CSV output.
ZF_API int zf_table_text(const zf_table* table, size_t row, size_t column, const char** out);
ZF_API int zf_table_summary_count(const zf_table* table, size_t* out);
ZF_API int zf_table_summary(const zf_table* table, size_t index, const char** key, const char** value);
// format: "csv" or "json".
ZF_API int zf_table_render(const zf_table* table, const char* format, const char** out);
ZF_API int zf_table_write(const zf_table* table, const char* path, const char* format);

// Closed-form results for a chain of L sites (L = N) or L observables with
// B outcomes each.
ZF_API int zf_mott_probability(int sites, double* out);
ZF_API int zf_mf_exact(int sites, double* out);
ZF_API int zf_mf_asymptotic(int sites, double* out);
ZF_API int zf_mz_bound(int sites, double* out);
ZF_API int zf_mz_bound_sum(int sites, double* out);
ZF_API int zf_p_lock_uniform(int site, int sites, double* out);
ZF_API int zf_p_avg(int sites, double* exact, double* expansion, double* leading);
ZF_API int zf_mz_general(int outcomes, int observables, double* sum, double* approx);

#ifdef __cplusplus
}
#endif

#endif  // ZFUMES_ZFUMES_H
