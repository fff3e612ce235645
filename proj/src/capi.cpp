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

#include "zfumes/zfumes.h"

#include <cmath>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "general_control.hpp"
#include "job.hpp"
#include "toy_model.hpp"

struct zf_job {
  zfumes::JobSpec spec;
};

struct zf_table {
  zfumes::JobResult result;
  std::vector<std::string> text;  // CSV rendering of each cell, row-major
  mutable std::string rendered;
};

namespace {

thread_local std::string last_error;

int fail(int code, const std::string& message) {
  last_error = message;
  return code;
}

template <class F>
int guarded(F&& body) {
  try {
    body();
    return ZF_OK;
  } catch (const zfumes::InvalidArgument& e) {
    return fail(ZF_ERR_INVALID, e.what());
  } catch (const std::bad_alloc&) {
    return fail(ZF_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(ZF_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(ZF_ERR_RUNTIME, "unknown error");
  }
}

#define ZF_REQUIRE_ARG(p) \
  if (!(p)) return fail(ZF_ERR_INVALID, std::string(__func__) + ": null argument '" #p "'")

const std::vector<std::pair<std::string, std::string>>& options() {
  static const auto keys = zfumes::option_keys();
  return keys;
}

int check_cell(const zf_table* table, size_t row, size_t column) {
  const auto& t = table->result.table;
  if (row >= t.rows.size() || column >= t.columns.size()) {
    return fail(ZF_ERR_INVALID, "cell (" + std::to_string(row) + ", " + std::to_string(column) + ") out of range");
  }
  return ZF_OK;
}

template <class F>
int formula(double* out, F&& f) {
  ZF_REQUIRE_ARG(out);
  return guarded([&] { *out = f(); });
}

}  // namespace

extern "C" {

const char* zf_version(void) { return "1.0.0"; }

const char* zf_last_error(void) { return last_error.c_str(); }

size_t zf_option_count(void) { return options().size(); }

int zf_option_info(size_t index, const char** key, const char** help) {
  ZF_REQUIRE_ARG(key);
  ZF_REQUIRE_ARG(help);
  if (index >= options().size()) return fail(ZF_ERR_INVALID, "option index out of range");
  *key = options()[index].first.c_str();
  *help = options()[index].second.c_str();
  return ZF_OK;
}

int zf_job_create(const char* command, zf_job** out) {
  ZF_REQUIRE_ARG(command);
  ZF_REQUIRE_ARG(out);
  *out = nullptr;
  return guarded([&] {
    auto job = new zf_job;
    job->spec.command = zfumes::parse_command(command);
    *out = job;
  });
}

void zf_job_destroy(zf_job* job) { delete job; }

int zf_job_set(zf_job* job, const char* key, const char* value) {
  ZF_REQUIRE_ARG(job);
  ZF_REQUIRE_ARG(key);
  ZF_REQUIRE_ARG(value);
  return guarded([&] { zfumes::set_option(job->spec, key, value); });
}

int zf_job_validate(const zf_job* job) {
  ZF_REQUIRE_ARG(job);
  return guarded([&] { job->spec.validate(); });
}

int zf_job_run(const zf_job* job, zf_table** out) {
  ZF_REQUIRE_ARG(job);
  ZF_REQUIRE_ARG(out);
  *out = nullptr;
  return guarded([&] {
    auto table = new zf_table;
    try {
      table->result = zfumes::run_job(job->spec);
      const zfumes::Table& t = table->result.table;
      table->text.reserve(t.rows.size() * t.columns.size());
      for (const auto& row : t.rows) {
        for (const auto& cell : row) table->text.push_back(zfumes::cell_text(cell));
      }
    } catch (...) {
      delete table;
      throw;
    }
    *out = table;
  });
}

void zf_table_destroy(zf_table* table) { delete table; }

int zf_table_shape(const zf_table* table, size_t* rows, size_t* columns) {
  ZF_REQUIRE_ARG(table);
  ZF_REQUIRE_ARG(rows);
  ZF_REQUIRE_ARG(columns);
  *rows = table->result.table.rows.size();
  *columns = table->result.table.columns.size();
  return ZF_OK;
}

int zf_table_column_name(const zf_table* table, size_t column, const char** out) {
  ZF_REQUIRE_ARG(table);
  ZF_REQUIRE_ARG(out);
  if (column >= table->result.table.columns.size()) return fail(ZF_ERR_INVALID, "column index out of range");
  *out = table->result.table.columns[column].c_str();
  return ZF_OK;
}

int zf_table_value(const zf_table* table, size_t row, size_t column, double* out) {
  ZF_REQUIRE_ARG(table);
  ZF_REQUIRE_ARG(out);
  if (const int rc = check_cell(table, row, column); rc != ZF_OK) return rc;
  const auto& c = table->result.table.rows[row][column];
  if (const auto* i = std::get_if<long long>(&c)) {
    *out = static_cast<double>(*i);
  } else if (const auto* d = std::get_if<double>(&c)) {
    *out = *d;
  } else {
    return fail(ZF_ERR_INVALID, "column '" + table->result.table.columns[column] + "' holds text");
  }
  return ZF_OK;
}

int zf_table_text(const zf_table* table, size_t row, size_t column, const char** out) {
  ZF_REQUIRE_ARG(table);
  ZF_REQUIRE_ARG(out);
  if (const int rc = check_cell(table, row, column); rc != ZF_OK) return rc;
  *out = table->text[row * table->result.table.columns.size() + column].c_str();
  return ZF_OK;
}

int zf_table_summary_count(const zf_table* table, size_t* out) {
  ZF_REQUIRE_ARG(table);
  ZF_REQUIRE_ARG(out);
  *out = table->result.summary.size();
  return ZF_OK;
}

int zf_table_summary(const zf_table* table, size_t index, const char** key, const char** value) {
  ZF_REQUIRE_ARG(table);
  ZF_REQUIRE_ARG(key);
  ZF_REQUIRE_ARG(value);
  if (index >= table->result.summary.size()) return fail(ZF_ERR_INVALID, "summary index out of range");
  *key = table->result.summary[index].first.c_str();
  *value = table->result.summary[index].second.c_str();
  return ZF_OK;
}

int zf_table_render(const zf_table* table, const char* format, const char** out) {
  ZF_REQUIRE_ARG(table);
  ZF_REQUIRE_ARG(format);
  ZF_REQUIRE_ARG(out);
  return guarded([&] {
    const auto f = zfumes::parse_format(format);
    table->rendered = f == zfumes::OutputFormat::Csv ? zfumes::to_csv(table->result.table)
                                                     : zfumes::to_json(table->result.table);
    *out = table->rendered.c_str();
  });
}

int zf_table_write(const zf_table* table, const char* path, const char* format) {
  ZF_REQUIRE_ARG(table);
  ZF_REQUIRE_ARG(path);
  ZF_REQUIRE_ARG(format);
  return guarded([&] { zfumes::write_table(table->result.table, path, zfumes::parse_format(format)); });
}

int zf_mott_probability(int sites, double* out) {
  return formula(out, [&] {
    zfumes::require(sites >= 1, "need at least one site");
    return zfumes::multinomial_prob(zfumes::FockState::mott(sites));
  });
}

int zf_mf_exact(int sites, double* out) { return formula(out, [&] { return zfumes::mf_exact(sites); }); }

int zf_mf_asymptotic(int sites, double* out) {
  return formula(out, [&] { return zfumes::mf_asymptotic(sites); });
}

int zf_mz_bound(int sites, double* out) { return formula(out, [&] { return zfumes::mz_bound(sites); }); }

int zf_mz_bound_sum(int sites, double* out) { return formula(out, [&] { return zfumes::mz_bound_sum(sites); }); }

int zf_p_lock_uniform(int site, int sites, double* out) {
  return formula(out, [&] { return zfumes::p_lock_uniform(site, sites); });
}

int zf_p_avg(int sites, double* exact, double* expansion, double* leading) {
  ZF_REQUIRE_ARG(exact);
  ZF_REQUIRE_ARG(expansion);
  ZF_REQUIRE_ARG(leading);
  return guarded([&] {
    const auto a = zfumes::p_avg(sites);
    *exact = a.exact;
    *expansion = a.expansion;
    *leading = a.leading;
  });
}

int zf_mz_general(int outcomes, int observables, double* sum, double* approx) {
  ZF_REQUIRE_ARG(sum);
  ZF_REQUIRE_ARG(approx);
  return guarded([&] {
    const auto g = zfumes::mz_general(outcomes, observables);
    *sum = g.sum;
    *approx = g.approx;
  });
}

}  // extern "C"
