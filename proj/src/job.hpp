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

#ifndef ZFUMES_JOB_HPP
#define ZFUMES_JOB_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sse.hpp"
#include "strategy.hpp"
#include "toy_model.hpp"

namespace zfumes {

enum class Command { BhProjective, BhContinuous, BhRamp, Toy, RandomHam, Formulas };

std::string to_string(Command c);
Command parse_command(const std::string& name);

enum class OutputFormat { Csv, Json };

std::string to_string(OutputFormat f);
OutputFormat parse_format(const std::string& name);

// Every experiment the command line can run. Fields are set through
// set_option so flags, config files and the C API share one parser.
struct JobSpec {
  Command command = Command::BhProjective;
  std::string table;  // empty: the command's default table

  std::vector<int> sites{7};
  double tunneling = 1.0;
  double interaction = 0.0;  // U during bh-projective free evolution
  StrategyConfig strategy;
  bool strategy_set = false;
  bool threshold_set = false;
  bool horizon_set = false;

  SSEConfig sse;

  Distribution distribution = Distribution::Multinomial;
  int toy_max_measurements = 1000000;

  int outcomes = 2;                  // B
  std::vector<int> observables{3};   // L for random Hamiltonians
  std::size_t hamiltonians = 20;
  double epsilon_o = 0.2;
  double coupling_horizon = 20.0;
  double coupling_step = 0.05;
  int max_measurements = 100000;

  double ramp_final = 30.0;  // U/J at the end of the ramp
  int ramp_slices = 100;
  double ramp_step = 0.5;    // spacing of the total ramp times

  std::size_t trajectories = 100;
  std::uint64_t seed = 1;
  unsigned workers = 0;
  int bootstrap = 200;

  // Table names accepted by this command, the first being the default.
  std::vector<std::string> tables() const;
  std::string resolved_table() const;
  void validate() const;
};

// Keys are the long flag names without the leading dashes, e.g. "max-time".
void set_option(JobSpec& spec, const std::string& key, const std::string& value);
// (key, help) for every option.
std::vector<std::pair<std::string, std::string>> option_keys();

// "7", "3-7" or "3,5,7".
std::vector<int> parse_int_list(const std::string& text);

using Cell = std::variant<long long, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
};

// A cell as CSV prints it, before quoting.
std::string cell_text(const Cell& cell);

struct JobResult {
  Table table;
  // One-line facts about the run (T_conv, failures, ...), for logs.
  std::vector<std::pair<std::string, std::string>> summary;
};

JobResult run_job(const JobSpec& spec);

// Header row then one line per row, '\n' line ends, 9 significant digits.
// Missing values print as "nan".
std::string to_csv(const Table& table);
// {"columns": [...], "rows": [{column: value, ...}, ...]}, doubles at full
// precision, missing values as null.
std::string to_json(const Table& table);
Table table_from_json(const std::string& text);

// Writes through a temporary file in the same directory and renames it.
void write_text_atomic(const std::string& path, const std::string& text);
void write_table(const Table& table, const std::string& path, OutputFormat format);

}  // namespace zfumes

#endif  // ZFUMES_JOB_HPP
