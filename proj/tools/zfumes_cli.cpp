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

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "zfumes/zfumes.h"

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitRuntime = 3;

struct Failure {
  int code;
  std::string message;
};

void check(int rc, const std::string& context = {}) {
  if (rc != ZF_OK) throw Failure{rc, context.empty() ? zf_last_error() : context + ": " + zf_last_error()};
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// "key = value" lines; '#' starts a comment; keys may carry leading dashes.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Failure{kExitInvalid, "cannot read config file '" + path + "'"};
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    std::string key = eq == std::string::npos ? std::string() : trim(line.substr(0, eq));
    while (!key.empty() && key.front() == '-') key.erase(0, 1);
    if (key.empty()) {
      throw Failure{kExitInvalid, path + ":" + std::to_string(number) + ": expected key = value"};
    }
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

struct Output {
  std::string path;
  std::string format = "csv";
  bool quiet = false;
};

int run(const std::string& command, const std::string& config_path, const std::map<std::string, std::string>& flags,
        Output output) {
  zf_job* raw = nullptr;
  check(zf_job_create(command.c_str(), &raw));
  std::unique_ptr<zf_job, decltype(&zf_job_destroy)> job(raw, zf_job_destroy);

  if (!config_path.empty()) {
    for (const auto& [key, value] : read_config(config_path)) {
      if (key == "out") {
        output.path = value;
      } else if (key == "format") {
        output.format = value;
      } else {
        check(zf_job_set(job.get(), key.c_str(), value.c_str()), config_path);
      }
    }
  }
  for (const auto& [key, value] : flags) {
    if (key == "out") {
      output.path = value;
    } else if (key == "format") {
      output.format = value;
    } else {
      check(zf_job_set(job.get(), key.c_str(), value.c_str()), "--" + key);
    }
  }
  if (output.format != "csv" && output.format != "json") {
    throw Failure{kExitInvalid, "--format: expected csv or json, got '" + output.format + "'"};
  }
  check(zf_job_validate(job.get()));

  zf_table* table_raw = nullptr;
  check(zf_job_run(job.get(), &table_raw));
  std::unique_ptr<zf_table, decltype(&zf_table_destroy)> table(table_raw, zf_table_destroy);

  if (output.path.empty()) {
    const char* text = nullptr;
    check(zf_table_render(table.get(), output.format.c_str(), &text));
    std::fputs(text, stdout);
    std::fflush(stdout);
  } else {
    check(zf_table_write(table.get(), output.path.c_str(), output.format.c_str()));
  }
  if (!output.quiet) {
    std::size_t n = 0;
    check(zf_table_summary_count(table.get(), &n));
    for (std::size_t i = 0; i < n; ++i) {
      const char* key = nullptr;
      const char* value = nullptr;
      check(zf_table_summary(table.get(), i, &key, &value));
      std::fprintf(stderr, "%s: %s\n", key, value);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measurement-feedback state preparation: trajectories, ensembles and closed forms.", "zfumes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", zf_version());

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"bh-projective", "projective FUMES / Z-FUMES on the Bose-Hubbard chain (tables: fidelity, scaling, locks, events)"},
      {"bh-continuous", "continuous homodyne monitoring with Zeno locks (tables: fidelity, records)"},
      {"bh-ramp", "final Mott fidelity of a linear U ramp against ramp time (table: fidelity)"},
      {"toy", "reshuffling toy model (tables: scaling, locks, events)"},
      {"random-ham", "state transfer under random Hamiltonians (table: scaling)"},
      {"formulas", "closed-form counts and lock probabilities (table: values)"},
  };

  std::string config_path;
  Output output;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  std::vector<std::pair<std::string, std::string>> keys;
  for (std::size_t i = 0; i < zf_option_count(); ++i) {
    const char* key = nullptr;
    const char* help = nullptr;
    if (zf_option_info(i, &key, &help) == ZF_OK) keys.emplace_back(key, help);
  }

  for (const auto& [name, description] : commands) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->add_option("--config", config_path, "key = value file; flags override it");
    sub->add_option("--out", values["out"], "output file (default: standard output)");
    sub->add_option("--format", values["format"], "csv or json (default csv)");
    sub->add_flag("--quiet", output.quiet, "suppress the run summary on standard error");
    for (const auto& [key, help] : keys) {
      options.emplace_back(key, sub->add_option("--" + key, values[key], help));
    }
    options.emplace_back("out", sub->get_option("--out"));
    options.emplace_back("format", sub->get_option("--format"));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::fprintf(stderr, "zfumes: error: %s\n", e.what());
    return kExitInvalid;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  std::map<std::string, std::string> flags;
  for (const auto& [key, opt] : options) {
    if (opt->count() > 0) flags[key] = values[key];
  }

  try {
    return run(chosen->get_name(), config_path, flags, output);
  } catch (const Failure& f) {
    std::fprintf(stderr, "zfumes: error: %s\n", f.message.c_str());
    return f.code == ZF_ERR_INVALID ? kExitInvalid : kExitRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "zfumes: error: %s\n", e.what());
    return kExitRuntime;
  }
}
