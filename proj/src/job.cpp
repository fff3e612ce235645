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

#include "job.hpp"

#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "ensemble.hpp"
#include "errors.hpp"
#include "general_control.hpp"
#include "measurement.hpp"

namespace zfumes {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used > 0 && used == t.size() && std::isfinite(v), key + ": expected a number, got '" + text + "'");
  return v;
}

long long to_integer(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used > 0 && used == t.size(), key + ": expected an integer, got '" + text + "'");
  return v;
}

int to_int(const std::string& key, const std::string& text) {
  const long long v = to_integer(key, text);
  require(v >= std::numeric_limits<int>::min() && v <= std::numeric_limits<int>::max(),
          key + ": value out of range");
  return static_cast<int>(v);
}

std::size_t to_count(const std::string& key, const std::string& text) {
  const long long v = to_integer(key, text);
  require(v >= 0, key + ": must be non-negative");
  return static_cast<std::size_t>(v);
}

template <class F>
auto parse_named(const std::string& key, const std::string& text, F parse) {
  try {
    return parse(trim(text));
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(key + ": " + e.what());
  }
}

using Setter = std::function<void(JobSpec&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"table", [](JobSpec& s, const std::string&, const std::string& v) { s.table = trim(v); }},
      {"sites", [](JobSpec& s, const std::string& k, const std::string& v) {
         s.sites = parse_named(k, v, parse_int_list);
       }},
      {"tunneling", [](JobSpec& s, const std::string& k, const std::string& v) { s.tunneling = to_double(k, v); }},
      {"interaction", [](JobSpec& s, const std::string& k, const std::string& v) { s.interaction = to_double(k, v); }},
      {"strategy", [](JobSpec& s, const std::string& k, const std::string& v) {
         s.strategy.protocol = parse_named(k, v, parse_protocol);
         s.strategy_set = true;
       }},
      {"threshold",
       [](JobSpec& s, const std::string& k, const std::string& v) {
         s.strategy.peak_threshold = to_double(k, v);
         s.threshold_set = true;
       }},
      {"horizon",
       [](JobSpec& s, const std::string& k, const std::string& v) {
         s.strategy.horizon = to_double(k, v);
         s.horizon_set = true;
       }},
      {"scan-step",
       [](JobSpec& s, const std::string& k, const std::string& v) { s.strategy.scan_step = to_double(k, v); }},
      {"max-time", [](JobSpec& s, const std::string& k, const std::string& v) { s.strategy.max_time = to_double(k, v); }},
      {"grid-step",
       [](JobSpec& s, const std::string& k, const std::string& v) { s.strategy.grid_step = to_double(k, v); }},
      {"convergence-fidelity",
       [](JobSpec& s, const std::string& k, const std::string& v) {
         s.strategy.convergence_fidelity = to_double(k, v);
       }},
      {"gamma", [](JobSpec& s, const std::string& k, const std::string& v) { s.sse.gamma = to_double(k, v); }},
      {"gamma-lock", [](JobSpec& s, const std::string& k, const std::string& v) { s.sse.gamma_lock = to_double(k, v); }},
      {"dt", [](JobSpec& s, const std::string& k, const std::string& v) { s.sse.dt = to_double(k, v); }},
      {"dt-lock", [](JobSpec& s, const std::string& k, const std::string& v) { s.sse.dt_lock = to_double(k, v); }},
      {"energy-scale",
       [](JobSpec& s, const std::string& k, const std::string& v) { s.sse.energy_scale = to_double(k, v); }},
      {"lock-mode", [](JobSpec& s, const std::string& k, const std::string& v) {
         s.sse.lock_mode = parse_named(k, v, parse_lock_mode);
       }},
      {"window-rule", [](JobSpec& s, const std::string& k, const std::string& v) {
         s.sse.window_rule = parse_named(k, v, parse_window_rule);
       }},
      {"window-cut", [](JobSpec& s, const std::string& k, const std::string& v) { s.sse.window_cut = to_double(k, v); }},
      {"lock-cut", [](JobSpec& s, const std::string& k, const std::string& v) { s.sse.lock_cut = to_double(k, v); }},
      {"max-window", [](JobSpec& s, const std::string& k, const std::string& v) { s.sse.max_window = to_double(k, v); }},
      {"distribution", [](JobSpec& s, const std::string& k, const std::string& v) {
         s.distribution = parse_named(k, v, parse_distribution);
       }},
      {"toy-max-measurements",
       [](JobSpec& s, const std::string& k, const std::string& v) { s.toy_max_measurements = to_int(k, v); }},
      {"outcomes", [](JobSpec& s, const std::string& k, const std::string& v) { s.outcomes = to_int(k, v); }},
      {"observables", [](JobSpec& s, const std::string& k, const std::string& v) {
         s.observables = parse_named(k, v, parse_int_list);
       }},
      {"hamiltonians", [](JobSpec& s, const std::string& k, const std::string& v) { s.hamiltonians = to_count(k, v); }},
      {"epsilon-o", [](JobSpec& s, const std::string& k, const std::string& v) { s.epsilon_o = to_double(k, v); }},
      {"coupling-horizon",
       [](JobSpec& s, const std::string& k, const std::string& v) { s.coupling_horizon = to_double(k, v); }},
      {"coupling-step",
       [](JobSpec& s, const std::string& k, const std::string& v) { s.coupling_step = to_double(k, v); }},
      {"max-measurements",
       [](JobSpec& s, const std::string& k, const std::string& v) { s.max_measurements = to_int(k, v); }},
      {"ramp-final", [](JobSpec& s, const std::string& k, const std::string& v) { s.ramp_final = to_double(k, v); }},
      {"ramp-slices", [](JobSpec& s, const std::string& k, const std::string& v) { s.ramp_slices = to_int(k, v); }},
      {"ramp-step", [](JobSpec& s, const std::string& k, const std::string& v) { s.ramp_step = to_double(k, v); }},
      {"trajectories", [](JobSpec& s, const std::string& k, const std::string& v) { s.trajectories = to_count(k, v); }},
      {"seed", [](JobSpec& s, const std::string& k, const std::string& v) {
         const long long x = to_integer(k, v);
         require(x >= 0, k + ": must be non-negative");
         s.seed = static_cast<std::uint64_t>(x);
       }},
      {"workers", [](JobSpec& s, const std::string& k, const std::string& v) {
         const std::size_t w = to_count(k, v);
         require(w <= 4096, k + ": at most 4096 workers");
         s.workers = static_cast<unsigned>(w);
       }},
      {"bootstrap", [](JobSpec& s, const std::string& k, const std::string& v) { s.bootstrap = to_int(k, v); }},
  };
  return table;
}

const std::map<std::string, std::string>& option_help() {
  static const std::map<std::string, std::string> help = {
      {"table", "output table; the command's first table when empty"},
      {"sites", "lattice sizes L = N: 7, 3-7 or 3,5,7 (default 7)"},
      {"tunneling", "hopping J (default 1)"},
      {"interaction", "on-site U during bh-projective free evolution (default 0)"},
      {"strategy", "fumes or zfumes (default zfumes; random-ham runs both unless set)"},
      {"threshold", "peak threshold relative to the best peak in the horizon (default 0.5; random-ham 0.9)"},
      {"horizon", "peak search horizon in 1/J (default 5; random-ham 10)"},
      {"scan-step", "peak search grid in 1/J (default 0.01)"},
      {"max-time", "simulated time in 1/J; also the longest ramp (default 100)"},
      {"grid-step", "fidelity sampling step in 1/J (default 0.1)"},
      {"convergence-fidelity", "mean fidelity that defines T_conv (default 0.99)"},
      {"gamma", "measurement strength in units of J_d (default 0.5)"},
      {"gamma-lock", "locking strength in units of J_d (default 1000)"},
      {"dt", "integrator step during measurement windows (default 1e-3; gamma * dt <= 0.01)"},
      {"dt-lock", "integrator step under finite locks (default 1e-5; gamma-lock * dt-lock <= 0.01)"},
      {"energy-scale", "J_d (default 1)"},
      {"lock-mode", "projector or finite (default projector)"},
      {"window-rule", "purity or decision (default decision)"},
      {"window-cut", "window tolerance for sites left unlocked (default 0.1)"},
      {"lock-cut", "window tolerance for sites to lock, decision rule (default 0.5)"},
      {"max-window", "longest measurement window (default 50)"},
      {"distribution", "toy reshuffling law: multinomial or uniform (default multinomial)"},
      {"toy-max-measurements", "toy run cap (default 1000000)"},
      {"outcomes", "outcomes B per observable (default 2)"},
      {"observables", "observable counts L: 3, 3-7 or 3,5 (default 3)"},
      {"hamiltonians", "random Hamiltonians per L (default 20)"},
      {"epsilon-o", "coupling threshold for admitting a lock (default 0.2)"},
      {"coupling-horizon", "coupling check horizon (default 20)"},
      {"coupling-step", "coupling check grid (default 0.05)"},
      {"max-measurements", "measurement cap for random-ham runs (default 100000)"},
      {"ramp-final", "U/J at the end of the ramp (default 30)"},
      {"ramp-slices", "piecewise-constant slices per ramp (default 100)"},
      {"ramp-step", "spacing of total ramp times (default 0.5)"},
      {"trajectories", "trajectories (per Hamiltonian for random-ham; default 100)"},
      {"seed", "base seed (default 1)"},
      {"workers", "worker threads; 0 uses ZFUMES_WORKERS or all cores (default 0)"},
      {"bootstrap", "bootstrap resamples for the T_conv error (default 200)"},
  };
  return help;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? kMissing : s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
  if (v.size() < 2) return kMissing;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : "none"; }

EnsembleOptions ensemble_options(const JobSpec& spec, bool keep_records) {
  EnsembleOptions o;
  o.trajectories = spec.trajectories;
  o.base_seed = spec.seed;
  o.workers = spec.workers;
  o.convergence_fidelity = spec.strategy.convergence_fidelity;
  o.keep_records = keep_records;
  return o;
}

void add_failures(JobResult& out, const EnsembleStats& stats) {
  out.summary.emplace_back("failures", std::to_string(stats.failures));
  for (const auto& m : stats.failure_messages) out.summary.emplace_back("failure", m);
}

Table fidelity_table(const EnsembleStats& stats) {
  Table t;
  t.columns = {"time", "mean_fidelity", "stderr", "converged_fraction"};
  for (std::size_t i = 0; i < stats.time.size(); ++i) {
    t.add_row({stats.time[i], stats.mean_fidelity[i], stats.stderr_fidelity[i], stats.converged_fraction[i]});
  }
  return t;
}

void add_curve_summary(JobResult& out, const EnsembleStats& stats) {
  out.summary.emplace_back("t_conv", format_optional(stats.t_conv));
  out.summary.emplace_back("converged", std::to_string(stats.converged) + "/" + std::to_string(stats.trajectories));
  out.summary.emplace_back("expected_measurements", format_number(stats.converged ? stats.expected_measurements
                                                                                  : kMissing));
  add_failures(out, stats);
}

JobResult run_bh_projective(const JobSpec& spec) {
  JobResult out;
  PropagatorCache cache;
  const std::string table = spec.resolved_table();
  if (table == "scaling") {
    const auto rows = scaling_sweep(spec.sites, spec.strategy, ensemble_options(spec, false), cache, spec.bootstrap,
                                    spec.tunneling, spec.interaction);
    out.table.columns = {"L", "t_conv", "t_conv_stderr", "expected_measurements", "converged_fraction"};
    for (const auto& r : rows) {
      out.table.add_row({static_cast<long long>(r.sites), r.t_conv.value_or(kMissing),
                         r.t_conv ? r.t_conv_stderr : kMissing,
                         r.expected_measurements > 0.0 ? r.expected_measurements : kMissing, r.converged_fraction});
    }
    return out;
  }
  const int L = spec.sites.front();
  const BHParams params{L, L, spec.tunneling, spec.interaction};
  const auto result = run_ensemble(
      [&](std::size_t, Rng& rng) { return run_trajectory(params, spec.strategy, rng, cache); },
      ensemble_options(spec, table == "locks" || table == "events"));
  if (table == "events") {
    out.table.columns = {"trajectory", "measurement", "time", "site", "occupation", "locked"};
    for (std::size_t k = 0; k < result.records.size(); ++k) {
      std::vector<bool> locked(static_cast<std::size_t>(L), false);
      const auto& events = result.records[k].events;
      for (std::size_t m = 0; m < events.size(); ++m) {
        for (int j : events[m].locked) locked[static_cast<std::size_t>(j)] = true;
        for (int j = 0; j < L; ++j) {
          out.table.add_row({static_cast<long long>(k), static_cast<long long>(m + 1), events[m].time,
                             static_cast<long long>(j + 1), static_cast<long long>(events[m].outcome[j]),
                             static_cast<long long>(locked[static_cast<std::size_t>(j)])});
        }
      }
    }
    add_curve_summary(out, result.stats);
    return out;
  }
  if (table == "locks") {
    const auto freq = estimate_lock_probabilities(result.records, L);
    out.table.columns = {"site", "frequency", "stderr", "p_uniform"};
    for (int i = 0; i < L; ++i) {
      const auto k = static_cast<std::size_t>(i);
      out.table.add_row({static_cast<long long>(i + 1), freq.frequency[k], freq.stderr_frequency[k],
                         p_lock_uniform(i + 1, L)});
    }
    out.summary.emplace_back("events", std::to_string(freq.events));
    add_failures(out, result.stats);
    return out;
  }
  out.table = fidelity_table(result.stats);
  add_curve_summary(out, result.stats);
  return out;
}

JobResult run_bh_continuous(const JobSpec& spec) {
  JobResult out;
  const std::string table = spec.resolved_table();
  const int L = spec.sites.front();
  const BHParams params{L, L, spec.tunneling, 0.0};
  SSEConfig sse = spec.sse;
  sse.keep_records = table == "records";
  std::vector<ContinuousDiagnostics> diags(spec.trajectories);
  const auto result = run_ensemble(
      [&](std::size_t k, Rng& rng) { return run_continuous_trajectory(params, sse, spec.strategy, rng, &diags[k]); },
      ensemble_options(spec, false));
  long long leaks = 0, unresolved = 0, stalled = 0;
  for (const auto& d : diags) {
    leaks += d.leak_events;
    unresolved += d.unresolved_windows;
    stalled += d.stalled ? 1 : 0;
  }
  if (table == "records") {
    out.table.columns = {"trajectory", "window", "time", "site", "current"};
    for (std::size_t k = 0; k < diags.size(); ++k) {
      for (std::size_t w = 0; w < diags[k].records.size(); ++w) {
        const HomodyneRecord& r = diags[k].records[w];
        for (std::size_t s = 0; s < r.steps(); ++s) {
          for (int j = 0; j < r.sites; ++j) {
            out.table.add_row({static_cast<long long>(k), static_cast<long long>(w),
                               r.start + static_cast<double>(s + 1) * r.dt, static_cast<long long>(j + 1),
                               r.current[s * static_cast<std::size_t>(r.sites) + static_cast<std::size_t>(j)]});
          }
        }
      }
    }
  } else {
    out.table = fidelity_table(result.stats);
  }
  add_curve_summary(out, result.stats);
  out.summary.emplace_back("leak_events", std::to_string(leaks));
  out.summary.emplace_back("unresolved_windows", std::to_string(unresolved));
  out.summary.emplace_back("stalled", std::to_string(stalled));
  return out;
}

JobResult run_bh_ramp(const JobSpec& spec) {
  JobResult out;
  const int L = spec.sites.front();
  const BHParams params{L, L, spec.tunneling, 0.0};
  std::vector<double> times;
  const auto n = static_cast<long long>(std::floor(spec.strategy.max_time / spec.ramp_step + 1e-9));
  for (long long i = 0; i <= n; ++i) times.push_back(static_cast<double>(i) * spec.ramp_step);
  const auto f = linear_ramp_curve(params, times, spec.ramp_final, spec.ramp_slices);
  out.table.columns = {"time", "fidelity"};
  for (std::size_t i = 0; i < times.size(); ++i) out.table.add_row({times[i], f[i]});
  return out;
}

JobResult run_toy(const JobSpec& spec) {
  JobResult out;
  const bool zeno = spec.strategy.protocol == Protocol::ZFumes;
  if (spec.resolved_table() == "events") {
    const ToyConfig config{spec.sites.front(), spec.distribution, spec.toy_max_measurements};
    out.table.columns = {"trajectory", "measurement", "site", "occupation", "locked"};
    for (std::size_t k = 0; k < spec.trajectories; ++k) {
      Rng rng = make_rng(spec.seed, k);
      const ToyRun run = run_toy_zfumes(config, rng);
      std::vector<bool> locked(static_cast<std::size_t>(config.sites), false);
      for (std::size_t m = 0; m < run.outcomes.size(); ++m) {
        for (int j : run.lock_history[m]) locked[static_cast<std::size_t>(j)] = true;
        for (int j = 0; j < config.sites; ++j) {
          out.table.add_row({static_cast<long long>(k), static_cast<long long>(m + 1), static_cast<long long>(j + 1),
                             static_cast<long long>(run.outcomes[m][j]),
                             static_cast<long long>(locked[static_cast<std::size_t>(j)])});
        }
      }
    }
    return out;
  }
  if (spec.resolved_table() == "locks") {
    const int L = spec.sites.front();
    const LatticePartition full(L);
    std::vector<double> hits(static_cast<std::size_t>(L), 0.0);
    for (std::size_t k = 0; k < spec.trajectories; ++k) {
      Rng rng = make_rng(spec.seed, k);
      const FockState c = sample_configuration(L, spec.distribution, rng);
      for (int j : lockable_sites(c, full)) hits[static_cast<std::size_t>(j)] += 1.0;
    }
    const auto n = static_cast<double>(spec.trajectories);
    out.table.columns = {"site", "frequency", "stderr", "p_uniform"};
    for (int i = 0; i < L; ++i) {
      const double p = hits[static_cast<std::size_t>(i)] / n;
      out.table.add_row({static_cast<long long>(i + 1), p, std::sqrt(p * (1.0 - p) / n), p_lock_uniform(i + 1, L)});
    }
    return out;
  }
  out.table.columns = {"L", "expected_measurements", "stderr", "converged_fraction", "analytic"};
  for (int L : spec.sites) {
    const ToyConfig config{L, spec.distribution, spec.toy_max_measurements};
    std::vector<double> m;
    for (std::size_t k = 0; k < spec.trajectories; ++k) {
      Rng rng = make_rng(spec.seed, k);
      const ToyRun run = zeno ? run_toy_zfumes(config, rng) : run_toy_fumes(config, rng);
      if (run.converged) m.push_back(run.measurements);
    }
    out.table.add_row({static_cast<long long>(L), mean_of(m), stderr_of(m),
                       static_cast<double>(m.size()) / static_cast<double>(spec.trajectories),
                       zeno ? mz_bound(L) : mf_exact(L)});
  }
  return out;
}

JobResult run_random_ham(const JobSpec& spec) {
  JobResult out;
  out.table.columns = {"N", "B", "L", "protocol", "expected_measurements", "stderr", "converged_fraction", "estimate"};
  std::vector<Protocol> protocols{Protocol::Fumes, Protocol::ZFumes};
  if (spec.strategy_set) protocols = {spec.strategy.protocol};
  GeneralOptions options;
  options.coupling = CouplingOptions{spec.epsilon_o, spec.coupling_horizon, spec.coupling_step};
  options.max_measurements = spec.max_measurements;
  const std::uint64_t ham_seed = splitmix64(spec.seed ^ 0x6a09e667f3bcc909ULL);
  std::size_t failures = 0;
  for (int L : spec.observables) {
    const ObservableSet obs = build_observables(L, spec.outcomes);
    const std::size_t dim = obs.basis().dim();
    std::vector<HermitianOperator> hams;
    hams.reserve(spec.hamiltonians);
    for (std::size_t h = 0; h < spec.hamiltonians; ++h) {
      Rng rng = make_rng(ham_seed, h);
      hams.push_back(sample_gue(dim, rng));
    }
    const Label target(static_cast<std::size_t>(L), 1);
    for (Protocol p : protocols) {
      StrategyConfig config = spec.strategy;
      config.protocol = p;
      if (!spec.threshold_set) config.peak_threshold = kGeneralPeakThreshold;
      if (!spec.horizon_set) config.horizon = kGeneralHorizon;
      // Measurement counts, not time, bound these runs.
      config.max_time = 1e6;
      config.grid_step = 1e5;
      EnsembleOptions eo = ensemble_options(spec, true);
      eo.trajectories = spec.hamiltonians * spec.trajectories;
      const auto result = run_ensemble(
          [&](std::size_t k, Rng& rng) {
            return run_general_trajectory(hams[k / spec.trajectories], obs, target, config, options, rng);
          },
          eo);
      std::vector<double> m;
      for (const auto& r : result.records) {
        if (r.converged_at) m.push_back(r.measurement_count);
      }
      failures += result.stats.failures;
      for (const auto& msg : result.stats.failure_messages) out.summary.emplace_back("failure", msg);
      out.table.add_row({static_cast<long long>(dim), static_cast<long long>(spec.outcomes), static_cast<long long>(L),
                         to_string(p), mean_of(m), stderr_of(m),
                         static_cast<double>(m.size()) / static_cast<double>(eo.trajectories),
                         p == Protocol::ZFumes ? mz_general(spec.outcomes, L).sum : kMissing});
    }
  }
  out.summary.emplace_back("failures", std::to_string(failures));
  return out;
}

JobResult run_formulas(const JobSpec& spec) {
  JobResult out;
  out.table.columns = {"quantity", "L", "B", "value"};
  const auto B = static_cast<long long>(spec.outcomes);
  for (int L : spec.sites) {
    const auto l = static_cast<long long>(L);
    auto row = [&](const std::string& name, double v) { out.table.add_row({name, l, B, v}); };
    row("p_mott", multinomial_prob(FockState::mott(L)));
    row("mf_exact", mf_exact(L));
    row("mf_asymptotic", mf_asymptotic(L));
    row("mz_bound", mz_bound(L));
    row("mz_bound_sum", mz_bound_sum(L));
    const LockAverage avg = p_avg(L);
    row("p_avg_exact", avg.exact);
    row("p_avg_expansion", avg.expansion);
    row("p_avg_leading", avg.leading);
    for (int i = 1; i <= L; ++i) row("p_lock_uniform[" + std::to_string(i) + "]", p_lock_uniform(i, L));
    const GeneralEstimate g = mz_general(spec.outcomes, L);
    row("mz_general_sum", g.sum);
    row("mz_general_approx", g.approx);
  }
  return out;
}

}  // namespace

std::string to_string(Command c) {
  switch (c) {
    case Command::BhProjective: return "bh-projective";
    case Command::BhContinuous: return "bh-continuous";
    case Command::BhRamp: return "bh-ramp";
    case Command::Toy: return "toy";
    case Command::RandomHam: return "random-ham";
    case Command::Formulas: return "formulas";
  }
  return "unknown";
}

Command parse_command(const std::string& name) {
  for (Command c : {Command::BhProjective, Command::BhContinuous, Command::BhRamp, Command::Toy, Command::RandomHam,
                    Command::Formulas}) {
    if (to_string(c) == name) return c;
  }
  throw InvalidArgument("unknown command '" + name + "'");
}

std::string to_string(OutputFormat f) { return f == OutputFormat::Csv ? "csv" : "json"; }

OutputFormat parse_format(const std::string& name) {
  if (name == "csv") return OutputFormat::Csv;
  if (name == "json") return OutputFormat::Json;
  throw InvalidArgument("unknown format '" + name + "' (expected csv or json)");
}

std::vector<std::string> JobSpec::tables() const {
  switch (command) {
    case Command::BhProjective: return {"fidelity", "scaling", "locks", "events"};
    case Command::BhContinuous: return {"fidelity", "records"};
    case Command::BhRamp: return {"fidelity"};
    case Command::Toy: return {"scaling", "locks", "events"};
    case Command::RandomHam: return {"scaling"};
    case Command::Formulas: return {"values"};
  }
  return {};
}

std::string JobSpec::resolved_table() const { return table.empty() ? tables().front() : table; }

void JobSpec::validate() const {
  const auto names = tables();
  const std::string t = resolved_table();
  if (std::find(names.begin(), names.end(), t) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw InvalidArgument("table '" + t + "' is not available for " + to_string(command) + " (choose " + list + ")");
  }
  require(!sites.empty(), "sites: empty list");
  for (int L : sites) require(L >= 1, "sites: every entry must be at least 1");
  const bool single = (command == Command::BhProjective && t != "scaling") || command == Command::BhContinuous ||
                      command == Command::BhRamp || (command == Command::Toy && t != "scaling");
  require(!single || sites.size() == 1, "sites: the " + t + " table takes a single lattice size");
  require(trajectories >= 1, "trajectories: need at least one");
  require(tunneling > 0.0, "tunneling: must be positive");
  require(std::isfinite(interaction), "interaction: must be finite");
  require(bootstrap >= 0, "bootstrap: must be non-negative");
  strategy.validate();
  switch (command) {
    case Command::BhContinuous:
      sse.validate();
      break;
    case Command::BhRamp:
      require(ramp_slices >= 1, "ramp-slices: need at least one slice");
      require(ramp_step > 0.0, "ramp-step: must be positive");
      require(ramp_final >= 0.0, "ramp-final: must be non-negative");
      break;
    case Command::Toy:
      require(toy_max_measurements >= 1, "toy-max-measurements: must be positive");
      require(t != "events" || strategy.protocol == Protocol::ZFumes, "events: the toy table needs --strategy zfumes");
      break;
    case Command::RandomHam:
      require(outcomes >= 2, "outcomes: need at least two");
      require(!observables.empty(), "observables: empty list");
      for (int L : observables) require(L >= 1, "observables: every entry must be at least 1");
      require(hamiltonians >= 1, "hamiltonians: need at least one");
      require(epsilon_o > 0.0 && epsilon_o < 1.0, "epsilon-o: must lie in (0, 1)");
      require(coupling_horizon > 0.0 && coupling_step > 0.0, "coupling horizon and step must be positive");
      require(max_measurements >= 1, "max-measurements: must be positive");
      break;
    case Command::Formulas:
      require(outcomes >= 2, "outcomes: need at least two");
      break;
    case Command::BhProjective:
      break;
  }
}

void set_option(JobSpec& spec, const std::string& key, const std::string& value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw InvalidArgument("unknown option '" + key + "'");
  it->second(spec, key, value);
}

std::vector<std::pair<std::string, std::string>> option_keys() {
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& [k, v] : setters()) keys.emplace_back(k, option_help().at(k));
  return keys;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    require(!part.empty(), "empty entry in list '" + text + "'");
    const auto dash = part.find('-', 1);
    if (dash == std::string::npos) {
      out.push_back(to_int("list", part));
    } else {
      const int a = to_int("list", part.substr(0, dash));
      const int b = to_int("list", part.substr(dash + 1));
      require(a <= b && b - a <= 100000, "bad range '" + part + "'");
      for (int v = a; v <= b; ++v) out.push_back(v);
    }
  }
  require(!out.empty(), "empty list");
  return out;
}

void Table::add_row(std::vector<Cell> row) {
  require(row.size() == columns.size(), "row width does not match the header");
  rows.push_back(std::move(row));
}

std::size_t Table::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  require(it != columns.end(), "no column named '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

double Table::number(std::size_t row, const std::string& name) const {
  require(row < rows.size(), "row index out of range");
  const Cell& c = rows[row][column(name)];
  if (const auto* i = std::get_if<long long>(&c)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&c)) return *d;
  throw InvalidArgument("column '" + name + "' is not numeric");
}

JobResult run_job(const JobSpec& spec) {
  spec.validate();
  switch (spec.command) {
    case Command::BhProjective: return run_bh_projective(spec);
    case Command::BhContinuous: return run_bh_continuous(spec);
    case Command::BhRamp: return run_bh_ramp(spec);
    case Command::Toy: return run_toy(spec);
    case Command::RandomHam: return run_random_ham(spec);
    case Command::Formulas: return run_formulas(spec);
  }
  throw InvalidArgument("unknown command");
}

std::string cell_text(const Cell& cell) {
  if (const auto* n = std::get_if<long long>(&cell)) return std::to_string(*n);
  if (const auto* d = std::get_if<double>(&cell)) return format_number(*d);
  return std::get<std::string>(cell);
}

std::string to_csv(const Table& table) {
  auto field = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) out += (i ? "," : "") + field(table.columns[i]);
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += std::holds_alternative<std::string>(row[i]) ? field(std::get<std::string>(row[i])) : cell_text(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string to_json(const Table& table) {
  nlohmann::ordered_json doc;
  doc["columns"] = table.columns;
  doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              obj[table.columns[i]] = std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json();
            } else {
              obj[table.columns[i]] = v;
            }
          },
          row[i]);
    }
    doc["rows"].push_back(std::move(obj));
  }
  return doc.dump(1) + "\n";
}

Table table_from_json(const std::string& text) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed table JSON: ") + e.what());
  }
  require(doc.contains("columns") && doc.contains("rows"), "table JSON needs columns and rows");
  Table t;
  t.columns = doc["columns"].get<std::vector<std::string>>();
  for (const auto& obj : doc["rows"]) {
    std::vector<Cell> row;
    for (const auto& c : t.columns) {
      require(obj.contains(c), "table JSON row lacks column '" + c + "'");
      const auto& v = obj[c];
      if (v.is_null()) {
        row.emplace_back(kMissing);
      } else if (v.is_number_integer()) {
        row.emplace_back(v.get<long long>());
      } else if (v.is_number()) {
        row.emplace_back(v.get<double>());
      } else if (v.is_string()) {
        row.emplace_back(v.get<std::string>());
      } else {
        throw InvalidArgument("table JSON cell '" + c + "' has an unsupported type");
      }
    }
    t.add_row(std::move(row));
  }
  return t;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  require(!path.empty(), "empty output path");
  const fs::path target(path);
  const fs::path dir = target.has_parent_path() ? target.parent_path() : fs::path(".");
  std::string tmpl = (dir / ("." + target.filename().string() + ".tmp.XXXXXX")).string();
  const int fd = ::mkstemp(tmpl.data());
  if (fd < 0) throw IoError(path + ": cannot create temporary file: " + std::strerror(errno));
  std::size_t done = 0;
  while (done < text.size()) {
    const ssize_t n = ::write(fd, text.data() + done, text.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      const std::string why = std::strerror(errno);
      ::close(fd);
      ::unlink(tmpl.c_str());
      throw IoError(path + ": write failed: " + why);
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) {
    const std::string why = std::strerror(errno);
    ::unlink(tmpl.c_str());
    throw IoError(path + ": flush failed: " + why);
  }
  ::chmod(tmpl.c_str(), 0644);
  std::error_code ec;
  fs::rename(tmpl, target, ec);
  if (ec) {
    ::unlink(tmpl.c_str());
    throw IoError(path + ": rename failed: " + ec.message());
  }
}

void write_table(const Table& table, const std::string& path, OutputFormat format) {
  write_text_atomic(path, format == OutputFormat::Csv ? to_csv(table) : to_json(table));
}

}  // namespace zfumes
