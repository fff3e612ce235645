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

#include "ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "errors.hpp"
#include "measurement.hpp"

namespace zfumes {

unsigned default_workers() {
  if (const char* env = std::getenv("ZFUMES_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 4096) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

EnsembleResult run_ensemble(const TrajectoryFn& fn, const EnsembleOptions& options) {
  require(options.trajectories >= 1, "need at least one trajectory");
  require(static_cast<bool>(fn), "no trajectory function given");
  const std::size_t n = options.trajectories;
  unsigned workers = options.workers == 0 ? default_workers() : options.workers;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));

  std::vector<std::optional<TrajectoryRecord>> slots(n);
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= n) return;
      try {
        Rng rng = make_rng(options.base_seed, k);
        slots[k] = fn(k, rng);
      } catch (const std::exception& e) {
        errors[k] = e.what();
        if (errors[k].empty()) errors[k] = "unknown error";
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  EnsembleResult out;
  std::size_t failures = 0;
  std::vector<std::string> messages;
  out.records.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (slots[k]) {
      out.records.push_back(std::move(*slots[k]));
    } else {
      ++failures;
      if (messages.size() < 5) messages.push_back("trajectory " + std::to_string(k) + ": " + errors[k]);
    }
  }
  if (out.records.empty()) {
    throw NumericalError("every trajectory failed; first error: " + messages.front());
  }
  out.stats = aggregate(out.records, options.convergence_fidelity);
  out.stats.failures = failures;
  out.stats.failure_messages = std::move(messages);
  if (!options.keep_records) out.records.clear();
  return out;
}

EnsembleStats aggregate(const std::vector<TrajectoryRecord>& records, double convergence_fidelity) {
  require(!records.empty(), "nothing to aggregate");
  EnsembleStats s;
  s.grid_step = records.front().grid_step;
  const std::size_t npts = records.front().fidelity.size();
  for (const auto& r : records) {
    require(r.fidelity.size() == npts && r.grid_step == s.grid_step,
            "trajectories disagree on the fidelity grid");
  }
  const auto n = static_cast<double>(records.size());
  s.trajectories = records.size();
  s.time.resize(npts);
  s.mean_fidelity.assign(npts, 0.0);
  s.stderr_fidelity.assign(npts, 0.0);
  s.converged_fraction.assign(npts, 0.0);
  for (std::size_t i = 0; i < npts; ++i) s.time[i] = static_cast<double>(i) * s.grid_step;

  // Two-pass mean and variance per grid point.
  for (const auto& r : records) {
    for (std::size_t i = 0; i < npts; ++i) s.mean_fidelity[i] += r.fidelity[i];
  }
  for (double& m : s.mean_fidelity) m /= n;
  if (records.size() > 1) {
    for (const auto& r : records) {
      for (std::size_t i = 0; i < npts; ++i) {
        const double d = r.fidelity[i] - s.mean_fidelity[i];
        s.stderr_fidelity[i] += d * d;
      }
    }
    for (double& v : s.stderr_fidelity) v = std::sqrt(v / (n - 1.0) / n);
  }

  int sites = 0;
  std::vector<double> m_conv;
  double m_all = 0.0;
  for (const auto& r : records) {
    m_all += r.measurement_count;
    if (r.converged_at) {
      m_conv.push_back(r.measurement_count);
      for (std::size_t i = 0; i < npts; ++i) {
        if (*r.converged_at <= s.time[i] + 1e-9) s.converged_fraction[i] += 1.0;
      }
    }
    for (const auto& e : r.events) sites = std::max(sites, e.outcome.sites());
  }
  for (double& f : s.converged_fraction) f /= n;
  s.converged = m_conv.size();
  s.mean_measurements_all = m_all / n;
  if (!m_conv.empty()) {
    double sum = 0.0;
    for (double m : m_conv) sum += m;
    s.expected_measurements = sum / static_cast<double>(m_conv.size());
    if (m_conv.size() > 1) {
      double v = 0.0;
      for (double m : m_conv) v += (m - s.expected_measurements) * (m - s.expected_measurements);
      s.expected_measurements_stderr =
          std::sqrt(v / static_cast<double>(m_conv.size() - 1) / static_cast<double>(m_conv.size()));
    }
  }
  for (std::size_t i = 0; i < npts; ++i) {
    if (s.mean_fidelity[i] >= convergence_fidelity) {
      s.t_conv = s.time[i];
      break;
    }
  }

  s.lock_frequency.assign(static_cast<std::size_t>(sites), 0.0);
  for (const auto& r : records) {
    std::vector<bool> hit(static_cast<std::size_t>(sites), false);
    for (const auto& e : r.events) {
      for (int j : e.locked) {
        if (j >= 0 && j < sites) hit[static_cast<std::size_t>(j)] = true;
      }
    }
    for (int j = 0; j < sites; ++j) s.lock_frequency[static_cast<std::size_t>(j)] += hit[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
  }
  for (double& f : s.lock_frequency) f /= n;
  return s;
}

LockFrequencies estimate_lock_probabilities(const std::vector<TrajectoryRecord>& records, int sites) {
  require(sites >= 1, "need at least one site");
  LockFrequencies out;
  out.frequency.assign(static_cast<std::size_t>(sites), 0.0);
  out.stderr_frequency.assign(static_cast<std::size_t>(sites), 0.0);
  const LatticePartition full(sites);
  for (const auto& r : records) {
    for (const auto& e : r.events) {
      if (e.outcome.sites() != sites || e.outcome.total() != sites) continue;
      ++out.events;
      for (int j : lockable_sites(e.outcome, full)) out.frequency[static_cast<std::size_t>(j)] += 1.0;
      if (!e.locked.empty()) break;
    }
  }
  if (out.events == 0) return out;
  const auto n = static_cast<double>(out.events);
  for (std::size_t j = 0; j < out.frequency.size(); ++j) {
    const double p = out.frequency[j] / n;
    out.frequency[j] = p;
    out.stderr_frequency[j] = std::sqrt(p * (1.0 - p) / n);
  }
  return out;
}

std::vector<ScalingRow> scaling_sweep(const std::vector<int>& sites, const StrategyConfig& config,
                                      const EnsembleOptions& options, PropagatorCache& cache, int bootstrap,
                                      double tunneling, double interaction) {
  require(!sites.empty(), "empty lattice-size range");
  require(bootstrap >= 0, "bootstrap count must be non-negative");
  std::vector<ScalingRow> rows;
  for (int L : sites) {
    const BHParams params{L, L, tunneling, interaction};
    EnsembleOptions opts = options;
    opts.keep_records = true;
    const auto result = run_ensemble(
        [&](std::size_t, Rng& rng) { return run_trajectory(params, config, rng, cache); }, opts);
    ScalingRow row;
    row.sites = L;
    row.t_conv = result.stats.t_conv;
    row.expected_measurements = result.stats.expected_measurements;
    row.converged_fraction = result.stats.converged_fraction.back();

    const auto& recs = result.records;
    const std::size_t n = recs.size();
    const std::size_t npts = recs.front().fidelity.size();
    Rng boot = make_rng(options.base_seed ^ 0xb0075ULL, static_cast<std::uint64_t>(L));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<double> samples;
    std::vector<double> mean(npts);
    for (int b = 0; b < bootstrap; ++b) {
      std::fill(mean.begin(), mean.end(), 0.0);
      for (std::size_t k = 0; k < n; ++k) {
        const auto& f = recs[pick(boot)].fidelity;
        for (std::size_t i = 0; i < npts; ++i) mean[i] += f[i];
      }
      for (std::size_t i = 0; i < npts; ++i) {
        if (mean[i] / static_cast<double>(n) >= options.convergence_fidelity) {
          samples.push_back(static_cast<double>(i) * config.grid_step);
          break;
        }
      }
    }
    if (samples.size() > 1) {
      double m = 0.0;
      for (double v : samples) m += v;
      m /= static_cast<double>(samples.size());
      double var = 0.0;
      for (double v : samples) var += (v - m) * (v - m);
      row.t_conv_stderr = std::sqrt(var / static_cast<double>(samples.size() - 1));
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace zfumes
