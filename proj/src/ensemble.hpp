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

#ifndef ZFUMES_ENSEMBLE_HPP
#define ZFUMES_ENSEMBLE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bose_hubbard.hpp"
#include "rng.hpp"
#include "strategy.hpp"

namespace zfumes {

// Produces trajectory `index` from its private stream.
using TrajectoryFn = std::function<TrajectoryRecord(std::size_t index, Rng& rng)>;

struct EnsembleOptions {
  std::size_t trajectories = 1;
  std::uint64_t base_seed = 1;
  unsigned workers = 0;  // 0: ZFUMES_WORKERS, else hardware concurrency
  double convergence_fidelity = 0.99;
  bool keep_records = false;
};

struct EnsembleStats {
  double grid_step = 0.1;
  std::vector<double> time;
  std::vector<double> mean_fidelity;
  std::vector<double> stderr_fidelity;
  std::vector<double> converged_fraction;
  std::optional<double> t_conv;
  std::size_t trajectories = 0;  // successful runs
  std::size_t failures = 0;
  std::vector<std::string> failure_messages;  // first few, by index
  std::size_t converged = 0;
  double expected_measurements = 0.0;  // over converged runs
  double expected_measurements_stderr = 0.0;
  double mean_measurements_all = 0.0;  // censored runs included at their count
  std::vector<double> lock_frequency;  // per site: fraction of runs that locked it
};

struct EnsembleResult {
  EnsembleStats stats;
  std::vector<TrajectoryRecord> records;  // index order, failures omitted
};

unsigned default_workers();

// Runs trajectories 0 .. n-1 on a worker pool. Trajectory k always draws
// from make_rng(base_seed, k) and aggregation runs in index order, so the
// result does not depend on the worker count.
EnsembleResult run_ensemble(const TrajectoryFn& fn, const EnsembleOptions& options);

EnsembleStats aggregate(const std::vector<TrajectoryRecord>& records, double convergence_fidelity);

// Per-site frequency with which lockable_sites fires on outcomes measured
// on the unlocked lattice, i.e. each record up to its first locking event.
// Events whose outcome does not span `sites` sites are ignored.
struct LockFrequencies {
  std::vector<double> frequency;
  std::vector<double> stderr_frequency;
  std::size_t events = 0;
};

LockFrequencies estimate_lock_probabilities(const std::vector<TrajectoryRecord>& records, int sites);

struct ScalingRow {
  int sites = 0;
  std::optional<double> t_conv;
  double t_conv_stderr = 0.0;
  double expected_measurements = 0.0;
  double converged_fraction = 0.0;  // at max_time
};

// T_conv versus L for projective trajectories. The T_conv error comes from
// a bootstrap over trajectories.
std::vector<ScalingRow> scaling_sweep(const std::vector<int>& sites, const StrategyConfig& config,
                                      const EnsembleOptions& options, PropagatorCache& cache,
                                      int bootstrap = 200, double tunneling = 1.0,
                                      double interaction = 0.0);

}  // namespace zfumes

#endif  // ZFUMES_ENSEMBLE_HPP
