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

#ifndef ZFUMES_STRATEGY_HPP
#define ZFUMES_STRATEGY_HPP

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bose_hubbard.hpp"
#include "fock.hpp"
#include "measurement.hpp"
#include "rng.hpp"

namespace zfumes {

enum class Protocol { Fumes, ZFumes };

std::string to_string(Protocol p);
Protocol parse_protocol(const std::string& name);

struct StrategyConfig {
  Protocol protocol = Protocol::ZFumes;
  double peak_threshold = 0.5;  // relative to the best peak inside the horizon
  double scan_step = 0.01;      // 1/J
  double horizon = 5.0;         // 1/J
  double max_time = 100.0;      // 1/J
  double convergence_fidelity = 0.99;
  double grid_step = 0.1;       // fidelity sampling, 1/J

  void validate() const;
  std::size_t grid_points() const;
};

struct MeasurementEvent {
  double time = 0.0;
  FockState outcome;
  std::vector<int> locked;  // sites newly locked by this outcome
};

struct TrajectoryRecord {
  std::vector<MeasurementEvent> events;
  std::vector<double> fidelity;  // F(k * grid_step)
  double grid_step = 0.1;
  std::optional<double> converged_at;
  int measurement_count = 0;
};

// Time series of the overlap <target|exp(-i H t)|psi> with t measured from
// the moment the series is built. Evaluated through the spectral levels of
// the propagator, so each sample costs O(levels).
class OverlapSeries {
 public:
  OverlapSeries(PropagatorPtr propagator, const Eigen::VectorXcd& psi, Eigen::Index target);

  std::complex<double> amplitude(double t) const;
  double probability(double t) const { return std::norm(amplitude(t)); }

  // probability() on t = 0, step, ..., count * step.
  std::vector<double> scan(double step, std::size_t count) const;

  const PropagatorPtr& propagator() const { return propagator_; }
  const Eigen::VectorXcd& coefficients() const { return coefficients_; }

 private:
  PropagatorPtr propagator_;
  Eigen::VectorXcd coefficients_;  // V+ psi
  std::vector<std::complex<double>> weights_;
};

// First local maximum of G(t) = prod_s |<target_s|psi_s(t)>|^2 on the scan
// grid that reaches peak_threshold * max G over the horizon. Throws
// NumericalError if G vanishes over the whole horizon.
double find_measurement_time(std::span<const OverlapSeries> factors, const StrategyConfig& config);

TrajectoryRecord run_trajectory(const BHParams& params, const StrategyConfig& config, Rng& rng,
                                PropagatorCache& cache);

// Fidelity with the Mott state after ramping U linearly from 0 to
// final_ratio * J over total_time, starting in the superfluid. Each of the
// n_steps slices is propagated exactly at its midpoint U.
double linear_ramp(const BHParams& params, double total_time, double final_ratio, int n_steps);
// linear_ramp for several total times sharing one superfluid preparation.
std::vector<double> linear_ramp_curve(const BHParams& params, std::span<const double> total_times,
                                      double final_ratio, int n_steps);

}  // namespace zfumes

#endif  // ZFUMES_STRATEGY_HPP
