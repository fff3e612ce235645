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

#ifndef ZFUMES_SSE_HPP
#define ZFUMES_SSE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bose_hubbard.hpp"
#include "measurement.hpp"
#include "rng.hpp"
#include "strategy.hpp"

namespace zfumes {

enum class LockMode { Projector, Finite };

// Purity: stop once one basis state carries 1 - window_cut of the weight.
// Decision: stop once every site the argmax state would lock is lockable
// with probability >= 1 - lock_cut and every other unlocked site with
// probability <= window_cut.
enum class WindowRule { Purity, Decision };

std::string to_string(LockMode m);
LockMode parse_lock_mode(const std::string& name);
std::string to_string(WindowRule r);
WindowRule parse_window_rule(const std::string& name);

// Continuous homodyne monitoring of the site occupations. Times are in
// units of 1/J_d and strengths in units of J_d.
struct SSEConfig {
  double gamma = 0.5;
  double gamma_lock = 1000.0;
  double energy_scale = 1.0;  // J_d
  double dt = 1e-3;           // measurement windows
  double dt_lock = 1e-5;      // free evolution under finite-strength locks
  double window_cut = 0.1;
  double lock_cut = 0.5;
  double max_window = 50.0;
  LockMode lock_mode = LockMode::Projector;
  WindowRule window_rule = WindowRule::Decision;
  bool keep_records = false;

  void validate() const;
};

// Measurement currents I_j sampled once per integrator step.
struct HomodyneRecord {
  int sites = 0;
  double dt = 0.0;
  double start = 0.0;
  std::vector<double> current;  // step-major: current[s * sites + j]

  std::size_t steps() const { return sites == 0 ? 0 : current.size() / static_cast<std::size_t>(sites); }
};

// H = offdiag + diag(diagonal) with measurement operators c_j = n_j.
struct SSEModel {
  const RealSparse* offdiag = nullptr;  // may be null
  Eigen::VectorXd diagonal;
  Eigen::MatrixXd occupations;  // dim x L
};

// Euler-Maruyama integrator for
//   d psi = dt [-i H + sum_j (-(g_j / 2) n_j^2 + I_j n_j)] psi,
//   I_j = 2 g_j <n_j> + sqrt(g_j) dW_j / dt,
// followed by explicit renormalization. Sites with g_j = 0 draw no noise.
class SSEStepper {
 public:
  SSEStepper(SSEModel model, std::vector<double> gammas);

  // Advances psi by dt. Writes I_j into currents[j] when non-null.
  // Returns the pre-renormalization norm. Throws NumericalError on blowup.
  double step(Eigen::VectorXcd& psi, double dt, Rng& rng, double* currents = nullptr);

  const std::vector<double>& gammas() const { return gammas_; }
  const Eigen::VectorXd& populations() const { return populations_; }

 private:
  SSEModel model_;
  std::vector<double> gammas_;
  Eigen::MatrixXd occ_squared_;
  Eigen::VectorXd populations_;
  Eigen::VectorXd a_, b_;
  Eigen::VectorXcd work_;
  std::normal_distribution<double> normal_;
};

// Single step with a throwaway stepper.
double sse_step(Eigen::VectorXcd& psi, const SSEModel& model, std::span<const double> gammas, double dt,
                Rng& rng, double* currents = nullptr);

struct WindowResult {
  MeasurementOutcome outcome;
  bool resolved = false;
  double duration = 0.0;
  HomodyneRecord record;
};

using StepObserver = std::function<void(double elapsed, const Eigen::VectorXcd& psi)>;

// Quenched window (J = 0, U = J_d): monitors the unlocked sites at strength
// gamma until the window rule is met or max_window elapses. The outcome is
// the most populated basis state.
WindowResult measurement_window(Eigen::VectorXcd& psi, const FockBasis& basis,
                                const LatticePartition& partition, const SSEConfig& config, Rng& rng,
                                const StepObserver& observer = {});

struct ContinuousDiagnostics {
  int unresolved_windows = 0;
  int leak_events = 0;  // locks released after reading back n != 1
  bool stalled = false;
  double window_time = 0.0;
  std::vector<HomodyneRecord> records;
};

// Z-FUMES with measurement windows in place of projective measurements.
// Only params.sites and params.particles are used; free evolution runs at
// J = J_d, U = 0. strategy.grid_step, horizon etc. are in units of 1/J_d.
TrajectoryRecord run_continuous_trajectory(const BHParams& params, const SSEConfig& sse,
                                           const StrategyConfig& strategy, Rng& rng,
                                           ContinuousDiagnostics* diagnostics = nullptr);

}  // namespace zfumes

#endif  // ZFUMES_SSE_HPP
