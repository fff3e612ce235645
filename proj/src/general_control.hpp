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

#ifndef ZFUMES_GENERAL_CONTROL_HPP
#define ZFUMES_GENERAL_CONTROL_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "bose_hubbard.hpp"
#include "rng.hpp"
#include "strategy.hpp"

namespace zfumes {

using Label = std::vector<int>;

// States |q_1, ..., q_L>, q_i in {0, ..., B-1}, indexed in mixed radix with
// q_1 as the most significant digit.
class LabeledBasis {
 public:
  static constexpr std::size_t kMaxDim = 4096;

  LabeledBasis(int observables, int outcomes);

  int observables() const { return observables_; }
  int outcomes() const { return outcomes_; }
  std::size_t dim() const { return dim_; }

  Label label(std::size_t index) const;
  std::size_t index(const Label& label) const;
  // Digit q_i of basis state `index`, i 0-based.
  int digit(std::size_t index, int i) const;

 private:
  int observables_;
  int outcomes_;
  std::size_t dim_;
  std::vector<std::size_t> place_;  // B^(L-1-i)
};

// Commuting diagonal observables Q_i = sum_k q_i(k) |k><k|.
class ObservableSet {
 public:
  explicit ObservableSet(LabeledBasis basis);

  const LabeledBasis& basis() const { return basis_; }
  int size() const { return basis_.observables(); }
  // Eigenvalues of Q_i on the basis, i 0-based.
  const Eigen::VectorXd& eigenvalues(int i) const { return diag_.at(static_cast<std::size_t>(i)); }
  Eigen::MatrixXd matrix(int i) const { return eigenvalues(i).asDiagonal(); }

 private:
  LabeledBasis basis_;
  std::vector<Eigen::VectorXd> diag_;
};

ObservableSet build_observables(int observables, int outcomes);

// GUE sample with E|H_ij|^2 = 1/dim; spectrum fills [-2, 2] for large dim.
HermitianOperator sample_gue(std::size_t dim, Rng& rng);

// Born-rule draw of the joint label; the state collapses onto that basis state.
std::pair<Label, Eigen::VectorXcd> measure_observables(const Eigen::VectorXcd& state,
                                                       const ObservableSet& obs, Rng& rng);

// Locked observable index (0-based) -> locked eigenvalue.
using LockMap = std::map<int, int>;

// exp(-i P H P t) on the joint eigenspace of the locked observables.
class ZenoSubspace {
 public:
  ZenoSubspace(const HermitianOperator& h, const LabeledBasis& basis, const LockMap& locks);

  std::size_t dim() const { return members_.size(); }
  const std::vector<std::size_t>& members() const { return members_; }
  // Position of a full-space index inside the subspace, or -1.
  Eigen::Index position(std::size_t full_index) const;
  const PropagatorPtr& propagator() const { return propagator_; }

  Eigen::VectorXcd restrict(const Eigen::VectorXcd& full) const;
  Eigen::VectorXcd embed(const Eigen::VectorXcd& sub, std::size_t full_dim) const;

 private:
  std::vector<std::size_t> members_;
  std::vector<Eigen::Index> position_;
  PropagatorPtr propagator_;
};

struct CouplingOptions {
  double epsilon = 0.2;  // epsilon_o
  double horizon = 20.0;
  double step = 0.05;
};

// max_t |<target| exp(-i P H P t) |current>| > epsilon over a grid on
// [0, horizon], P the projector for `locks` (candidate included).
bool coupling_check(std::size_t current, std::size_t target, const HermitianOperator& h,
                    const LabeledBasis& basis, const LockMap& locks, const CouplingOptions& options);

// Peak rule defaults for random Hamiltonians.
inline constexpr double kGeneralPeakThreshold = 0.9;
inline constexpr double kGeneralHorizon = 10.0;

struct GeneralOptions {
  CouplingOptions coupling;
  int max_measurements = 100000;
};

// FUMES or Z-FUMES state transfer from a random basis state other than the
// target. Events store labels in the outcome field and lock admissions
// (observable indices) in the locked field.
TrajectoryRecord run_general_trajectory(const HermitianOperator& h, const ObservableSet& obs,
                                        const Label& target, const StrategyConfig& config,
                                        const GeneralOptions& options, Rng& rng);

struct GeneralEstimate {
  double sum = 0.0;     // B * sum_{K=1..L} 1/K
  double approx = 0.0;  // B ln L
};

GeneralEstimate mz_general(int outcomes, int observables);

}  // namespace zfumes

#endif  // ZFUMES_GENERAL_CONTROL_HPP
