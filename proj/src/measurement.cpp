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

#include "measurement.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "errors.hpp"

namespace zfumes {

LatticePartition::LatticePartition(int sites) : locked_(static_cast<std::size_t>(sites), false) {
  require(sites >= 1, "partition needs at least one site");
  rebuild();
}

void LatticePartition::rebuild() {
  sublattices_.clear();
  const int n = sites();
  int j = 0;
  while (j < n) {
    if (locked_[static_cast<std::size_t>(j)]) {
      ++j;
      continue;
    }
    const int first = j;
    while (j < n && !locked_[static_cast<std::size_t>(j)]) ++j;
    sublattices_.push_back({first, j - first});
  }
}

std::vector<int> LatticePartition::locked_sites() const {
  std::vector<int> out;
  for (int j = 0; j < sites(); ++j) {
    if (locked_[static_cast<std::size_t>(j)]) out.push_back(j);
  }
  return out;
}

int LatticePartition::locked_count() const {
  return static_cast<int>(std::count(locked_.begin(), locked_.end(), true));
}

LatticePartition LatticePartition::with_locks(std::span<const int> sites) const {
  LatticePartition next = *this;
  for (int s : sites) {
    require(s >= 0 && s < this->sites(), "lock site " + std::to_string(s) + " out of range");
    next.locked_[static_cast<std::size_t>(s)] = true;
  }
  next.rebuild();
  return next;
}

std::vector<double> born_probabilities(const Eigen::VectorXcd& amplitudes) {
  const double norm = amplitudes.norm();
  if (std::abs(norm - 1.0) > 1e-9) {
    throw InvalidArgument("born_probabilities: state is not normalized (norm " +
                          std::to_string(norm) + ")");
  }
  std::vector<double> p(static_cast<std::size_t>(amplitudes.size()));
  for (Eigen::Index k = 0; k < amplitudes.size(); ++k) p[static_cast<std::size_t>(k)] = std::norm(amplitudes(k));
  return p;
}

std::vector<double> born_probabilities(const StateVector& state) {
  return born_probabilities(state.amplitudes());
}

std::size_t sample_index(std::span<const double> probabilities, Rng& rng) {
  require(!probabilities.empty(), "cannot sample from an empty distribution");
  double total = 0.0;
  for (double p : probabilities) {
    require(p >= 0.0 && std::isfinite(p), "probabilities must be finite and non-negative");
    total += p;
  }
  require(total > 0.0, "probabilities sum to zero");
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last_nonzero = 0;
  for (std::size_t k = 0; k < probabilities.size(); ++k) {
    if (probabilities[k] <= 0.0) continue;
    acc += probabilities[k];
    last_nonzero = k;
    if (u < acc) return k;
  }
  return last_nonzero;
}

std::pair<MeasurementOutcome, StateVector> measure_all_sites(const StateVector& state, Rng& rng,
                                                             double time) {
  const auto probs = born_probabilities(state);
  const std::size_t k = sample_index(probs, rng);
  const FockState& outcome = state.basis().state(k);
  return {MeasurementOutcome{outcome, time}, StateVector::basis_state(state.basis_ptr(), outcome)};
}

std::vector<int> lockable_sites(const FockState& outcome, const LatticePartition& partition) {
  require(outcome.sites() == partition.sites(), "outcome and partition sizes differ");
  std::vector<int> out;
  for (const Sublattice& sub : partition.sublattices()) {
    int left = 0;
    for (int j = sub.first; j <= sub.last(); ++j) {
      if (outcome[j] == 1 && left == j - sub.first) out.push_back(j);
      left += outcome[j];
    }
  }
  return out;
}

bool unit_filled(const LatticePartition& partition, const FockState& occupations) {
  if (occupations.sites() != partition.sites()) return false;
  for (int j = 0; j < partition.sites(); ++j) {
    if (partition.is_locked(j) && occupations[j] != 1) return false;
  }
  for (const Sublattice& sub : partition.sublattices()) {
    if (occupations.slice(sub.first, sub.length).total() != sub.length) return false;
  }
  return true;
}

LatticePartition apply_locks(const LatticePartition& partition, std::span<const int> sites,
                             const FockState& outcome) {
  require(outcome.sites() == partition.sites(), "outcome and partition sizes differ");
  for (int s : sites) {
    require(s >= 0 && s < partition.sites(), "lock site " + std::to_string(s) + " out of range");
    require(!partition.is_locked(s), "site " + std::to_string(s) + " is already locked");
    require(outcome[s] == 1, "site " + std::to_string(s) + " does not hold exactly one particle");
  }
  LatticePartition next = partition.with_locks(sites);
  for (const Sublattice& sub : next.sublattices()) {
    if (outcome.slice(sub.first, sub.length).total() != sub.length) {
      throw InvalidArgument("locking would leave sublattice [" + std::to_string(sub.first) + ", " +
                            std::to_string(sub.last()) + "] away from unit filling");
    }
  }
  return next;
}

double fidelity(const StateVector& state, const FockState& target) {
  const std::size_t k = state.basis().index(target);
  return std::norm(state.amplitudes()(static_cast<Eigen::Index>(k)));
}

double fidelity(const StateVector& state, const StateVector& target) {
  require(&state.basis() == &target.basis() ||
              (state.basis().sites() == target.basis().sites() &&
               state.basis().particles() == target.basis().particles()),
          "fidelity: states live on different bases");
  return std::norm(target.amplitudes().dot(state.amplitudes()));
}

StateVector embed_product_state(const LatticePartition& partition, BasisPtr full_basis,
                                std::span<const StateVector> parts) {
  const auto& subs = partition.sublattices();
  require(parts.size() == subs.size(), "one part state per sublattice required");
  require(full_basis->sites() == partition.sites(), "basis and partition sizes differ");
  for (std::size_t s = 0; s < subs.size(); ++s) {
    require(parts[s].basis().sites() == subs[s].length && parts[s].basis().particles() == subs[s].length,
            "part state basis does not match its sublattice");
  }
  Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(full_basis->dim()));
  for (std::size_t k = 0; k < full_basis->dim(); ++k) {
    const FockState& st = full_basis->state(k);
    if (!unit_filled(partition, st)) continue;
    std::complex<double> a = 1.0;
    for (std::size_t s = 0; s < subs.size(); ++s) {
      const auto local = st.slice(subs[s].first, subs[s].length);
      a *= parts[s].amplitudes()(static_cast<Eigen::Index>(parts[s].basis().index(local)));
    }
    amps(static_cast<Eigen::Index>(k)) = a;
  }
  return StateVector(std::move(full_basis), std::move(amps));
}

}  // namespace zfumes
