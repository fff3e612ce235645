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

#ifndef ZFUMES_MEASUREMENT_HPP
#define ZFUMES_MEASUREMENT_HPP

#include <Eigen/Dense>

#include <span>
#include <utility>
#include <vector>

#include "fock.hpp"
#include "rng.hpp"

namespace zfumes {

// Contiguous run of unlocked sites [first, first + length).
struct Sublattice {
  int first = 0;
  int length = 0;
  int last() const { return first + length - 1; }
  friend bool operator==(const Sublattice&, const Sublattice&) = default;
};

// Zeno-locked sites (always at occupancy 1) plus the maximal runs of
// unlocked sites between them. Each run of k sites holds k particles.
class LatticePartition {
 public:
  explicit LatticePartition(int sites);

  int sites() const { return static_cast<int>(locked_.size()); }
  bool is_locked(int site) const { return locked_.at(static_cast<std::size_t>(site)); }
  const std::vector<Sublattice>& sublattices() const { return sublattices_; }
  std::vector<int> locked_sites() const;
  int locked_count() const;
  bool complete() const { return sublattices_.empty(); }

  // Partition with `sites` additionally locked; no filling check.
  LatticePartition with_locks(std::span<const int> sites) const;

 private:
  void rebuild();

  std::vector<bool> locked_;
  std::vector<Sublattice> sublattices_;
};

struct MeasurementOutcome {
  FockState occupations;
  double time = 0.0;
};

// |amplitude_k|^2. Rejects states whose norm is off by more than 1e-9.
std::vector<double> born_probabilities(const StateVector& state);
std::vector<double> born_probabilities(const Eigen::VectorXcd& amplitudes);

// Inverse-CDF draw from a discrete distribution.
std::size_t sample_index(std::span<const double> probabilities, Rng& rng);

// Simultaneous projective measurement of every n_j: returns the outcome and
// the collapsed basis state.
std::pair<MeasurementOutcome, StateVector> measure_all_sites(const StateVector& state, Rng& rng,
                                                             double time = 0.0);

// Sites that may be Zeno-locked given a full-lattice outcome: inside each
// active sublattice, site j qualifies iff it holds one particle and the
// sites to its left hold exactly as many particles as there are sites.
std::vector<int> lockable_sites(const FockState& outcome, const LatticePartition& partition);

// Locks `sites`; every one must be unlocked with occupancy 1 in `outcome`, and
// every resulting sublattice must be unit-filled.
LatticePartition apply_locks(const LatticePartition& partition, std::span<const int> sites,
                             const FockState& outcome);

// True iff every sublattice of `partition` holds as many particles as sites
// in `occupations` and every locked site holds one.
bool unit_filled(const LatticePartition& partition, const FockState& occupations);

double fidelity(const StateVector& state, const FockState& target);
double fidelity(const StateVector& state, const StateVector& target);

// Full-lattice state from independent sublattice states; locked sites hold
// one particle. `parts[s]` lives on the (k, k) basis of sublattice s.
StateVector embed_product_state(const LatticePartition& partition, BasisPtr full_basis,
                                std::span<const StateVector> parts);

}  // namespace zfumes

#endif  // ZFUMES_MEASUREMENT_HPP
