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

#include "fock.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "errors.hpp"

namespace zfumes {

FockState::FockState(std::initializer_list<int> occupations) {
  occ_.reserve(occupations.size());
  for (int n : occupations) {
    require(n >= 0 && n <= std::numeric_limits<value_type>::max(), "occupation out of range");
    occ_.push_back(static_cast<value_type>(n));
  }
}

int FockState::total() const { return std::accumulate(occ_.begin(), occ_.end(), 0); }

FockState FockState::slice(int first, int length) const {
  require(first >= 0 && length >= 0 && first + length <= sites(), "slice out of range");
  return FockState(std::vector<value_type>(occ_.begin() + first, occ_.begin() + first + length));
}

std::string FockState::to_string() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t j = 0; j < occ_.size(); ++j) {
    if (j) os << ',';
    os << static_cast<int>(occ_[j]);
  }
  os << ')';
  return os.str();
}

namespace {

void enumerate(int site, int remaining, std::vector<FockState::value_type>& current,
               std::vector<FockState>& out) {
  const int sites = static_cast<int>(current.size());
  if (site == sites - 1) {
    current[static_cast<std::size_t>(site)] = static_cast<FockState::value_type>(remaining);
    out.emplace_back(current);
    return;
  }
  for (int n = remaining; n >= 0; --n) {
    current[static_cast<std::size_t>(site)] = static_cast<FockState::value_type>(n);
    enumerate(site + 1, remaining - n, current, out);
  }
}

}  // namespace

FockBasis::FockBasis(int sites, int particles) : sites_(sites), particles_(particles) {
  require(sites >= 1, "basis needs at least one site");
  require(particles >= 0, "particle number must be non-negative");
  require(sites <= kMaxSites && particles <= kMaxParticles,
          "basis exceeds the dimension cap (L, N <= 12)");

  states_.reserve(binomial(particles + sites - 1, particles));
  std::vector<FockState::value_type> current(static_cast<std::size_t>(sites), 0);
  enumerate(0, particles, current, states_);

  index_.reserve(states_.size());
  occupations_.resize(static_cast<Eigen::Index>(states_.size()), sites);
  for (std::size_t k = 0; k < states_.size(); ++k) {
    index_.emplace(key(states_[k]), k);
    for (int j = 0; j < sites; ++j) occupations_(static_cast<Eigen::Index>(k), j) = states_[k][j];
  }
}

std::uint64_t FockBasis::key(const FockState& state) const {
  std::uint64_t k = 0;
  for (int n : state) k = k * static_cast<std::uint64_t>(particles_ + 1) + static_cast<std::uint64_t>(n);
  return k;
}

const FockState& FockBasis::state(std::size_t index) const {
  if (index >= states_.size()) {
    throw InvalidArgument("basis index " + std::to_string(index) + " out of range (dim " +
                          std::to_string(states_.size()) + ")");
  }
  return states_[index];
}

std::optional<std::size_t> FockBasis::find(const FockState& state) const {
  if (state.sites() != sites_ || state.total() != particles_) return std::nullopt;
  auto it = index_.find(key(state));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t FockBasis::index(const FockState& state) const {
  auto k = find(state);
  if (!k) throw InvalidArgument("state " + state.to_string() + " is not in the basis");
  return *k;
}

BasisPtr enumerate_basis(int sites, int particles) {
  return std::make_shared<const FockBasis>(sites, particles);
}

std::uint64_t binomial(int n, int k) {
  require(n >= 0 && k >= 0 && k <= n, "invalid binomial arguments");
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (r > std::numeric_limits<std::uint64_t>::max()) {
      throw std::overflow_error("binomial(" + std::to_string(n) + ", " + std::to_string(k) +
                                ") exceeds 64 bits");
    }
  }
  return static_cast<std::uint64_t>(r);
}

std::uint64_t dim_unit_filling(int n) {
  require(n >= 1, "dim_unit_filling needs N >= 1");
  // C(2N, N) overflows one step before C(2N, N) / 2 can; go through 128 bits.
  unsigned __int128 r = 1;
  for (int i = 1; i <= n; ++i) {
    r = r * static_cast<unsigned>(n + i) / static_cast<unsigned>(i);
    if (r >> 65) throw std::overflow_error("dim_unit_filling(" + std::to_string(n) + ") exceeds 64 bits");
  }
  r /= 2;
  if (r > std::numeric_limits<std::uint64_t>::max()) {
    throw std::overflow_error("dim_unit_filling(" + std::to_string(n) + ") exceeds 64 bits");
  }
  return static_cast<std::uint64_t>(r);
}

StateVector::StateVector(BasisPtr basis, Eigen::VectorXcd amplitudes)
    : basis_(std::move(basis)), amplitudes_(std::move(amplitudes)) {
  require(basis_ != nullptr, "state vector needs a basis");
  require(static_cast<std::size_t>(amplitudes_.size()) == basis_->dim(),
          "amplitude vector length does not match basis dimension");
}

StateVector StateVector::basis_state(BasisPtr basis, const FockState& state) {
  const std::size_t k = basis->index(state);
  Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis->dim()));
  amps(static_cast<Eigen::Index>(k)) = 1.0;
  return StateVector(std::move(basis), std::move(amps));
}

void StateVector::normalize() {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("cannot normalize a zero or non-finite state");
  amplitudes_ /= n;
}

}  // namespace zfumes
