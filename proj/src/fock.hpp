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

#ifndef ZFUMES_FOCK_HPP
#define ZFUMES_FOCK_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace zfumes {

// Upper bound on sites and particles for basis enumeration.
inline constexpr int kMaxSites = 12;
inline constexpr int kMaxParticles = 12;

// Occupation numbers |n_1, ..., n_L>. Sites are 0-based.
class FockState {
 public:
  using value_type = std::uint8_t;

  FockState() = default;
  explicit FockState(std::vector<value_type> occupations) : occ_(std::move(occupations)) {}
  FockState(std::initializer_list<int> occupations);

  // Unit filling |1, 1, ..., 1>.
  static FockState mott(int sites) {
    return FockState(std::vector<value_type>(static_cast<std::size_t>(sites), 1));
  }

  int sites() const { return static_cast<int>(occ_.size()); }
  int total() const;
  int operator[](int site) const { return occ_[static_cast<std::size_t>(site)]; }
  void set(int site, int n) { occ_[static_cast<std::size_t>(site)] = static_cast<value_type>(n); }

  auto begin() const { return occ_.begin(); }
  auto end() const { return occ_.end(); }

  // Occupations of sites [first, first + length).
  FockState slice(int first, int length) const;

  std::string to_string() const;

  friend bool operator==(const FockState&, const FockState&) = default;

 private:
  std::vector<value_type> occ_;
};

// All compositions of N particles over L sites, in lexicographically
// descending order: (N,0,...,0) first, (0,...,0,N) last.
class FockBasis {
 public:
  FockBasis(int sites, int particles);

  int sites() const { return sites_; }
  int particles() const { return particles_; }
  std::size_t dim() const { return states_.size(); }

  const FockState& state(std::size_t index) const;
  std::size_t index(const FockState& state) const;
  std::optional<std::size_t> find(const FockState& state) const;

  const std::vector<FockState>& states() const { return states_; }

  // occupations()(k, j) = n_j of basis state k.
  const Eigen::MatrixXd& occupations() const { return occupations_; }

 private:
  std::uint64_t key(const FockState& state) const;

  int sites_;
  int particles_;
  std::vector<FockState> states_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
  Eigen::MatrixXd occupations_;
};

using BasisPtr = std::shared_ptr<const FockBasis>;

BasisPtr enumerate_basis(int sites, int particles);

// (2N)! / (2 (N!)^2), the number of unit-filling configurations of N sites.
// Throws std::overflow_error if the value does not fit in 64 bits.
std::uint64_t dim_unit_filling(int n);

// Binomial coefficient; throws std::overflow_error past 64 bits.
std::uint64_t binomial(int n, int k);

// Normalized amplitude vector over a Fock basis.
class StateVector {
 public:
  StateVector(BasisPtr basis, Eigen::VectorXcd amplitudes);

  static StateVector basis_state(BasisPtr basis, const FockState& state);

  const FockBasis& basis() const { return *basis_; }
  const BasisPtr& basis_ptr() const { return basis_; }
  const Eigen::VectorXcd& amplitudes() const { return amplitudes_; }
  Eigen::VectorXcd& amplitudes() { return amplitudes_; }

  double norm() const { return amplitudes_.norm(); }
  bool is_normalized(double tol = 1e-9) const { return std::abs(norm() - 1.0) <= tol; }
  void normalize();

 private:
  BasisPtr basis_;
  Eigen::VectorXcd amplitudes_;
};

}  // namespace zfumes

#endif  // ZFUMES_FOCK_HPP
