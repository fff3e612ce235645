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

#ifndef ZFUMES_BOSE_HUBBARD_HPP
#define ZFUMES_BOSE_HUBBARD_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "fock.hpp"
#include "measurement.hpp"

namespace zfumes {

using RealSparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Open chain: H = -J sum_j (a+_j a_{j+1} + h.c.) + U/2 sum_j n_j (n_j - 1).
struct BHParams {
  int sites = 1;
  int particles = 1;
  double tunneling = 1.0;    // J
  double interaction = 0.0;  // U
};

// Dense Hermitian matrix. Construction checks max |H - H+| <= tol.
class HermitianOperator {
 public:
  explicit HermitianOperator(Eigen::MatrixXcd matrix, double tol = 1e-12);

  Eigen::Index dim() const { return matrix_.rows(); }
  const Eigen::MatrixXcd& matrix() const { return matrix_; }
  bool is_real() const { return is_real_; }

 private:
  Eigen::MatrixXcd matrix_;
  bool is_real_;
};

HermitianOperator build_hamiltonian(const BHParams& params, const FockBasis& basis);
RealSparse build_hamiltonian_sparse(const BHParams& params, const FockBasis& basis);

// Only the hopping part, and only across bonds whose both ends are unlocked.
RealSparse build_hopping_sparse(const FockBasis& basis, double tunneling,
                                const std::vector<bool>& bond_enabled);

HermitianOperator number_operator(int site, const FockBasis& basis);

// Ground state of the U = 0 chain, phased so its largest amplitude is real
// and positive. Throws NumericalError on a degenerate ground space.
StateVector superfluid_state(const BHParams& params, BasisPtr basis);

// Cached eigendecomposition H = V diag(lambda) V+. Eigenvalues that agree to
// 1e-9 are grouped into levels, which keeps overlap time series short for
// the heavily degenerate free-boson spectrum.
class Propagator {
 public:
  explicit Propagator(const HermitianOperator& op);

  Eigen::Index dim() const { return eigenvalues_.size(); }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXcd& eigenvectors() const { return vectors_; }

  // V+ psi
  Eigen::VectorXcd to_eigenbasis(const Eigen::VectorXcd& psi) const;
  // V diag(exp(-i lambda t)) c
  Eigen::VectorXcd from_eigenbasis(const Eigen::VectorXcd& coefficients, double t) const;
  // exp(-i H t) psi
  Eigen::VectorXcd apply(const Eigen::VectorXcd& psi, double t) const;

  std::size_t level_count() const { return level_energies_.size(); }
  const std::vector<double>& level_energies() const { return level_energies_; }
  int level_of(Eigen::Index m) const { return level_of_[static_cast<std::size_t>(m)]; }

  // Row k of V, conjugated: <k|m> for all eigenvectors m.
  Eigen::VectorXcd basis_row(Eigen::Index k) const;

 private:
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXcd vectors_;
  Eigen::MatrixXd real_vectors_;
  bool real_ = false;
  std::vector<double> level_energies_;
  std::vector<int> level_of_;
};

using PropagatorPtr = std::shared_ptr<const Propagator>;

// Ground state of an already diagonalized U = 0 chain.
StateVector superfluid_state(const Propagator& free_chain, BasisPtr basis);

// Thread-safe memo of unit-filled chain propagators keyed by (L, J, U).
class PropagatorCache {
 public:
  struct Entry {
    BasisPtr basis;
    PropagatorPtr propagator;
  };

  Entry get(int sites, double tunneling, double interaction);

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, double, double>, Entry> entries_;
};

StateVector propagate(const StateVector& state, const Propagator& propagator, double t);
StateVector propagate(const StateVector& state, const HermitianOperator& op, double t);

// Lanczos exp(-i H t) psi for a real symmetric sparse H, with adaptive
// substeps to keep the Krylov truncation error under `tol`.
Eigen::VectorXcd krylov_propagate(const RealSparse& h, const Eigen::VectorXcd& psi, double t,
                                  double tol = 1e-12, int krylov_dim = 30);
// Same, for H = h + diag(diagonal).
Eigen::VectorXcd krylov_propagate(const RealSparse& h, const Eigen::VectorXd& diagonal,
                                  const Eigen::VectorXcd& psi, double t, double tol = 1e-12,
                                  int krylov_dim = 30);

struct SublatticeBlock {
  Sublattice range;
  BasisPtr basis;
  HermitianOperator hamiltonian;
};

// Decoupled unit-filled chains left between locked sites: P H P restricted
// to the sector where every sublattice holds as many particles as sites.
std::vector<SublatticeBlock> project_hamiltonian(const BHParams& params,
                                                 const LatticePartition& partition);

}  // namespace zfumes

#endif  // ZFUMES_BOSE_HUBBARD_HPP
