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

#include "bose_hubbard.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "errors.hpp"

namespace zfumes {

using cplx = std::complex<double>;

HermitianOperator::HermitianOperator(Eigen::MatrixXcd matrix, double tol) : matrix_(std::move(matrix)) {
  require(matrix_.rows() == matrix_.cols(), "operator must be square");
  require(matrix_.rows() >= 1, "operator must be non-empty");
  const double asym = (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
  if (!(asym <= tol)) {
    throw InvalidArgument("operator is not Hermitian (max |H - H+| = " + std::to_string(asym) + ")");
  }
  is_real_ = matrix_.imag().cwiseAbs().maxCoeff() == 0.0;
}

namespace {

void check_basis(const BHParams& params, const FockBasis& basis) {
  if (params.sites != basis.sites() || params.particles != basis.particles()) {
    throw InvalidArgument("basis (L=" + std::to_string(basis.sites()) + ", N=" +
                          std::to_string(basis.particles()) + ") does not match parameters (L=" +
                          std::to_string(params.sites) + ", N=" + std::to_string(params.particles) + ")");
  }
  require(std::isfinite(params.tunneling) && std::isfinite(params.interaction),
          "J and U must be finite");
}

template <class Emit>
void for_each_hop(const FockBasis& basis, const std::vector<bool>& bond_enabled, Emit&& emit) {
  const int L = basis.sites();
  for (std::size_t k = 0; k < basis.dim(); ++k) {
    const FockState& st = basis.state(k);
    for (int j = 0; j + 1 < L; ++j) {
      if (!bond_enabled[static_cast<std::size_t>(j)]) continue;
      const int nl = st[j];
      const int nr = st[j + 1];
      if (nr > 0) {  // a+_j a_{j+1}
        FockState to = st;
        to.set(j, nl + 1);
        to.set(j + 1, nr - 1);
        emit(basis.index(to), k, std::sqrt(static_cast<double>((nl + 1) * nr)));
      }
      if (nl > 0) {  // a+_{j+1} a_j
        FockState to = st;
        to.set(j, nl - 1);
        to.set(j + 1, nr + 1);
        emit(basis.index(to), k, std::sqrt(static_cast<double>(nl * (nr + 1))));
      }
    }
  }
}

double onsite_energy(const FockState& st, double interaction) {
  double e = 0.0;
  for (int n : st) e += 0.5 * interaction * n * (n - 1);
  return e;
}

}  // namespace

RealSparse build_hopping_sparse(const FockBasis& basis, double tunneling,
                                const std::vector<bool>& bond_enabled) {
  require(bond_enabled.size() + 1 >= static_cast<std::size_t>(basis.sites()), "bond mask too short");
  std::vector<Eigen::Triplet<double>> trips;
  for_each_hop(basis, bond_enabled, [&](std::size_t row, std::size_t col, double amp) {
    trips.emplace_back(static_cast<int>(row), static_cast<int>(col), -tunneling * amp);
  });
  const auto d = static_cast<Eigen::Index>(basis.dim());
  RealSparse h(d, d);
  h.setFromTriplets(trips.begin(), trips.end());
  return h;
}

RealSparse build_hamiltonian_sparse(const BHParams& params, const FockBasis& basis) {
  check_basis(params, basis);
  std::vector<bool> bonds(static_cast<std::size_t>(std::max(basis.sites() - 1, 0)), true);
  std::vector<Eigen::Triplet<double>> trips;
  for_each_hop(basis, bonds, [&](std::size_t row, std::size_t col, double amp) {
    trips.emplace_back(static_cast<int>(row), static_cast<int>(col), -params.tunneling * amp);
  });
  if (params.interaction != 0.0) {
    for (std::size_t k = 0; k < basis.dim(); ++k) {
      const double e = onsite_energy(basis.state(k), params.interaction);
      if (e != 0.0) trips.emplace_back(static_cast<int>(k), static_cast<int>(k), e);
    }
  }
  const auto d = static_cast<Eigen::Index>(basis.dim());
  RealSparse h(d, d);
  h.setFromTriplets(trips.begin(), trips.end());
  return h;
}

HermitianOperator build_hamiltonian(const BHParams& params, const FockBasis& basis) {
  const RealSparse h = build_hamiltonian_sparse(params, basis);
  return HermitianOperator(Eigen::MatrixXd(h).cast<cplx>());
}

HermitianOperator number_operator(int site, const FockBasis& basis) {
  require(site >= 0 && site < basis.sites(), "site " + std::to_string(site) + " out of range");
  return HermitianOperator(basis.occupations().col(site).cast<cplx>().asDiagonal().toDenseMatrix());
}

StateVector superfluid_state(const BHParams& params, BasisPtr basis) {
  require(params.tunneling > 0.0, "superfluid state needs J > 0");
  BHParams free = params;
  free.interaction = 0.0;
  const Propagator chain(build_hamiltonian(free, *basis));
  return superfluid_state(chain, std::move(basis));
}

StateVector superfluid_state(const Propagator& prop, BasisPtr basis) {
  require(prop.dim() == static_cast<Eigen::Index>(basis->dim()), "propagator does not match basis");
  const auto& ev = prop.eigenvalues();
  if (ev.size() > 1 && ev(1) - ev(0) < 1e-9 * std::max(1.0, std::abs(ev(0)))) {
    throw NumericalError("superfluid ground state is degenerate");
  }
  Eigen::VectorXcd v = prop.eigenvectors().col(0);
  Eigen::Index kmax = 0;
  v.cwiseAbs().maxCoeff(&kmax);
  v *= std::conj(v(kmax)) / std::abs(v(kmax));
  StateVector out(std::move(basis), std::move(v));
  out.normalize();
  return out;
}

Propagator::Propagator(const HermitianOperator& op) {
  if (op.is_real()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.matrix().real());
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    eigenvalues_ = es.eigenvalues();
    real_vectors_ = es.eigenvectors();
    vectors_ = real_vectors_.cast<cplx>();
    real_ = true;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(op.matrix());
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    eigenvalues_ = es.eigenvalues();
    vectors_ = es.eigenvectors();
  }

  const double scale = std::max(1.0, eigenvalues_.cwiseAbs().maxCoeff());
  level_of_.resize(static_cast<std::size_t>(eigenvalues_.size()));
  for (Eigen::Index m = 0; m < eigenvalues_.size(); ++m) {
    if (level_energies_.empty() || eigenvalues_(m) - level_energies_.back() > 1e-9 * scale) {
      level_energies_.push_back(eigenvalues_(m));
    }
    level_of_[static_cast<std::size_t>(m)] = static_cast<int>(level_energies_.size()) - 1;
  }
}

Eigen::VectorXcd Propagator::to_eigenbasis(const Eigen::VectorXcd& psi) const {
  require(psi.size() == dim(), "state dimension does not match propagator");
  if (real_) {
    const Eigen::VectorXd re = real_vectors_.transpose() * psi.real();
    const Eigen::VectorXd im = real_vectors_.transpose() * psi.imag();
    Eigen::VectorXcd c(dim());
    c.real() = re;
    c.imag() = im;
    return c;
  }
  return vectors_.adjoint() * psi;
}

Eigen::VectorXcd Propagator::from_eigenbasis(const Eigen::VectorXcd& coefficients, double t) const {
  require(coefficients.size() == dim(), "coefficient dimension does not match propagator");
  Eigen::VectorXcd d(dim());
  for (Eigen::Index m = 0; m < dim(); ++m) d(m) = coefficients(m) * std::polar(1.0, -eigenvalues_(m) * t);
  if (real_) {
    const Eigen::VectorXd re = real_vectors_ * d.real();
    const Eigen::VectorXd im = real_vectors_ * d.imag();
    Eigen::VectorXcd out(dim());
    out.real() = re;
    out.imag() = im;
    return out;
  }
  return vectors_ * d;
}

Eigen::VectorXcd Propagator::apply(const Eigen::VectorXcd& psi, double t) const {
  require(std::isfinite(t), "propagation time must be finite");
  return from_eigenbasis(to_eigenbasis(psi), t);
}

Eigen::VectorXcd Propagator::basis_row(Eigen::Index k) const {
  return vectors_.row(k).adjoint();
}

PropagatorCache::Entry PropagatorCache::get(int sites, double tunneling, double interaction) {
  const auto key = std::make_tuple(sites, tunneling, interaction);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
  }
  // Built outside the lock; a racing duplicate is discarded below.
  Entry e;
  e.basis = enumerate_basis(sites, sites);
  e.propagator = std::make_shared<const Propagator>(
      build_hamiltonian(BHParams{sites, sites, tunneling, interaction}, *e.basis));
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_.emplace(key, std::move(e)).first->second;
}

StateVector propagate(const StateVector& state, const Propagator& propagator, double t) {
  return StateVector(state.basis_ptr(), propagator.apply(state.amplitudes(), t));
}

StateVector propagate(const StateVector& state, const HermitianOperator& op, double t) {
  return propagate(state, Propagator(op), t);
}

namespace {

template <class MatVec>
Eigen::VectorXcd lanczos_propagate(MatVec&& apply_h, const Eigen::VectorXcd& psi, double t, double tol,
                                   int krylov_dim) {
  if (!std::isfinite(t)) throw InvalidArgument("propagation time must be finite");
  Eigen::VectorXcd v = psi;
  double remaining = t;
  const double sign = t >= 0 ? 1.0 : -1.0;
  double step = std::abs(t);
  const int m_max = static_cast<int>(std::min<Eigen::Index>(krylov_dim, psi.size()));

  while (std::abs(remaining) > 0.0) {
    const double beta0 = v.norm();
    if (beta0 == 0.0) return v;
    std::vector<Eigen::VectorXcd> basis;
    basis.reserve(static_cast<std::size_t>(m_max) + 1);
    basis.push_back(v / beta0);
    Eigen::VectorXd alpha(m_max), beta(m_max);
    int m = 0;
    double beta_last = 0.0;
    for (; m < m_max; ++m) {
      Eigen::VectorXcd w = apply_h(basis.back());
      alpha(m) = basis.back().dot(w).real();
      for (const auto& q : basis) w -= q.dot(w) * q;  // full reorthogonalization
      beta_last = w.norm();
      if (beta_last < 1e-13 * (1.0 + std::abs(alpha(m)))) {
        ++m;
        beta_last = 0.0;
        break;
      }
      if (m + 1 < m_max) {
        beta(m) = beta_last;
        basis.push_back(w / beta_last);
      }
    }
    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      tri(i, i) = alpha(i);
      if (i + 1 < m) tri(i, i + 1) = tri(i + 1, i) = beta(i);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
    step = std::min(step, std::abs(remaining));
    Eigen::VectorXcd y;
    for (;;) {
      Eigen::VectorXcd phase(m);
      for (int i = 0; i < m; ++i) phase(i) = std::polar(1.0, -sign * es.eigenvalues()(i) * step) * es.eigenvectors()(0, i);
      y = es.eigenvectors().cast<cplx>() * phase;
      const double err = beta_last * std::abs(y(m - 1));
      if (err <= tol || step < 1e-12) break;
      step *= 0.5;
    }
    Eigen::VectorXcd next = Eigen::VectorXcd::Zero(v.size());
    for (int i = 0; i < m; ++i) next += y(i) * basis[static_cast<std::size_t>(i)];
    v = beta0 * next;
    remaining -= sign * step;
    if (std::abs(remaining) < 1e-15 * std::max(1.0, std::abs(t))) break;
  }
  return v;
}

}  // namespace

Eigen::VectorXcd krylov_propagate(const RealSparse& h, const Eigen::VectorXcd& psi, double t,
                                  double tol, int krylov_dim) {
  require(h.rows() == psi.size(), "state dimension does not match operator");
  return lanczos_propagate([&](const Eigen::VectorXcd& x) -> Eigen::VectorXcd { return h * x; }, psi,
                           t, tol, krylov_dim);
}

Eigen::VectorXcd krylov_propagate(const RealSparse& h, const Eigen::VectorXd& diagonal,
                                  const Eigen::VectorXcd& psi, double t, double tol, int krylov_dim) {
  require(h.rows() == psi.size() && diagonal.size() == psi.size(),
          "state dimension does not match operator");
  return lanczos_propagate(
      [&](const Eigen::VectorXcd& x) -> Eigen::VectorXcd {
        Eigen::VectorXcd y = h * x;
        y += diagonal.cwiseProduct(x);
        return y;
      },
      psi, t, tol, krylov_dim);
}

std::vector<SublatticeBlock> project_hamiltonian(const BHParams& params,
                                                 const LatticePartition& partition) {
  require(params.sites == partition.sites(), "partition does not match lattice size");
  require(params.particles == params.sites, "Zeno-locked sublattices require unit filling");
  std::vector<SublatticeBlock> blocks;
  for (const Sublattice& sub : partition.sublattices()) {
    auto basis = enumerate_basis(sub.length, sub.length);
    HermitianOperator h = build_hamiltonian(BHParams{sub.length, sub.length, params.tunneling,
                                                     params.interaction},
                                            *basis);
    blocks.push_back(SublatticeBlock{sub, std::move(basis), std::move(h)});
  }
  return blocks;
}

}  // namespace zfumes
