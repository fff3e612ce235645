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


#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <complex>

#include "errors.hpp"
#include "general_control.hpp"

using namespace zfumes;

namespace {

// exp(-i A t) psi by classical RK4 with a fine step.
Eigen::VectorXcd rk4(const Eigen::MatrixXcd& a, Eigen::VectorXcd psi, double t, int steps) {
  const std::complex<double> mi(0.0, -1.0);
  const double h = t / steps;
  for (int s = 0; s < steps; ++s) {
    const Eigen::VectorXcd k1 = mi * (a * psi);
    const Eigen::VectorXcd k2 = mi * (a * (psi + 0.5 * h * k1));
    const Eigen::VectorXcd k3 = mi * (a * (psi + 0.5 * h * k2));
    const Eigen::VectorXcd k4 = mi * (a * (psi + h * k3));
    psi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return psi;
}

int power(int b, int e) {
  int r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

TEST_CASE("labeled basis uses mixed-radix indexing") {
  const LabeledBasis basis(3, 3);
  REQUIRE(basis.dim() == 27);
  for (std::size_t k = 0; k < basis.dim(); ++k) {
    const Label q = basis.label(k);
    CHECK(static_cast<std::size_t>(q[0] * 9 + q[1] * 3 + q[2]) == k);
    CHECK(basis.index(q) == k);
    for (int i = 0; i < 3; ++i) CHECK(basis.digit(k, i) == q[static_cast<std::size_t>(i)]);
  }
  CHECK_THROWS_AS(LabeledBasis(0, 2), InvalidArgument);
  CHECK_THROWS_AS(LabeledBasis(2, 1), InvalidArgument);
  CHECK_THROWS_AS(LabeledBasis(13, 2), InvalidArgument);
  CHECK_THROWS_AS(basis.index(Label{0, 3, 0}), InvalidArgument);
  CHECK_THROWS_AS(basis.index(Label{0, 0}), InvalidArgument);
}

TEST_CASE("observables commute and carry the label digits") {
  const ObservableSet obs = build_observables(3, 2);
  for (int i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < obs.basis().dim(); ++k) {
      CHECK(obs.eigenvalues(i)(static_cast<Eigen::Index>(k)) == obs.basis().digit(k, i));
    }
    for (int j = 0; j < 3; ++j) {
      const Eigen::MatrixXd c = obs.matrix(i) * obs.matrix(j) - obs.matrix(j) * obs.matrix(i);
      CHECK(c.norm() == 0.0);
    }
  }
}

TEST_CASE("GUE samples") {
  Rng rng(12);
  const std::size_t dim = 256;
  double radius_min = 1e9;
  double radius_max = 0.0;
  double eig_sum = 0.0;
  double off2 = 0.0;
  double diag2 = 0.0;
  const int samples = 100;
  for (int s = 0; s < samples; ++s) {
    const HermitianOperator h = sample_gue(dim, rng);
    const Eigen::MatrixXcd& m = h.matrix();
    REQUIRE((m - m.adjoint()).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(m, Eigen::EigenvaluesOnly).eigenvalues();
    const double r = ev.cwiseAbs().maxCoeff();
    radius_min = std::min(radius_min, r);
    radius_max = std::max(radius_max, r);
    eig_sum += ev.sum();
    off2 += (m.cwiseAbs2().sum() - m.diagonal().cwiseAbs2().sum()) / static_cast<double>(dim * (dim - 1));
    diag2 += m.diagonal().cwiseAbs2().sum() / static_cast<double>(dim);
  }
  CHECK(radius_min >= 1.8);
  CHECK(radius_max <= 2.3);
  CHECK(std::abs(eig_sum / (samples * static_cast<double>(dim))) < 3.0 / std::sqrt(samples * static_cast<double>(dim)));
  CHECK(off2 / samples * dim == doctest::Approx(1.0).epsilon(0.01));
  CHECK(diag2 / samples * dim == doctest::Approx(1.0).epsilon(0.05));
  CHECK_THROWS_AS(sample_gue(1, rng), InvalidArgument);
}

TEST_CASE("joint measurement follows the Born rule") {
  const ObservableSet obs = build_observables(2, 2);
  Eigen::VectorXcd psi(4);
  psi << 0.1, std::complex<double>(0.0, 0.3), 0.5, std::complex<double>(-0.4, 0.2);
  psi.normalize();
  Rng rng(2);
  std::vector<int> counts(4, 0);
  const int draws = 40000;
  for (int d = 0; d < draws; ++d) {
    const auto [label, post] = measure_observables(psi, obs, rng);
    const std::size_t k = obs.basis().index(label);
    REQUIRE(std::abs(post(static_cast<Eigen::Index>(k))) == doctest::Approx(1.0));
    ++counts[k];
  }
  double chi2 = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double p = std::norm(psi(k));
    chi2 += std::pow(counts[static_cast<std::size_t>(k)] - draws * p, 2) / (draws * p);
  }
  CHECK(chi2 < boost::math::quantile(boost::math::chi_squared(3.0), 0.999));
}

TEST_CASE("Zeno subspace propagation") {
  Rng rng(31);
  const int L = 4;
  const int B = 3;
  const LabeledBasis basis(L, B);
  const HermitianOperator h = sample_gue(basis.dim(), rng);
  const LockMap locks{{0, 2}, {2, 1}};
  const ZenoSubspace zs(h, basis, locks);
  CHECK(zs.dim() == static_cast<std::size_t>(power(B, L - 2)));
  CHECK(ZenoSubspace(h, basis, {}).dim() == basis.dim());
  for (std::size_t k : zs.members()) {
    CHECK(basis.digit(k, 0) == 2);
    CHECK(basis.digit(k, 2) == 1);
  }
  std::size_t outside = 0;
  while (basis.digit(outside, 0) == 2 && basis.digit(outside, 2) == 1) ++outside;
  CHECK(zs.position(outside) == -1);

  // Oracle: P H P restricted by hand, integrated with RK4.
  const auto n = static_cast<Eigen::Index>(zs.dim());
  Eigen::MatrixXcd php(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      php(a, b) = h.matrix()(static_cast<Eigen::Index>(zs.members()[static_cast<std::size_t>(a)]),
                             static_cast<Eigen::Index>(zs.members()[static_cast<std::size_t>(b)]));
    }
  }
  Eigen::VectorXcd start = Eigen::VectorXcd::Zero(n);
  start(0) = 1.0;
  const double t = 3.7;
  const Eigen::VectorXcd got = zs.propagator()->apply(start, t);
  CHECK((got - rk4(php, start, t, 4000)).norm() < 1e-9);

  // Embedded evolution never leaves the locked eigenspace.
  const Eigen::VectorXcd full = zs.embed(got, basis.dim());
  for (std::size_t k = 0; k < basis.dim(); ++k) {
    if (zs.position(k) < 0) CHECK(full(static_cast<Eigen::Index>(k)) == std::complex<double>(0.0));
  }
  CHECK((zs.restrict(full) - got).norm() == 0.0);
  CHECK_THROWS_AS(ZenoSubspace(h, basis, LockMap{{4, 0}}), InvalidArgument);
  CHECK_THROWS_AS(ZenoSubspace(h, basis, LockMap{{0, 3}}), InvalidArgument);
}

TEST_CASE("coupling check on a block-diagonal Hamiltonian") {
  const LabeledBasis basis(2, 2);
  // Blocks {0, 1} and {2, 3}; observable 0 is the block label.
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(4, 4);
  m(0, 1) = m(1, 0) = 1.0;
  m(2, 3) = m(3, 2) = 1.0;
  const HermitianOperator h(m);
  const CouplingOptions opt{1e-3, 20.0, 0.05};
  const LockMap block0{{0, 0}};
  CHECK(coupling_check(0, 1, h, basis, block0, opt));
  CHECK_FALSE(coupling_check(0, 3, h, basis, block0, opt));
  CHECK(coupling_check(2, 2, h, basis, {}, opt));
  CHECK_FALSE(coupling_check(0, 2, h, basis, {}, opt));
  CHECK_THROWS_AS(coupling_check(0, 1, h, basis, block0, CouplingOptions{1.5, 20.0, 0.05}), InvalidArgument);
}

TEST_CASE("random-Hamiltonian trajectories") {
  const ObservableSet obs = build_observables(3, 2);
  const Label target{1, 1, 1};
  GeneralOptions options;
  StrategyConfig cfg;
  cfg.peak_threshold = kGeneralPeakThreshold;
  cfg.horizon = kGeneralHorizon;
  cfg.max_time = 1e6;
  cfg.grid_step = 1e5;
  Rng hrng(40);
  for (const Protocol protocol : {Protocol::Fumes, Protocol::ZFumes}) {
    cfg.protocol = protocol;
    int converged = 0;
    for (int k = 0; k < 20; ++k) {
      const HermitianOperator h = sample_gue(obs.basis().dim(), hrng);
      Rng rng = make_rng(3, static_cast<std::uint64_t>(k));
      const TrajectoryRecord r = run_general_trajectory(h, obs, target, cfg, options, rng);
      REQUIRE(!r.events.empty());
      // Locked observables keep their value on every later outcome.
      std::vector<bool> locked(3, false);
      for (const MeasurementEvent& ev : r.events) {
        for (int i = 0; i < 3; ++i) {
          if (locked[static_cast<std::size_t>(i)]) CHECK(ev.outcome[i] == 1);
        }
        if (protocol == Protocol::Fumes) CHECK(ev.locked.empty());
        for (int i : ev.locked) {
          CHECK(ev.outcome[i] == 1);
          locked[static_cast<std::size_t>(i)] = true;
        }
      }
      if (r.converged_at) {
        ++converged;
        CHECK(r.events.back().outcome == FockState{1, 1, 1});
      }
    }
    CHECK(converged >= 18);
  }
}

TEST_CASE("single observable behaves like a geometric trial") {
  // L = 1, B = 2: every read happens at the Rabi peak
  // p = 4|h01|^2 / ((h00 - h11)^2 + 4|h01|^2), after which the state is
  // either the target or the start again, so E[M] = 1/p.
  const ObservableSet obs = build_observables(1, 2);
  GeneralOptions options;
  StrategyConfig cfg;
  cfg.max_time = 1e6;
  cfg.grid_step = 1e5;
  cfg.scan_step = 1e-3;
  cfg.horizon = 20.0;
  Rng hrng(41);
  for (int h = 0; h < 3; ++h) {
    const HermitianOperator ham = sample_gue(2, hrng);
    const Eigen::MatrixXcd& m = ham.matrix();
    const double c = 4.0 * std::norm(m(0, 1));
    const double p = c / (std::pow(m(0, 0).real() - m(1, 1).real(), 2) + c);
    const int runs = 3000;
    double s = 0.0;
    double s2 = 0.0;
    for (int k = 0; k < runs; ++k) {
      Rng rng = make_rng(8 + static_cast<std::uint64_t>(h), static_cast<std::uint64_t>(k));
      const TrajectoryRecord r = run_general_trajectory(ham, obs, Label{1}, cfg, options, rng);
      REQUIRE(r.converged_at);
      s += r.measurement_count;
      s2 += static_cast<double>(r.measurement_count) * r.measurement_count;
    }
    const double mean = s / runs;
    const double se = std::sqrt((s2 / runs - mean * mean) / runs);
    CHECK(std::abs(mean - 1.0 / p) < 4.0 * se + 0.01 / p);
  }
}

TEST_CASE("general measurement estimate") {
  CHECK(mz_general(3, 3).sum == doctest::Approx(5.5).epsilon(1e-14));
  CHECK(mz_general(2, 1).sum == doctest::Approx(2.0));
  CHECK(mz_general(2, 7).approx == doctest::Approx(2.0 * std::log(7.0)));
  CHECK(mz_general(2, 10000).sum / mz_general(2, 10000).approx < 1.1);
  CHECK_THROWS_AS(mz_general(1, 3), InvalidArgument);
  CHECK_THROWS_AS(mz_general(2, 0), InvalidArgument);
}
