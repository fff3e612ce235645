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

#include "general_control.hpp"

#include <cmath>
#include <memory>

#include "errors.hpp"
#include "measurement.hpp"

namespace zfumes {

using cplx = std::complex<double>;

LabeledBasis::LabeledBasis(int observables, int outcomes) : observables_(observables), outcomes_(outcomes) {
  require(observables >= 1, "need at least one observable");
  require(outcomes >= 2, "each observable needs at least two outcomes");
  std::size_t d = 1;
  for (int i = 0; i < observables; ++i) {
    require(d <= kMaxDim / static_cast<std::size_t>(outcomes),
            "B^L exceeds the dimension cap of " + std::to_string(kMaxDim));
    d *= static_cast<std::size_t>(outcomes);
  }
  dim_ = d;
  place_.resize(static_cast<std::size_t>(observables));
  std::size_t p = 1;
  for (int i = observables - 1; i >= 0; --i) {
    place_[static_cast<std::size_t>(i)] = p;
    p *= static_cast<std::size_t>(outcomes);
  }
}

int LabeledBasis::digit(std::size_t index, int i) const {
  require(index < dim_, "basis index out of range");
  require(i >= 0 && i < observables_, "observable index out of range");
  return static_cast<int>(index / place_[static_cast<std::size_t>(i)] % static_cast<std::size_t>(outcomes_));
}

Label LabeledBasis::label(std::size_t index) const {
  Label q(static_cast<std::size_t>(observables_));
  for (int i = 0; i < observables_; ++i) q[static_cast<std::size_t>(i)] = digit(index, i);
  return q;
}

std::size_t LabeledBasis::index(const Label& label) const {
  require(label.size() == static_cast<std::size_t>(observables_), "label length must equal L");
  std::size_t k = 0;
  for (int i = 0; i < observables_; ++i) {
    const int q = label[static_cast<std::size_t>(i)];
    require(q >= 0 && q < outcomes_, "label digit out of range");
    k += static_cast<std::size_t>(q) * place_[static_cast<std::size_t>(i)];
  }
  return k;
}

ObservableSet::ObservableSet(LabeledBasis basis) : basis_(std::move(basis)) {
  for (int i = 0; i < basis_.observables(); ++i) {
    Eigen::VectorXd d(static_cast<Eigen::Index>(basis_.dim()));
    for (std::size_t k = 0; k < basis_.dim(); ++k) d(static_cast<Eigen::Index>(k)) = basis_.digit(k, i);
    diag_.push_back(std::move(d));
  }
}

ObservableSet build_observables(int observables, int outcomes) {
  return ObservableSet(LabeledBasis(observables, outcomes));
}

HermitianOperator sample_gue(std::size_t dim, Rng& rng) {
  require(dim >= 2, "GUE dimension must be at least 2");
  const auto n = static_cast<Eigen::Index>(dim);
  std::normal_distribution<double> diag(0.0, std::sqrt(1.0 / static_cast<double>(dim)));
  std::normal_distribution<double> off(0.0, std::sqrt(0.5 / static_cast<double>(dim)));
  Eigen::MatrixXcd h(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    h(i, i) = diag(rng);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double re = off(rng);
      const double im = off(rng);
      h(i, j) = cplx(re, im);
      h(j, i) = cplx(re, -im);
    }
  }
  return HermitianOperator(std::move(h), 0.0);
}

std::pair<Label, Eigen::VectorXcd> measure_observables(const Eigen::VectorXcd& state,
                                                       const ObservableSet& obs, Rng& rng) {
  require(state.size() == static_cast<Eigen::Index>(obs.basis().dim()), "state does not match basis");
  const auto probs = born_probabilities(state);
  const std::size_t k = sample_index(probs, rng);
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(state.size());
  out(static_cast<Eigen::Index>(k)) = 1.0;
  return {obs.basis().label(k), std::move(out)};
}

ZenoSubspace::ZenoSubspace(const HermitianOperator& h, const LabeledBasis& basis, const LockMap& locks) {
  require(h.dim() == static_cast<Eigen::Index>(basis.dim()), "Hamiltonian does not match basis");
  for (const auto& [i, q] : locks) {
    require(i >= 0 && i < basis.observables(), "locked observable out of range");
    require(q >= 0 && q < basis.outcomes(), "locked value out of range");
  }
  position_.assign(basis.dim(), -1);
  for (std::size_t k = 0; k < basis.dim(); ++k) {
    bool inside = true;
    for (const auto& [i, q] : locks) inside = inside && basis.digit(k, i) == q;
    if (inside) {
      position_[k] = static_cast<Eigen::Index>(members_.size());
      members_.push_back(k);
    }
  }
  const auto m = static_cast<Eigen::Index>(members_.size());
  Eigen::MatrixXcd block(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      block(a, b) = h.matrix()(static_cast<Eigen::Index>(members_[static_cast<std::size_t>(a)]),
                               static_cast<Eigen::Index>(members_[static_cast<std::size_t>(b)]));
    }
  }
  propagator_ = std::make_shared<const Propagator>(HermitianOperator(std::move(block), 0.0));
}

Eigen::Index ZenoSubspace::position(std::size_t full_index) const {
  require(full_index < position_.size(), "basis index out of range");
  return position_[full_index];
}

Eigen::VectorXcd ZenoSubspace::restrict(const Eigen::VectorXcd& full) const {
  require(full.size() == static_cast<Eigen::Index>(position_.size()), "state does not match basis");
  Eigen::VectorXcd sub(static_cast<Eigen::Index>(members_.size()));
  for (std::size_t a = 0; a < members_.size(); ++a) sub(static_cast<Eigen::Index>(a)) = full(static_cast<Eigen::Index>(members_[a]));
  return sub;
}

Eigen::VectorXcd ZenoSubspace::embed(const Eigen::VectorXcd& sub, std::size_t full_dim) const {
  require(sub.size() == static_cast<Eigen::Index>(members_.size()), "subspace state size mismatch");
  Eigen::VectorXcd full = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(full_dim));
  for (std::size_t a = 0; a < members_.size(); ++a) full(static_cast<Eigen::Index>(members_[a])) = sub(static_cast<Eigen::Index>(a));
  return full;
}

namespace {

bool coupled(const ZenoSubspace& zs, std::size_t current, std::size_t target, const CouplingOptions& options) {
  const Eigen::Index c = zs.position(current);
  const Eigen::Index tg = zs.position(target);
  if (c < 0 || tg < 0) return false;
  if (c == tg) return true;
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(zs.dim()));
  psi(c) = 1.0;
  const OverlapSeries series(zs.propagator(), psi, tg);
  const auto n = static_cast<std::size_t>(std::ceil(options.horizon / options.step - 1e-9));
  const auto g = series.scan(options.step, n);
  const double eps2 = options.epsilon * options.epsilon;
  for (double v : g) {
    if (v > eps2) return true;
  }
  return false;
}

void check_options(const CouplingOptions& o) {
  require(o.epsilon >= 0.0 && o.epsilon < 1.0, "epsilon_o must lie in [0, 1)");
  require(o.horizon > 0.0 && o.step > 0.0 && o.step <= o.horizon, "need 0 < coupling step <= horizon");
}

std::uint64_t lock_mask(const LockMap& locks) {
  std::uint64_t m = 0;
  for (const auto& [i, q] : locks) m |= std::uint64_t{1} << i;
  return m;
}

}  // namespace

bool coupling_check(std::size_t current, std::size_t target, const HermitianOperator& h,
                    const LabeledBasis& basis, const LockMap& locks, const CouplingOptions& options) {
  check_options(options);
  require(current < basis.dim() && target < basis.dim(), "basis index out of range");
  for (const auto& [i, q] : locks) {
    if (basis.digit(target, i) != q) return false;
  }
  return coupled(ZenoSubspace(h, basis, locks), current, target, options);
}

TrajectoryRecord run_general_trajectory(const HermitianOperator& h, const ObservableSet& obs,
                                        const Label& target_label, const StrategyConfig& config,
                                        const GeneralOptions& options, Rng& rng) {
  config.validate();
  check_options(options.coupling);
  require(options.max_measurements >= 1, "max_measurements must be positive");
  const LabeledBasis& basis = obs.basis();
  require(h.dim() == static_cast<Eigen::Index>(basis.dim()), "Hamiltonian does not match basis");
  const std::size_t target = basis.index(target_label);
  const int L = basis.observables();

  TrajectoryRecord rec;
  rec.grid_step = config.grid_step;
  const std::size_t npts = config.grid_points();
  rec.fidelity.assign(npts, 0.0);

  // Uniform over the basis states other than the target.
  std::uniform_int_distribution<std::size_t> pick(0, basis.dim() - 2);
  std::size_t current = pick(rng);
  if (current >= target) ++current;

  // Subspaces are reused across measurements; a lock set is a bit mask
  // since locked values always equal the target's digits.
  std::map<std::uint64_t, std::shared_ptr<const ZenoSubspace>> spaces;
  auto space_for = [&](const LockMap& locks) {
    const std::uint64_t m = lock_mask(locks);
    auto it = spaces.find(m);
    if (it == spaces.end()) it = spaces.emplace(m, std::make_shared<const ZenoSubspace>(h, basis, locks)).first;
    return it->second;
  };

  LockMap locks;
  double t = 0.0;
  std::size_t g = 0;
  while (rec.measurement_count < options.max_measurements) {
    const auto zs = space_for(locks);
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(zs->dim()));
    psi(zs->position(current)) = 1.0;
    const OverlapSeries series(zs->propagator(), psi, zs->position(target));
    double wait = 0.0;
    try {
      wait = find_measurement_time(std::span<const OverlapSeries>(&series, 1), config);
    } catch (const NumericalError&) {
      break;  // stalled: no path to the target inside the locked subspace
    }
    if (t + wait > config.max_time) {
      while (g < npts && static_cast<double>(g) * config.grid_step <= config.max_time + 1e-9) {
        rec.fidelity[g] = series.probability(static_cast<double>(g) * config.grid_step - t);
        ++g;
      }
      break;
    }
    while (g < npts && static_cast<double>(g) * config.grid_step < t + wait) {
      rec.fidelity[g] = series.probability(static_cast<double>(g) * config.grid_step - t);
      ++g;
    }
    t += wait;
    Eigen::VectorXcd evolved = zs->propagator()->from_eigenbasis(series.coefficients(), wait);
    evolved.normalize();
    const std::size_t pos = sample_index(born_probabilities(evolved), rng);
    current = zs->members()[pos];
    ++rec.measurement_count;

    Label outcome = basis.label(current);
    MeasurementEvent ev{t, FockState(std::vector<FockState::value_type>(outcome.begin(), outcome.end())), {}};
    if (current == target) {
      rec.events.push_back(std::move(ev));
      rec.converged_at = t;
      for (; g < npts; ++g) rec.fidelity[g] = 1.0;
      return rec;
    }
    if (config.protocol == Protocol::ZFumes) {
      for (int i = 0; i < L; ++i) {
        if (locks.count(i) || outcome[static_cast<std::size_t>(i)] != target_label[static_cast<std::size_t>(i)]) continue;
        LockMap candidate = locks;
        candidate[i] = target_label[static_cast<std::size_t>(i)];
        if (coupled(*space_for(candidate), current, target, options.coupling)) {
          locks = std::move(candidate);
          ev.locked.push_back(i);
        }
      }
    }
    rec.events.push_back(std::move(ev));
  }
  for (; g < npts; ++g) rec.fidelity[g] = 0.0;
  return rec;
}

GeneralEstimate mz_general(int outcomes, int observables) {
  require(outcomes >= 2, "B must be at least 2");
  require(observables >= 1, "L must be at least 1");
  GeneralEstimate e;
  double h = 0.0;
  for (int k = 1; k <= observables; ++k) h += 1.0 / k;
  e.sum = outcomes * h;
  e.approx = outcomes * std::log(static_cast<double>(observables));
  return e;
}

}  // namespace zfumes
