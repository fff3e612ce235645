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

#include "sse.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "errors.hpp"

namespace zfumes {

using cplx = std::complex<double>;

std::string to_string(LockMode m) { return m == LockMode::Projector ? "projector" : "finite"; }

LockMode parse_lock_mode(const std::string& name) {
  if (name == "projector") return LockMode::Projector;
  if (name == "finite") return LockMode::Finite;
  throw InvalidArgument("unknown lock mode '" + name + "' (expected projector or finite)");
}

std::string to_string(WindowRule r) { return r == WindowRule::Purity ? "purity" : "decision"; }

WindowRule parse_window_rule(const std::string& name) {
  if (name == "purity") return WindowRule::Purity;
  if (name == "decision") return WindowRule::Decision;
  throw InvalidArgument("unknown window rule '" + name + "' (expected purity or decision)");
}

void SSEConfig::validate() const {
  require(gamma >= 0.0 && std::isfinite(gamma), "gamma must be finite and non-negative");
  require(gamma_lock > 0.0 && std::isfinite(gamma_lock), "gamma_lock must be positive");
  require(energy_scale > 0.0, "J_d must be positive");
  require(dt > 0.0 && dt_lock > 0.0, "time steps must be positive");
  require(gamma * dt <= 0.01 + 1e-12, "dt too large for gamma (need dt <= 0.01 / gamma)");
  if (lock_mode == LockMode::Finite) {
    require(gamma_lock * dt_lock <= 0.01 + 1e-12,
            "dt_lock too large for gamma_lock (need dt_lock <= 0.01 / gamma_lock)");
  }
  require(window_cut > 0.0 && window_cut < 1.0, "window cut must lie in (0, 1)");
  require(lock_cut > 0.0 && lock_cut < 1.0, "lock cut must lie in (0, 1)");
  require(max_window > 0.0, "max_window must be positive");
}

SSEStepper::SSEStepper(SSEModel model, std::vector<double> gammas)
    : model_(std::move(model)), gammas_(std::move(gammas)) {
  const auto dim = model_.occupations.rows();
  require(static_cast<Eigen::Index>(gammas_.size()) == model_.occupations.cols(),
          "one measurement strength per site required");
  require(model_.diagonal.size() == 0 || model_.diagonal.size() == dim, "diagonal size mismatch");
  require(model_.offdiag == nullptr || model_.offdiag->rows() == dim, "Hamiltonian size mismatch");
  for (double g : gammas_) require(g >= 0.0 && std::isfinite(g), "measurement strengths must be >= 0");
  if (model_.diagonal.size() == 0) model_.diagonal = Eigen::VectorXd::Zero(dim);
  occ_squared_ = model_.occupations.cwiseAbs2();
  a_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(gammas_.size()));
  b_ = a_;
}

double SSEStepper::step(Eigen::VectorXcd& psi, double dt, Rng& rng, double* currents) {
  require(psi.size() == model_.occupations.rows(), "state size does not match the model");
  populations_ = psi.cwiseAbs2();
  const double sqdt = std::sqrt(dt);
  for (std::size_t j = 0; j < gammas_.size(); ++j) {
    const double g = gammas_[j];
    const auto jj = static_cast<Eigen::Index>(j);
    if (g == 0.0) {
      a_(jj) = b_(jj) = 0.0;
      if (currents) currents[j] = 0.0;
      continue;
    }
    const double mean = model_.occupations.col(jj).dot(populations_);
    const double dw = sqdt * normal_(rng);
    const double current = 2.0 * g * mean + std::sqrt(g) * dw / dt;
    a_(jj) = current * dt;
    b_(jj) = -0.5 * g * dt;
    if (currents) currents[j] = current;
  }
  const Eigen::VectorXd real_part = model_.occupations * a_ + occ_squared_ * b_;
  work_ = psi;
  work_.array() += (real_part.array().cast<cplx>() - cplx(0.0, dt) * model_.diagonal.array().cast<cplx>()) *
                   psi.array();
  if (model_.offdiag != nullptr) work_.noalias() -= cplx(0.0, dt) * (*model_.offdiag * psi);
  const double norm = work_.norm();
  if (!std::isfinite(norm) || norm < 1e-150) {
    throw NumericalError("stochastic step diverged (norm " + std::to_string(norm) + "); reduce dt");
  }
  psi = work_ / norm;
  return norm;
}

double sse_step(Eigen::VectorXcd& psi, const SSEModel& model, std::span<const double> gammas, double dt,
                Rng& rng, double* currents) {
  SSEStepper stepper(model, std::vector<double>(gammas.begin(), gammas.end()));
  return stepper.step(psi, dt, rng, currents);
}

namespace {

Eigen::VectorXd onsite_diagonal(const FockBasis& basis, double u) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(basis.dim()));
  for (std::size_t k = 0; k < basis.dim(); ++k) {
    double e = 0.0;
    for (int n : basis.state(k)) e += 0.5 * u * n * (n - 1);
    d(static_cast<Eigen::Index>(k)) = e;
  }
  return d;
}

std::vector<bool> open_bonds(const LatticePartition& partition) {
  const int L = partition.sites();
  std::vector<bool> bonds(static_cast<std::size_t>(std::max(L - 1, 0)));
  for (int j = 0; j + 1 < L; ++j) {
    bonds[static_cast<std::size_t>(j)] = !partition.is_locked(j) && !partition.is_locked(j + 1);
  }
  return bonds;
}

// P H P on the full unit-filled chain for every lock pattern seen so far.
class ZenoChainCache {
 public:
  PropagatorPtr get(const FockBasis& basis, double tunneling, const LatticePartition& partition) {
    std::uint64_t mask = 0;
    for (int j = 0; j < partition.sites(); ++j) {
      if (partition.is_locked(j)) mask |= std::uint64_t{1} << j;
    }
    const auto key = std::make_tuple(basis.sites(), tunneling, mask);
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
    const RealSparse h = build_hopping_sparse(basis, tunneling, open_bonds(partition));
    auto prop = std::make_shared<const Propagator>(
        HermitianOperator(Eigen::MatrixXd(h).cast<cplx>()));
    entries_.emplace(key, prop);
    return prop;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, double, std::uint64_t>, PropagatorPtr> entries_;
};

ZenoChainCache& zeno_cache() {
  static ZenoChainCache cache;
  return cache;
}

PropagatorCache& chain_propagators() {
  static PropagatorCache cache;
  return cache;
}

std::mutex basis_mutex;

struct ChainData {
  BasisPtr basis;
  RealSparse hopping;
};

const ChainData& chain_data(int sites, double tunneling) {
  static std::map<std::pair<int, double>, ChainData> chains;
  std::lock_guard<std::mutex> lock(basis_mutex);
  auto it = chains.find({sites, tunneling});
  if (it == chains.end()) {
    auto basis = enumerate_basis(sites, sites);
    std::vector<bool> bonds(static_cast<std::size_t>(std::max(sites - 1, 0)), true);
    RealSparse h = build_hopping_sparse(*basis, tunneling, bonds);
    it = chains.emplace(std::make_pair(sites, tunneling), ChainData{basis, std::move(h)}).first;
  }
  return it->second;
}

}  // namespace

WindowResult measurement_window(Eigen::VectorXcd& psi, const FockBasis& basis,
                                const LatticePartition& partition, const SSEConfig& config, Rng& rng,
                                const StepObserver& observer) {
  config.validate();
  require(psi.size() == static_cast<Eigen::Index>(basis.dim()), "state does not match basis");
  require(partition.sites() == basis.sites(), "partition does not match basis");
  const double nrm = psi.norm();
  require(std::abs(nrm - 1.0) <= 1e-9, "measurement window needs a normalized state");

  const int L = basis.sites();
  std::vector<double> gammas(static_cast<std::size_t>(L), 0.0);
  for (int j = 0; j < L; ++j) {
    if (!partition.is_locked(j)) gammas[static_cast<std::size_t>(j)] = config.gamma;
  }
  SSEStepper stepper(SSEModel{nullptr, onsite_diagonal(basis, config.energy_scale), basis.occupations()},
                     std::move(gammas));

  // lockable(k, j): basis state k would let site j be locked.
  Eigen::MatrixXd lockable;
  if (config.window_rule == WindowRule::Decision) {
    lockable = Eigen::MatrixXd::Zero(psi.size(), L);
    for (std::size_t k = 0; k < basis.dim(); ++k) {
      if (!unit_filled(partition, basis.state(k))) continue;
      for (int j : lockable_sites(basis.state(k), partition)) lockable(static_cast<Eigen::Index>(k), j) = 1.0;
    }
  }
  auto settled = [&](Eigen::Index& best) {
    const Eigen::VectorXd p = psi.cwiseAbs2();
    const double top = p.maxCoeff(&best);
    if (config.window_rule == WindowRule::Purity) return top >= 1.0 - config.window_cut;
    const FockState& guess = basis.state(static_cast<std::size_t>(best));
    if (!unit_filled(partition, guess)) return top >= 1.0 - config.window_cut;
    const Eigen::VectorXd pl = lockable.transpose() * p;
    const auto sites = lockable_sites(guess, partition);
    std::size_t next = 0;
    for (int j = 0; j < L; ++j) {
      if (partition.is_locked(j)) continue;
      const bool want = next < sites.size() && sites[next] == j;
      if (want) ++next;
      if (want ? pl(j) < 1.0 - config.lock_cut : pl(j) > config.window_cut) return false;
    }
    return true;
  };

  WindowResult res;
  res.record.sites = L;
  res.record.dt = config.dt;
  const auto max_steps = static_cast<long long>(std::ceil(config.max_window / config.dt - 1e-9));
  std::vector<double> currents(static_cast<std::size_t>(L));
  Eigen::Index best = 0;
  long long s = 0;
  for (;; ++s) {
    if (settled(best)) {
      res.resolved = true;
      break;
    }
    if (s >= max_steps) break;
    stepper.step(psi, config.dt, rng, currents.data());
    if (config.keep_records) res.record.current.insert(res.record.current.end(), currents.begin(), currents.end());
    if (observer) observer(static_cast<double>(s + 1) * config.dt, psi);
  }
  res.duration = static_cast<double>(s) * config.dt;
  res.outcome = MeasurementOutcome{basis.state(static_cast<std::size_t>(best)), res.duration};
  return res;
}

TrajectoryRecord run_continuous_trajectory(const BHParams& params, const SSEConfig& sse,
                                           const StrategyConfig& strategy, Rng& rng,
                                           ContinuousDiagnostics* diagnostics) {
  sse.validate();
  strategy.validate();
  require(params.sites >= 1, "need at least one site");
  require(params.particles == params.sites, "Mott preparation requires unit filling (N = L)");
  ContinuousDiagnostics local_diag;
  ContinuousDiagnostics& diag = diagnostics ? *diagnostics : local_diag;

  const int L = params.sites;
  const double jd = sse.energy_scale;
  const ChainData& chain = chain_data(L, jd);
  const FockBasis& basis = *chain.basis;
  const auto mott = static_cast<Eigen::Index>(basis.index(FockState::mott(L)));

  TrajectoryRecord rec;
  rec.grid_step = strategy.grid_step;
  const std::size_t npts = strategy.grid_points();
  rec.fidelity.assign(npts, 0.0);

  LatticePartition partition(L);
  Eigen::VectorXcd psi =
      superfluid_state(*zeno_cache().get(basis, jd, partition), chain.basis).amplitudes();

  double t = 0.0;
  std::size_t g = 0;
  auto sample = [&](double now, const Eigen::VectorXcd& state) {
    while (g < npts && static_cast<double>(g) * strategy.grid_step <= now + 1e-9) {
      rec.fidelity[g++] = std::norm(state(mott));
    }
  };
  sample(0.0, psi);

  std::optional<SSEStepper> lock_stepper;
  std::vector<bool> stepper_locks;

  while (t < strategy.max_time && L > 1) {
    const double t0 = t;
    WindowResult w = measurement_window(psi, basis, partition, sse, rng,
                                        [&](double el, const Eigen::VectorXcd& s) { sample(t0 + el, s); });
    t += w.duration;
    diag.window_time += w.duration;
    ++rec.measurement_count;
    MeasurementEvent ev{t, w.outcome.occupations, {}};
    if (sse.keep_records) {
      w.record.start = t0;
      diag.records.push_back(std::move(w.record));
    }

    bool leaked = false;
    for (int j : partition.locked_sites()) leaked = leaked || ev.outcome[j] != 1;
    if (leaked || !unit_filled(partition, ev.outcome)) {
      // Particles moved through the locks: start over from the full lattice.
      ++diag.leak_events;
      partition = LatticePartition(L);
    }
    const LatticePartition previous = partition;
    if (!w.resolved) {
      ++diag.unresolved_windows;
    } else {
      ev.locked = lockable_sites(ev.outcome, partition);
      partition = apply_locks(partition, ev.locked, ev.outcome);
    }
    rec.events.push_back(ev);

    bool released = false;
    if ((sse.lock_mode == LockMode::Projector || partition.complete()) && !ev.locked.empty()) {
      // Infinitely strong locking reads the new sites projectively. Finite
      // locks collapse within a few 1/gamma_lock, so the last window is read
      // the same way.
      const auto& occ = basis.occupations();
      std::vector<double> probs(static_cast<std::size_t>(psi.size()));
      for (Eigen::Index k = 0; k < psi.size(); ++k) probs[static_cast<std::size_t>(k)] = std::norm(psi(k));
      const auto drawn = static_cast<Eigen::Index>(sample_index(probs, rng));
      bool faithful = true;
      for (Eigen::Index k = 0; k < psi.size(); ++k) {
        for (int j : ev.locked) {
          if (occ(k, j) != occ(drawn, j)) {
            psi(k) = 0.0;
            break;
          }
        }
      }
      for (int j : ev.locked) faithful = faithful && occ(drawn, j) == 1.0;
      psi.normalize();
      if (!faithful) {
        // A lock that reads back n != 1 is released together with the
        // other locks of this window; the read itself is kept.
        ++diag.leak_events;
        partition = previous;
        rec.events.back().locked.clear();
        Eigen::Index best = 0;
        psi.cwiseAbs2().maxCoeff(&best);
        ev.outcome = basis.state(static_cast<std::size_t>(best));
        ev.locked.clear();
        released = true;
      }
    }

    if (partition.complete()) {
      rec.converged_at = t;
      for (; g < npts; ++g) rec.fidelity[g] = 1.0;
      return rec;
    }
    if (t >= strategy.max_time) break;
    // A failed read-back is followed by a new window at once, as with finite locks.
    if (released) continue;

    // Peak timing from ideal projective dynamics of the decoded outcome.
    if (!unit_filled(partition, ev.outcome)) {
      ++diag.leak_events;
      partition = LatticePartition(L);
    }
    std::vector<OverlapSeries> factors;
    for (const Sublattice& sub : partition.sublattices()) {
      const auto entry = chain_propagators().get(sub.length, jd, 0.0);
      Eigen::VectorXcd local = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(entry.basis->dim()));
      local(static_cast<Eigen::Index>(entry.basis->index(ev.outcome.slice(sub.first, sub.length)))) = 1.0;
      factors.emplace_back(entry.propagator, local,
                           static_cast<Eigen::Index>(entry.basis->index(FockState::mott(sub.length))));
    }
    double wait = 0.0;
    try {
      wait = find_measurement_time(factors, strategy);
    } catch (const NumericalError&) {
      diag.stalled = true;
      break;
    }
    const PropagatorPtr prop = zeno_cache().get(basis, jd, partition);
    const OverlapSeries series(prop, psi, mott);
    wait = std::min(wait, strategy.max_time - t);

    if (sse.lock_mode == LockMode::Projector || partition.locked_count() == 0) {
      while (g < npts && static_cast<double>(g) * strategy.grid_step <= t + wait + 1e-9) {
        rec.fidelity[g] = series.probability(static_cast<double>(g) * strategy.grid_step - t);
        ++g;
      }
      psi = prop->apply(psi, wait);
      psi.normalize();
    } else {
      std::vector<bool> locks(static_cast<std::size_t>(L));
      for (int j = 0; j < L; ++j) locks[static_cast<std::size_t>(j)] = partition.is_locked(j);
      if (!lock_stepper || locks != stepper_locks) {
        std::vector<double> gammas(static_cast<std::size_t>(L), 0.0);
        for (int j = 0; j < L; ++j) {
          if (locks[static_cast<std::size_t>(j)]) gammas[static_cast<std::size_t>(j)] = sse.gamma_lock;
        }
        lock_stepper.emplace(SSEModel{&chain.hopping, Eigen::VectorXd(), basis.occupations()},
                             std::move(gammas));
        stepper_locks = locks;
      }
      const auto& occ = basis.occupations();
      auto reads_one = [&](int j) {
        double p1 = 0.0;
        for (Eigen::Index k = 0; k < psi.size(); ++k) {
          if (occ(k, j) == 1.0) p1 += std::norm(psi(k));
        }
        return p1 >= 0.5;
      };
      // New locks collapse within a few 1/gamma_lock; a site that settles
      // away from n = 1 releases the locks of this window at once.
      const auto n = static_cast<long long>(std::llround(wait / sse.dt_lock));
      const auto settle = static_cast<long long>(std::ceil(20.0 / (sse.gamma_lock * sse.dt_lock)));
      for (long long s = 1; s <= n; ++s) {
        lock_stepper->step(psi, sse.dt_lock, rng);
        sample(t + static_cast<double>(s) * sse.dt_lock, psi);
        if (s == std::min(settle, n) && !ev.locked.empty() &&
            !std::all_of(ev.locked.begin(), ev.locked.end(), reads_one)) {
          ++diag.leak_events;
          partition = previous;
          rec.events.back().locked.clear();
          wait = static_cast<double>(s) * sse.dt_lock;
          break;
        }
      }
      // Older locks can leak at second order in the hopping.
      std::vector<int> kept;
      for (int j : partition.locked_sites()) {
        if (reads_one(j)) kept.push_back(j);
      }
      if (kept.size() != static_cast<std::size_t>(partition.locked_count())) {
        ++diag.leak_events;
        partition = LatticePartition(L).with_locks(kept);
      }
    }
    t += wait;
  }

  // Time left after a stall or the last window: hold the current fidelity.
  const double f = std::norm(psi(mott));
  if (L == 1) {
    rec.converged_at = 0.0;
    for (; g < npts; ++g) rec.fidelity[g] = 1.0;
    return rec;
  }
  for (; g < npts; ++g) rec.fidelity[g] = f;
  return rec;
}

}  // namespace zfumes
