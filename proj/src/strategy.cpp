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

#include "strategy.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace zfumes {

using cplx = std::complex<double>;

std::string to_string(Protocol p) { return p == Protocol::Fumes ? "fumes" : "zfumes"; }

Protocol parse_protocol(const std::string& name) {
  if (name == "fumes" || name == "FUMES") return Protocol::Fumes;
  if (name == "zfumes" || name == "ZFUMES" || name == "z-fumes") return Protocol::ZFumes;
  throw InvalidArgument("unknown strategy '" + name + "' (expected fumes or zfumes)");
}

void StrategyConfig::validate() const {
  require(peak_threshold > 0.0 && peak_threshold <= 1.0, "peak threshold must lie in (0, 1]");
  require(scan_step > 0.0 && scan_step < horizon, "need 0 < scan step < horizon");
  require(horizon <= max_time, "horizon must not exceed max time");
  require(grid_step > 0.0, "grid step must be positive");
  require(convergence_fidelity > 0.0 && convergence_fidelity <= 1.0,
          "convergence fidelity must lie in (0, 1]");
}

std::size_t StrategyConfig::grid_points() const {
  return static_cast<std::size_t>(std::floor(max_time / grid_step + 1e-9)) + 1;
}

OverlapSeries::OverlapSeries(PropagatorPtr propagator, const Eigen::VectorXcd& psi, Eigen::Index target)
    : propagator_(std::move(propagator)) {
  require(propagator_ != nullptr, "overlap series needs a propagator");
  require(target >= 0 && target < propagator_->dim(), "target index out of range");
  coefficients_ = propagator_->to_eigenbasis(psi);
  weights_.assign(propagator_->level_count(), cplx(0.0, 0.0));
  const auto& vecs = propagator_->eigenvectors();
  for (Eigen::Index m = 0; m < propagator_->dim(); ++m) {
    weights_[static_cast<std::size_t>(propagator_->level_of(m))] += vecs(target, m) * coefficients_(m);
  }
}

cplx OverlapSeries::amplitude(double t) const {
  const auto& e = propagator_->level_energies();
  cplx a = 0.0;
  for (std::size_t l = 0; l < weights_.size(); ++l) a += weights_[l] * std::polar(1.0, -e[l] * t);
  return a;
}

std::vector<double> OverlapSeries::scan(double step, std::size_t count) const {
  const auto& e = propagator_->level_energies();
  const std::size_t nl = weights_.size();
  std::vector<cplx> rot(nl), cur(weights_);
  for (std::size_t l = 0; l < nl; ++l) rot[l] = std::polar(1.0, -e[l] * step);
  std::vector<double> out(count + 1);
  for (std::size_t i = 0; i <= count; ++i) {
    if (i % 64 == 0 && i > 0) {  // resync against accumulated rounding
      const double t = static_cast<double>(i) * step;
      for (std::size_t l = 0; l < nl; ++l) cur[l] = weights_[l] * std::polar(1.0, -e[l] * t);
    }
    cplx a = 0.0;
    for (std::size_t l = 0; l < nl; ++l) a += cur[l];
    out[i] = std::norm(a);
    for (std::size_t l = 0; l < nl; ++l) cur[l] *= rot[l];
  }
  return out;
}

double find_measurement_time(std::span<const OverlapSeries> factors, const StrategyConfig& config) {
  const auto n = static_cast<std::size_t>(std::llround(config.horizon / config.scan_step));
  std::vector<double> g(n + 1, 1.0);
  for (const auto& f : factors) {
    const auto s = f.scan(config.scan_step, n);
    for (std::size_t i = 0; i <= n; ++i) g[i] *= s[i];
  }
  const double gmax = *std::max_element(g.begin(), g.end());
  if (!(gmax > 1e-14)) {
    throw NumericalError("no coupling to the target within the scan horizon");
  }
  const double threshold = config.peak_threshold * gmax;
  const double slack = 1e-12 * gmax;
  for (std::size_t i = 0; i <= n; ++i) {
    if (g[i] < threshold) continue;
    const bool left_ok = i == 0 || g[i] >= g[i - 1] - slack;
    const bool right_ok = i == n || g[i] >= g[i + 1] - slack;
    if (left_ok && right_ok) return static_cast<double>(i) * config.scan_step;
  }
  // Unreachable: the global maximum always qualifies.
  return static_cast<double>(std::max_element(g.begin(), g.end()) - g.begin()) * config.scan_step;
}

namespace {

struct Component {
  Sublattice range;
  BasisPtr basis;
  OverlapSeries series;
};

Component make_component(PropagatorCache& cache, const BHParams& params, Sublattice range,
                         const Eigen::VectorXcd& psi) {
  auto entry = cache.get(range.length, params.tunneling, params.interaction);
  const auto mott = static_cast<Eigen::Index>(entry.basis->index(FockState::mott(range.length)));
  return Component{range, entry.basis, OverlapSeries(entry.propagator, psi, mott)};
}

Component fock_component(PropagatorCache& cache, const BHParams& params, Sublattice range,
                         const FockState& local) {
  auto entry = cache.get(range.length, params.tunneling, params.interaction);
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(entry.basis->dim()));
  psi(static_cast<Eigen::Index>(entry.basis->index(local))) = 1.0;
  return make_component(cache, params, range, psi);
}

}  // namespace

TrajectoryRecord run_trajectory(const BHParams& params, const StrategyConfig& config, Rng& rng,
                                PropagatorCache& cache) {
  config.validate();
  require(params.sites >= 1, "need at least one site");
  require(params.particles == params.sites, "Mott preparation requires unit filling (N = L)");
  require(params.tunneling > 0.0, "free evolution needs J > 0");

  const int L = params.sites;
  TrajectoryRecord rec;
  rec.grid_step = config.grid_step;
  const std::size_t npts = config.grid_points();
  rec.fidelity.assign(npts, 0.0);

  if (L == 1) {
    rec.converged_at = 0.0;
    std::fill(rec.fidelity.begin(), rec.fidelity.end(), 1.0);
    return rec;
  }

  const auto full = cache.get(L, params.tunneling, params.interaction);
  const auto free_chain = cache.get(L, params.tunneling, 0.0);
  const StateVector sf = superfluid_state(*free_chain.propagator, full.basis);

  LatticePartition partition(L);
  std::vector<Component> comps;
  comps.push_back(make_component(cache, params, Sublattice{0, L}, sf.amplitudes()));

  double t = 0.0;      // protocol time
  double origin = 0.0; // time at which the current components were built
  std::size_t g = 0;

  auto current_fidelity = [&](double at) {
    double f = 1.0;
    for (const auto& c : comps) f *= c.series.probability(at - origin);
    return f;
  };
  auto fill_before = [&](double t_end) {
    while (g < npts && static_cast<double>(g) * config.grid_step < t_end) {
      rec.fidelity[g] = current_fidelity(static_cast<double>(g) * config.grid_step);
      ++g;
    }
  };

  std::vector<OverlapSeries> factors;
  for (;;) {
    factors.clear();
    for (const auto& c : comps) factors.push_back(c.series);
    const double wait = find_measurement_time(factors, config);
    if (t + wait > config.max_time) {
      fill_before(config.max_time + 0.5 * config.grid_step);
      break;
    }
    fill_before(t + wait);
    t += wait;

    FockState outcome = FockState::mott(L);
    for (const auto& c : comps) {
      Eigen::VectorXcd psi = c.series.propagator()->from_eigenbasis(c.series.coefficients(), t - origin);
      psi.normalize();
      const auto probs = born_probabilities(psi);
      const FockState& local = c.basis->state(sample_index(probs, rng));
      for (int j = 0; j < c.range.length; ++j) outcome.set(c.range.first + j, local[j]);
    }
    ++rec.measurement_count;

    MeasurementEvent ev{t, outcome, {}};
    bool converged = false;
    if (config.protocol == Protocol::Fumes) {
      converged = outcome == FockState::mott(L);
      if (!converged) {
        comps.clear();
        comps.push_back(fock_component(cache, params, Sublattice{0, L}, outcome));
      }
    } else {
      ev.locked = lockable_sites(outcome, partition);
      partition = apply_locks(partition, ev.locked, outcome);
      converged = partition.complete();
      comps.clear();
      for (const Sublattice& sub : partition.sublattices()) {
        comps.push_back(fock_component(cache, params, sub, outcome.slice(sub.first, sub.length)));
      }
    }
    origin = t;
    rec.events.push_back(std::move(ev));
    if (converged) {
      rec.converged_at = t;
      for (; g < npts; ++g) rec.fidelity[g] = 1.0;
      break;
    }
  }
  return rec;
}

std::vector<double> linear_ramp_curve(const BHParams& params, std::span<const double> total_times,
                                      double final_ratio, int n_steps) {
  require(n_steps >= 1, "ramp needs at least one slice");
  require(params.particles == params.sites, "Mott fidelity requires unit filling (N = L)");
  for (double t : total_times) require(t >= 0.0 && std::isfinite(t), "ramp time must be non-negative");
  auto basis = enumerate_basis(params.sites, params.particles);
  const StateVector sf = superfluid_state(params, basis);
  const auto mott = static_cast<Eigen::Index>(basis->index(FockState::mott(params.sites)));

  std::vector<bool> bonds(static_cast<std::size_t>(std::max(params.sites - 1, 0)), true);
  const RealSparse hop = build_hopping_sparse(*basis, params.tunneling, bonds);
  Eigen::VectorXd onsite(static_cast<Eigen::Index>(basis->dim()));
  for (std::size_t k = 0; k < basis->dim(); ++k) {
    double e = 0.0;
    for (int n : basis->state(k)) e += 0.5 * n * (n - 1);
    onsite(static_cast<Eigen::Index>(k)) = e;
  }

  std::vector<double> out;
  out.reserve(total_times.size());
  for (double total_time : total_times) {
    Eigen::VectorXcd psi = sf.amplitudes();
    if (total_time > 0.0) {
      const double dt = total_time / n_steps;
      for (int s = 0; s < n_steps; ++s) {
        const double u = final_ratio * params.tunneling * (s + 0.5) / n_steps;
        psi = krylov_propagate(hop, (u * onsite).eval(), psi, dt);
      }
    }
    out.push_back(std::norm(psi(mott)) / psi.squaredNorm());
  }
  return out;
}

double linear_ramp(const BHParams& params, double total_time, double final_ratio, int n_steps) {
  const double times[] = {total_time};
  return linear_ramp_curve(params, times, final_ratio, n_steps).front();
}

}  // namespace zfumes
