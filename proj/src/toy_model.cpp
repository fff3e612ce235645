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

#include "toy_model.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "errors.hpp"
#include "measurement.hpp"

namespace zfumes {

std::string to_string(Distribution d) { return d == Distribution::Multinomial ? "multinomial" : "uniform"; }

Distribution parse_distribution(const std::string& name) {
  if (name == "multinomial") return Distribution::Multinomial;
  if (name == "uniform") return Distribution::Uniform;
  throw InvalidArgument("unknown distribution '" + name + "' (expected multinomial or uniform)");
}

double multinomial_prob(const FockState& n) {
  const int L = n.sites();
  require(L >= 1, "configuration needs at least one site");
  require(n.total() == L, "multinomial_prob needs unit filling (sum n_j = L)");
  long double log_p = std::lgamma(static_cast<long double>(L) + 1) - L * std::log(static_cast<long double>(L));
  for (int nj : n) log_p -= std::lgamma(static_cast<long double>(nj) + 1);
  return static_cast<double>(std::exp(log_p));
}

FockState sample_configuration(int sites, Distribution distribution, Rng& rng) {
  require(sites >= 1, "need at least one site");
  std::vector<FockState::value_type> occ(static_cast<std::size_t>(sites), 0);
  if (distribution == Distribution::Multinomial) {
    std::uniform_int_distribution<int> box(0, sites - 1);
    for (int b = 0; b < sites; ++b) ++occ[static_cast<std::size_t>(box(rng))];
    return FockState(std::move(occ));
  }
  // Stars and bars: pick sites - 1 bar slots out of 2L - 1 uniformly.
  const int slots = 2 * sites - 1;
  std::vector<int> order(static_cast<std::size_t>(slots));
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < sites - 1; ++i) {
    std::uniform_int_distribution<int> pick(i, slots - 1);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  std::vector<bool> bar(static_cast<std::size_t>(slots), false);
  for (int i = 0; i < sites - 1; ++i) bar[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;
  int site = 0;
  for (int s = 0; s < slots; ++s) {
    if (bar[static_cast<std::size_t>(s)]) {
      ++site;
    } else {
      ++occ[static_cast<std::size_t>(site)];
    }
  }
  return FockState(std::move(occ));
}

ToyRun run_toy_zfumes(const ToyConfig& config, Rng& rng) {
  require(config.sites >= 1, "need at least one site");
  LatticePartition partition(config.sites);
  ToyRun run;
  while (!partition.complete() && run.measurements < config.max_measurements) {
    ++run.measurements;
    FockState outcome = FockState::mott(config.sites);
    for (const Sublattice& sub : partition.sublattices()) {
      const FockState local = sample_configuration(sub.length, config.distribution, rng);
      for (int j = 0; j < sub.length; ++j) outcome.set(sub.first + j, local[j]);
    }
    auto locks = lockable_sites(outcome, partition);
    partition = apply_locks(partition, locks, outcome);
    run.lock_history.push_back(std::move(locks));
    run.outcomes.push_back(std::move(outcome));
  }
  run.converged = partition.complete();
  return run;
}

ToyRun run_toy_fumes(const ToyConfig& config, Rng& rng) {
  require(config.sites >= 1, "need at least one site");
  const FockState target = FockState::mott(config.sites);
  ToyRun run;
  while (run.measurements < config.max_measurements) {
    ++run.measurements;
    if (sample_configuration(config.sites, config.distribution, rng) == target) {
      run.converged = true;
      break;
    }
  }
  return run;
}

double mf_exact(int sites) {
  require(sites >= 1, "need at least one site");
  if (sites <= 15) {
    std::uint64_t power = 1, fact = 1;
    for (int i = 1; i <= sites; ++i) {
      power *= static_cast<std::uint64_t>(sites);
      fact *= static_cast<std::uint64_t>(i);
    }
    return static_cast<double>(static_cast<long double>(power) / static_cast<long double>(fact));
  }
  return std::exp(sites * std::log(static_cast<double>(sites)) - std::lgamma(sites + 1.0));
}

double mf_asymptotic(int sites) {
  require(sites >= 1, "need at least one site");
  return std::exp(static_cast<double>(sites)) / std::sqrt(2.0 * std::numbers::pi * sites);
}

double mz_bound(int sites) {
  require(sites >= 1, "need at least one site");
  return 16.0 * std::sqrt(sites / std::numbers::pi);
}

double mz_bound_sum(int sites) {
  require(sites >= 1, "need at least one site");
  double s = 0.0;
  for (int k = 1; k <= sites; ++k) s += 8.0 / std::sqrt(std::numbers::pi * k);
  return s;
}

namespace {

// log of C(N) = (2N)! / (2 N!^2), with C(0) = 1.
double log_unit_filling(int n) {
  if (n == 0) return 0.0;
  if (n <= 30) return std::log(static_cast<double>(dim_unit_filling(n)));
  return std::lgamma(2.0 * n + 1.0) - std::log(2.0) - 2.0 * std::lgamma(n + 1.0);
}

}  // namespace

double p_lock_uniform(int site, int sites) {
  require(sites >= 1, "need at least one site");
  require(site >= 1 && site <= sites, "site index out of range (1-based)");
  if (sites <= 20) {
    const auto c = [](int n) -> std::uint64_t { return n == 0 ? 1 : dim_unit_filling(n); };
    const auto num = static_cast<long double>(c(site - 1)) * static_cast<long double>(c(sites - site));
    return static_cast<double>(num / static_cast<long double>(c(sites)));
  }
  return std::exp(log_unit_filling(site - 1) + log_unit_filling(sites - site) - log_unit_filling(sites));
}

double p_lock_stirling(int site, int sites) {
  require(site > 1 && site < sites, "Stirling form needs 1 < i < L");
  return 0.125 * std::sqrt(sites / (std::numbers::pi * (site - 1) * (sites - site)));
}

LockAverage p_avg(int sites) {
  require(sites >= 3, "p_avg needs L >= 3");
  LockAverage out;
  double s = 0.0;
  for (int i = 1; i <= sites; ++i) s += p_lock_uniform(i, sites);
  out.exact = s / sites;
  const double L = sites;
  out.leading = 0.125 * std::sqrt(std::numbers::pi / L);
  out.expansion = out.leading + 1.0 / (2.0 * L) - 1.0 / (2.0 * std::sqrt(std::numbers::pi) * std::pow(L, 1.5));
  return out;
}

}  // namespace zfumes
