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

#ifndef ZFUMES_TOY_MODEL_HPP
#define ZFUMES_TOY_MODEL_HPP

#include <string>
#include <vector>

#include "fock.hpp"
#include "rng.hpp"

namespace zfumes {

// Reshuffling model: after every measurement each active sublattice is
// redrawn from scratch, either as L balls in L boxes (multinomial) or
// uniformly over all compositions.
enum class Distribution { Multinomial, Uniform };

std::string to_string(Distribution d);
Distribution parse_distribution(const std::string& name);

struct ToyConfig {
  int sites = 7;
  Distribution distribution = Distribution::Multinomial;
  int max_measurements = 1000000;
};

// P(n) = L! / (L^L n_1! ... n_L!) for a unit-filled configuration.
double multinomial_prob(const FockState& n);

FockState sample_configuration(int sites, Distribution distribution, Rng& rng);

struct ToyRun {
  int measurements = 0;
  bool converged = false;
  // Sites locked at each measurement, in order.
  std::vector<std::vector<int>> lock_history;
  // Full-lattice outcome of each measurement; Z-FUMES runs only.
  std::vector<FockState> outcomes;
};

ToyRun run_toy_zfumes(const ToyConfig& config, Rng& rng);

// Draws full-lattice configurations until one is (1, ..., 1).
ToyRun run_toy_fumes(const ToyConfig& config, Rng& rng);

// L^L / L!, exact for L <= 15.
double mf_exact(int sites);
// e^L / sqrt(2 pi L)
double mf_asymptotic(int sites);

// 16 sqrt(L / pi)
double mz_bound(int sites);
// sum_{K=1}^{L} 8 / sqrt(pi K)
double mz_bound_sum(int sites);

// Uniform-distribution lock probability of site i (1-based) on a
// unit-filled chain of L sites: C(i-1) C(L-i) / C(L), C(0) = 1.
double p_lock_uniform(int site, int sites);
// (1/8) sqrt(L / (pi (i-1)(L-i))), valid for 1 << i << L.
double p_lock_stirling(int site, int sites);

struct LockAverage {
  double exact = 0.0;      // (1/L) sum_i P_i
  double expansion = 0.0;  // three-term large-L series
  double leading = 0.0;    // (1/8) sqrt(pi / L)
};

LockAverage p_avg(int sites);

}  // namespace zfumes

#endif  // ZFUMES_TOY_MODEL_HPP
