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

#include <boost/math/distributions/chi_squared.hpp>

#include <random>

#include "bose_hubbard.hpp"
#include "errors.hpp"
#include "measurement.hpp"
#include "rng.hpp"

using namespace zfumes;

namespace {

// The lock rule written out directly: inside each active sublattice
// [a, b], site j qualifies iff n_j = 1 and sites a..j-1 hold j - a particles.
std::vector<int> lock_oracle(const FockState& n, const LatticePartition& part) {
  std::vector<int> out;
  for (const Sublattice& s : part.sublattices()) {
    int left = 0;
    for (int j = s.first; j <= s.last(); ++j) {
      if (n[j] == 1 && left == j - s.first) out.push_back(j);
      left += n[j];
    }
  }
  return out;
}

// Random composition of `total` particles over `length` sites.
void fill_random(FockState& s, int first, int length, int total, Rng& rng) {
  for (int j = 0; j < length; ++j) s.set(first + j, 0);
  for (int p = 0; p < total; ++p) {
    const int j = std::uniform_int_distribution<int>(0, length - 1)(rng);
    s.set(first + j, s[first + j] + 1);
  }
}

}  // namespace

TEST_CASE("lock rule examples") {
  const LatticePartition three(3);
  CHECK(lockable_sites(FockState({2, 0, 1}), three) == std::vector<int>{2});
  CHECK(lockable_sites(FockState({0, 1, 2}), three).empty());
  CHECK(lockable_sites(FockState({1, 1, 1}), three) == std::vector<int>{0, 1, 2});
  CHECK(lockable_sites(FockState({1, 2, 0}), three) == std::vector<int>{0});
}

TEST_CASE("lock rule agrees with a direct implementation on random outcomes") {
  Rng rng = make_rng(21, 0);
  for (int trial = 0; trial < 20000; ++trial) {
    const int L = std::uniform_int_distribution<int>(1, 12)(rng);
    LatticePartition part(L);
    std::vector<int> pre;
    for (int j = 0; j < L; ++j) {
      if (std::bernoulli_distribution(0.25)(rng)) pre.push_back(j);
    }
    part = part.with_locks(pre);
    FockState n = FockState::mott(L);
    for (const Sublattice& s : part.sublattices()) fill_random(n, s.first, s.length, s.length, rng);
    CHECK(lockable_sites(n, part) == lock_oracle(n, part));
  }
}

TEST_CASE("partition splitting") {
  const int outer[] = {0, 6};
  const auto p = apply_locks(LatticePartition(7), outer, FockState::mott(7));
  REQUIRE(p.sublattices().size() == 1);
  CHECK(p.sublattices()[0] == Sublattice{1, 5});
  const int middle[] = {3};
  const auto q = apply_locks(LatticePartition(7), middle, FockState::mott(7));
  REQUIRE(q.sublattices().size() == 2);
  CHECK(q.sublattices()[0] == Sublattice{0, 3});
  CHECK(q.sublattices()[1] == Sublattice{4, 3});
  const int all[] = {0, 1, 2, 3, 4, 5, 6};
  CHECK(apply_locks(LatticePartition(7), all, FockState::mott(7)).complete());
}

TEST_CASE("locks that break unit filling are rejected") {
  const int site[] = {1};
  CHECK_THROWS_AS(apply_locks(LatticePartition(3), site, FockState({2, 1, 0})), InvalidArgument);
  CHECK_THROWS_AS(apply_locks(LatticePartition(3), site, FockState({1, 2, 0})), InvalidArgument);
  const int twice[] = {0};
  const auto p = apply_locks(LatticePartition(3), twice, FockState({1, 2, 0}));
  CHECK_THROWS_AS(apply_locks(p, twice, FockState({1, 2, 0})), InvalidArgument);
}

TEST_CASE("unit filling survives fuzzed lock sequences") {
  Rng rng = make_rng(22, 0);
  long long sequences = 0, violations = 0;
  for (; sequences < 100000; ++sequences) {
    const int L = std::uniform_int_distribution<int>(1, 12)(rng);
    LatticePartition part(L);
    FockState n = FockState::mott(L);
    int previous_locked = 0;
    for (int step = 0; step < 4 * L && !part.complete(); ++step) {
      for (const Sublattice& s : part.sublattices()) fill_random(n, s.first, s.length, s.length, rng);
      const auto locks = lockable_sites(n, part);
      part = apply_locks(part, locks, n);
      bool ok = unit_filled(part, n) && part.locked_count() == previous_locked + static_cast<int>(locks.size());
      for (int j : part.locked_sites()) ok = ok && n[j] == 1;
      violations += ok ? 0 : 1;
      previous_locked = part.locked_count();
    }
  }
  CHECK(sequences == 100000);
  CHECK(violations == 0);
}

TEST_CASE("Born sampling passes a chi-square test at 1% significance") {
  Rng rng = make_rng(23, 0);
  auto b = enumerate_basis(3, 3);
  std::normal_distribution<double> g;
  Eigen::VectorXcd v(static_cast<Eigen::Index>(b->dim()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = {g(rng), g(rng)};
  const StateVector s(b, v.normalized());
  const auto p = born_probabilities(s);
  const int draws = 50000;
  std::vector<double> counts(p.size(), 0.0);
  for (int d = 0; d < draws; ++d) {
    const auto [outcome, post] = measure_all_sites(s, rng);
    counts[b->index(outcome.occupations)] += 1.0;
    CHECK(std::abs(fidelity(post, outcome.occupations) - 1.0) < 1e-15);
  }
  double chi2 = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) chi2 += (counts[k] - draws * p[k]) * (counts[k] - draws * p[k]) / (draws * p[k]);
  const boost::math::chi_squared dist(static_cast<double>(p.size() - 1));
  CHECK(chi2 < boost::math::quantile(dist, 0.99));
}

TEST_CASE("superfluid of two bosons on two sites reads (1,1) half the time") {
  Rng rng = make_rng(24, 0);
  auto b = enumerate_basis(2, 2);
  const StateVector sf = superfluid_state(BHParams{2, 2, 1.0, 0.0}, b);
  int hits = 0;
  for (int d = 0; d < 10000; ++d) hits += measure_all_sites(sf, rng).first.occupations == FockState({1, 1}) ? 1 : 0;
  CHECK(std::abs(hits / 10000.0 - 0.5) < 0.015);
}

TEST_CASE("Mott state and fixed seeds give deterministic outcomes") {
  auto b = enumerate_basis(3, 3);
  const auto mott = StateVector::basis_state(b, FockState::mott(3));
  Rng r1 = make_rng(5, 1), r2 = make_rng(5, 1);
  for (int d = 0; d < 100; ++d) CHECK(measure_all_sites(mott, r1).first.occupations == FockState::mott(3));
  const StateVector sf = superfluid_state(BHParams{3, 3, 1.0, 0.0}, b);
  r1 = make_rng(5, 2);
  r2 = make_rng(5, 2);
  for (int d = 0; d < 100; ++d) {
    CHECK(measure_all_sites(sf, r1).first.occupations == measure_all_sites(sf, r2).first.occupations);
  }
}

TEST_CASE("sampling rejects malformed distributions and unnormalized states") {
  Rng rng = make_rng(25, 0);
  const std::vector<double> neg{0.5, -0.1, 0.6};
  CHECK_THROWS_AS(sample_index(neg, rng), InvalidArgument);
  const std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS_AS(sample_index(zero, rng), InvalidArgument);
  auto b = enumerate_basis(2, 2);
  CHECK_THROWS_AS(born_probabilities(Eigen::VectorXcd::Ones(3)), InvalidArgument);
}
