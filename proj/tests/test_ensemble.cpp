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

#include <cmath>
#include <stdexcept>

#include "ensemble.hpp"
#include "errors.hpp"
#include "toy_model.hpp"

using namespace zfumes;

namespace {

TrajectoryRecord synthetic(std::vector<double> fidelity, std::optional<double> converged, int count) {
  TrajectoryRecord r;
  r.grid_step = 0.5;
  r.fidelity = std::move(fidelity);
  r.converged_at = converged;
  r.measurement_count = count;
  return r;
}

// Toy-model trajectory recorded as full-lattice outcomes.
TrajectoryRecord uniform_draws(int L, int draws, Rng& rng) {
  TrajectoryRecord r;
  r.grid_step = 1.0;
  r.fidelity = {0.0};
  for (int d = 0; d < draws; ++d) {
    r.events.push_back({static_cast<double>(d), sample_configuration(L, Distribution::Uniform, rng), {}});
  }
  r.measurement_count = draws;
  return r;
}

}  // namespace

TEST_CASE("aggregation against hand-computed statistics") {
  const std::vector<TrajectoryRecord> recs = {
      synthetic({0.1, 0.5, 1.0}, 0.7, 3),
      synthetic({0.3, 0.9, 1.0}, 0.2, 5),
      synthetic({0.2, 0.4, 0.6}, std::nullopt, 9),
  };
  const EnsembleStats s = aggregate(recs, 0.8);
  REQUIRE(s.time.size() == 3);
  CHECK(s.time[2] == doctest::Approx(1.0));
  CHECK(s.mean_fidelity[0] == doctest::Approx(0.2));
  CHECK(s.mean_fidelity[1] == doctest::Approx(0.6));
  CHECK(s.mean_fidelity[2] == doctest::Approx(2.6 / 3.0));
  // sample sd 0.1 at t = 0
  CHECK(s.stderr_fidelity[0] == doctest::Approx(0.1 / std::sqrt(3.0)));
  CHECK(s.converged_fraction[0] == doctest::Approx(0.0));
  CHECK(s.converged_fraction[1] == doctest::Approx(1.0 / 3.0));
  CHECK(s.converged_fraction[2] == doctest::Approx(2.0 / 3.0));
  REQUIRE(s.t_conv);
  CHECK(*s.t_conv == doctest::Approx(1.0));
  CHECK(s.converged == 2);
  CHECK(s.expected_measurements == doctest::Approx(4.0));
  CHECK(s.expected_measurements_stderr == doctest::Approx(1.0));
  CHECK(s.mean_measurements_all == doctest::Approx(17.0 / 3.0));
  CHECK_FALSE(aggregate(recs, 0.95).t_conv);
  std::vector<TrajectoryRecord> bad = recs;
  bad[1].fidelity.pop_back();
  CHECK_THROWS_AS(aggregate(bad, 0.8), InvalidArgument);
}

TEST_CASE("ensembles do not depend on the worker count") {
  const BHParams params{4, 4, 1.0, 0.0};
  StrategyConfig cfg;
  cfg.max_time = 30.0;
  PropagatorCache cache;
  const TrajectoryFn fn = [&](std::size_t, Rng& rng) { return run_trajectory(params, cfg, rng, cache); };
  EnsembleOptions opt;
  opt.trajectories = 24;
  opt.base_seed = 99;
  opt.keep_records = true;
  opt.workers = 1;
  const EnsembleResult one = run_ensemble(fn, opt);
  opt.workers = 4;
  const EnsembleResult four = run_ensemble(fn, opt);
  CHECK(one.stats.mean_fidelity == four.stats.mean_fidelity);
  CHECK(one.stats.stderr_fidelity == four.stats.stderr_fidelity);
  CHECK(one.stats.expected_measurements == four.stats.expected_measurements);
  REQUIRE(one.records.size() == four.records.size());
  for (std::size_t k = 0; k < one.records.size(); ++k) CHECK(one.records[k].fidelity == four.records[k].fidelity);

  // Trajectory k draws from make_rng(base_seed, k) whatever the batch size.
  Rng rng = make_rng(99, 5);
  CHECK(run_trajectory(params, cfg, rng, cache).fidelity == one.records[5].fidelity);
  opt.trajectories = 1;
  opt.workers = 1;
  const EnsembleResult single = run_ensemble(fn, opt);
  CHECK(single.records.front().fidelity == one.records.front().fidelity);
  CHECK(single.stats.mean_fidelity == one.records.front().fidelity);

  for (std::size_t i = 1; i < one.stats.converged_fraction.size(); ++i) {
    CHECK(one.stats.converged_fraction[i] >= one.stats.converged_fraction[i - 1]);
  }
}

TEST_CASE("failed trajectories are counted and reported") {
  const TrajectoryFn fn = [](std::size_t k, Rng&) {
    if (k % 3 == 1) throw std::runtime_error("boom");
    return synthetic({1.0}, 0.0, 1);
  };
  EnsembleOptions opt;
  opt.trajectories = 9;
  opt.workers = 2;
  const EnsembleResult r = run_ensemble(fn, opt);
  CHECK(r.stats.trajectories == 6);
  CHECK(r.stats.failures == 3);
  REQUIRE(r.stats.failure_messages.size() == 3);
  CHECK(r.stats.failure_messages[0] == "trajectory 1: boom");
  const TrajectoryFn all_bad = [](std::size_t, Rng&) -> TrajectoryRecord { throw std::runtime_error("x"); };
  CHECK_THROWS_AS(run_ensemble(all_bad, opt), NumericalError);
  opt.trajectories = 0;
  CHECK_THROWS_AS(run_ensemble(fn, opt), InvalidArgument);
}

TEST_CASE("standard error shrinks as one over root n") {
  const TrajectoryFn fn = [](std::size_t, Rng& rng) {
    return synthetic({uniform01(rng)}, std::nullopt, 1);
  };
  EnsembleOptions opt;
  opt.workers = 1;
  opt.trajectories = 400;
  const double se400 = run_ensemble(fn, opt).stats.stderr_fidelity[0];
  opt.trajectories = 6400;
  const double se6400 = run_ensemble(fn, opt).stats.stderr_fidelity[0];
  // Uniform[0, 1): sd = 1/sqrt(12).
  CHECK(se400 == doctest::Approx(1.0 / std::sqrt(12.0 * 400.0)).epsilon(0.1));
  CHECK(se400 / se6400 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("lock frequencies from recorded outcomes") {
  TrajectoryRecord mott;
  mott.fidelity = {1.0};
  mott.events.push_back({0.0, FockState::mott(5), {}});
  mott.events.push_back({1.0, FockState{1, 1}, {}});
  const LockFrequencies all = estimate_lock_probabilities({mott}, 5);
  CHECK(all.events == 1);
  for (double f : all.frequency) CHECK(f == 1.0);

  // Outcomes read after the first lock are not counted.
  TrajectoryRecord locking;
  locking.fidelity = {1.0};
  locking.events.push_back({0.0, FockState{1, 2, 0}, {0}});
  locking.events.push_back({1.0, FockState{1, 1, 1}, {1, 2}});
  const LockFrequencies first = estimate_lock_probabilities({locking}, 3);
  CHECK(first.events == 1);
  CHECK(first.frequency == std::vector<double>{1.0, 0.0, 0.0});

  Rng rng(6);
  std::vector<TrajectoryRecord> recs;
  for (int k = 0; k < 200; ++k) recs.push_back(uniform_draws(3, 100, rng));
  const LockFrequencies f = estimate_lock_probabilities(recs, 3);
  CHECK(f.events == 20000);
  for (int i = 1; i <= 3; ++i) {
    const std::size_t j = static_cast<std::size_t>(i - 1);
    CHECK(std::abs(f.frequency[j] - p_lock_uniform(i, 3)) < 3.0 * f.stderr_frequency[j] + 1e-12);
  }
  CHECK_THROWS_AS(estimate_lock_probabilities(recs, 0), InvalidArgument);
}

TEST_CASE("scaling sweep") {
  StrategyConfig cfg;
  cfg.max_time = 40.0;
  EnsembleOptions opt;
  opt.trajectories = 40;
  opt.workers = 1;
  PropagatorCache cache;
  const auto rows = scaling_sweep({2, 3}, cfg, opt, cache, 50);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].sites == 2);
  REQUIRE(rows[0].t_conv);
  REQUIRE(rows[1].t_conv);
  CHECK(*rows[0].t_conv <= *rows[1].t_conv);
  CHECK(rows[1].t_conv_stderr >= 0.0);
  CHECK(rows[1].converged_fraction > 0.9);
}
