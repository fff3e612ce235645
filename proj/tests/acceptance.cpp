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


// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Pass criterion numbers to run a subset.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "job.hpp"
#include "toy_model.hpp"

using namespace zfumes;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), f, a);
  return buf.data();
}

Table run(Command command, const std::vector<std::pair<std::string, std::string>>& options) {
  JobSpec spec;
  spec.command = command;
  for (const auto& [k, v] : options) set_option(spec, k, v);
  spec.validate();
  return run_job(spec).table;
}

// Value of `column` on the row whose time is closest to t.
double at_time(const Table& t, const std::string& column, double time) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (std::abs(t.number(i, "time") - time) < std::abs(t.number(best, "time") - time)) best = i;
  }
  return t.number(best, column);
}

double first_time_reaching(const Table& t, double level) {
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.number(i, "mean_fidelity") >= level) return t.number(i, "time");
  }
  return NAN;
}

Verdict criterion1() {
  const Table t = run(Command::BhProjective, {{"sites", "7"}, {"trajectories", "1000"}, {"max-time", "30"}});
  const double tc = first_time_reaching(t, 0.99);
  const bool ok = std::isfinite(tc) && std::abs(tc - 18.5) <= 0.15 * 18.5;
  return {ok, "Z-FUMES L=7: T_conv = " + fmt("%.2f", tc) + " (target 18.5 +/- 15%)"};
}

Verdict criterion2() {
  const Table t = run(Command::BhProjective,
                      {{"sites", "7"}, {"strategy", "fumes"}, {"trajectories", "1000"}, {"max-time", "70"}});
  const double f = at_time(t, "converged_fraction", 70.0);
  return {std::abs(f - 0.60) <= 0.05, "FUMES L=7: converged fraction at Jt=70 = " + fmt("%.3f", f) + " (target 0.60 +/- 0.05)"};
}

Verdict criterion3() {
  bool ok = mf_exact(7) == 823543.0 / 5040.0 && std::lround(mz_bound(7)) == 24;
  std::string detail = "mf_exact(7) = " + fmt("%.4f", mf_exact(7)) + ", mz_bound(7) = " + fmt("%.2f", mz_bound(7));
  const Table t = run(Command::Toy, {{"sites", "7,20,50,100"}, {"trajectories", "10000"}});
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double m = t.number(i, "expected_measurements");
    const double bound = t.number(i, "analytic");
    ok = ok && m <= bound && t.number(i, "converged_fraction") == 1.0;
    detail += "; L=" + fmt("%.0f", t.number(i, "L")) + " E[M]=" + fmt("%.2f", m) + " <= " + fmt("%.2f", bound);
  }
  return {ok, detail};
}

Verdict criterion4() {
  const Table t = run(Command::Toy, {{"sites", "4"}, {"strategy", "fumes"}, {"trajectories", "10000"}});
  const double m = t.number(0, "expected_measurements");
  const double exact = mf_exact(4);
  return {std::abs(m / exact - 1.0) <= 0.10,
          "toy FUMES L=4: E[M] = " + fmt("%.3f", m) + " vs L^L/L! = " + fmt("%.3f", exact)};
}

Verdict criterion5() {
  bool ok = true;
  std::string detail;
  for (const char* mode : {"finite", "projector"}) {
    const Table t = run(Command::BhContinuous, {{"sites", "5"},
                                                {"gamma", "0.5"},
                                                {"gamma-lock", "1000"},
                                                {"lock-mode", mode},
                                                {"trajectories", "1000"},
                                                {"max-time", "15"}});
    const double f = at_time(t, "converged_fraction", 15.0);
    ok = ok && f >= 0.55;
    detail += std::string(detail.empty() ? "" : "; ") + mode + " locks: converged at J_d t=15 = " + fmt("%.3f", f);
  }
  return {ok, detail + " (need >= 0.55)"};
}

Verdict criterion6() {
  const Table sse = run(Command::BhContinuous, {{"sites", "3"},
                                                {"gamma", "100"},
                                                {"dt", "0.0001"},
                                                {"window-cut", "0.001"},
                                                {"lock-cut", "0.001"},
                                                {"trajectories", "500"},
                                                {"max-time", "20"}});
  const Table proj = run(Command::BhProjective, {{"sites", "3"}, {"trajectories", "20000"}, {"max-time", "20"}});
  double sup = 0.0;
  double where = 0.0;
  for (std::size_t i = 0; i < std::min(sse.rows.size(), proj.rows.size()); ++i) {
    const double d = std::abs(sse.number(i, "mean_fidelity") - proj.number(i, "mean_fidelity"));
    if (d > sup) {
      sup = d;
      where = sse.number(i, "time");
    }
  }
  return {sup <= 0.05, "L=3 gamma=100: sup |F_sse - F_proj| = " + fmt("%.4f", sup) + " at t=" + fmt("%.1f", where) +
                           " (need <= 0.05)"};
}

Verdict criterion7() {
  const Table t = run(Command::RandomHam,
                      {{"outcomes", "2"}, {"observables", "3-7"}, {"hamiltonians", "200"}, {"trajectories", "5"}});
  bool ok = true;
  std::string detail;
  std::vector<double> n_f;
  std::vector<double> m_f;
  double ratio7 = 0.0;
  for (std::size_t i = 0; i + 1 < t.rows.size(); i += 2) {
    const int L = static_cast<int>(t.number(i, "L"));
    const double mf = t.number(i, "expected_measurements");
    const double mz = t.number(i + 1, "expected_measurements");
    const double est = t.number(i + 1, "estimate");
    ok = ok && mz < mf && mz <= 2.0 * est && mz >= 0.5 * est;
    n_f.push_back(t.number(i, "N"));
    m_f.push_back(mf);
    if (L == 7) ratio7 = mf / mz;
    detail += "L=" + std::to_string(L) + " F=" + fmt("%.2f", mf) + " Z=" + fmt("%.2f", mz) + " est=" + fmt("%.2f", est) + "; ";
  }
  // Least-squares slope of FUMES E[M] against N.
  const double n = static_cast<double>(n_f.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n_f.size(); ++i) {
    sx += n_f[i];
    sy += m_f[i];
    sxx += n_f[i] * n_f[i];
    sxy += n_f[i] * m_f[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  ok = ok && ratio7 > 5.0 && slope < 1.0 && n_f.size() == 5;
  return {ok, detail + "ratio(L=7) = " + fmt("%.2f", ratio7) + ", FUMES slope = " + fmt("%.3f", slope)};
}

Verdict criterion8() {
  const std::vector<std::string> suites = {
      "Hamiltonian and number operators are Hermitian",
      "spectral propagator agrees with Krylov propagation and conserves norm",
      "stochastic steps keep the state normalized",
      "Born sampling passes a chi-square test at 1% significance",
      "unit filling survives fuzzed lock sequences",
      "full-space PHP evolution equals the sublattice product evolution",
      "multinomial probabilities",
      "uniform lock probabilities match exhaustive counting",
      "ensembles do not depend on the worker count",
  };
  int passed = 0;
  std::string failed;
  for (const auto& name : suites) {
    const std::string cmd = std::string(ZFUMES_UNIT_TESTS) + " --test-case=\"" + name + "\" --no-version 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    std::string out;
    if (pipe != nullptr) {
      std::array<char, 4096> buf{};
      std::size_t k = 0;
      while ((k = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), k);
    }
    const int status = pipe != nullptr ? pclose(pipe) : -1;
    if (status == 0 && std::regex_search(out, std::regex(R"(test cases:\s*1\s*\|\s*1 passed)"))) {
      ++passed;
    } else {
      failed += " [" + name + "]";
    }
  }
  return {passed == static_cast<int>(suites.size()),
          std::to_string(passed) + "/" + std::to_string(suites.size()) + " property suites passed" + failed};
}

Verdict criterion9() {
  const Table t = run(Command::BhProjective, {{"sites", "7"}, {"table", "locks"}, {"trajectories", "600"}});
  bool ok = true;
  std::string detail;
  for (std::size_t i = 1; i + 1 < t.rows.size(); ++i) {
    const double f = t.number(i, "frequency");
    const double p = t.number(i, "p_uniform");
    ok = ok && f > p;
    detail += "site " + fmt("%.0f", t.number(i, "site")) + ": " + fmt("%.3f", f) + " > " + fmt("%.3f", p) + "; ";
  }
  return {ok, detail + "interior sites vs uniform P_i"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Verdict()>> criteria = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                                          criterion6, criterion7, criterion8, criterion9};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const int number = static_cast<int>(c) + 1;
    if (!selected.empty() && !selected.count(number)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[c]();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d: %s  %s  [%.1fs]\n", number, v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
    std::fflush(stdout);
    if (!v.pass) ++failures;
  }
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
