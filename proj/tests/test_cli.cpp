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


#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr discarded and returns exit code and stdout.
Run cli(const std::string& args) {
  const std::string cmd = std::string(ZFUMES_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch_dir() {
  const fs::path d = fs::temp_directory_path() / "zfumes_cli_test";
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("formulas subcommand prints closed forms") {
  const Run r = cli("formulas --sites 7");
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("quantity,L,B,value\n", 0) == 0);
  CHECK(r.out.find("mf_exact,7,") != std::string::npos);
  CHECK(r.out.find("163.401389") != std::string::npos);
  CHECK(r.out.find("23.8832853") != std::string::npos);
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(cli("").code == 2);
  CHECK(cli("formulas --bogus 1").code == 2);
  CHECK(cli("toy --trajectories many").code == 2);
  CHECK(cli("bh-projective --sites 3-5").code == 2);
  CHECK(cli("toy --format xml").code == 2);
  CHECK(cli("toy --config /nonexistent/file.cfg").code == 2);
  CHECK(cli("--version").code == 0);
  CHECK(cli("toy --help").code == 0);
}

TEST_CASE("runtime failures exit with code 3") {
  CHECK(cli("formulas --out /nonexistent-dir/out.csv").code == 3);
}

TEST_CASE("config file with flag overrides") {
  const fs::path dir = scratch_dir();
  const fs::path cfg = dir / "toy.cfg";
  std::ofstream(cfg) << "# toy scaling\nsites = 3\ntrajectories = 50\nseed = 4   # comment\nformat = json\n";
  const Run from_file = cli("toy --config " + cfg.string());
  REQUIRE(from_file.code == 0);
  CHECK(from_file.out.rfind("{", 0) == 0);
  CHECK(from_file.out.find("\"L\": 3") != std::string::npos);

  const Run overridden = cli("toy --config " + cfg.string() + " --sites 4 --format csv");
  REQUIRE(overridden.code == 0);
  CHECK(overridden.out.rfind("L,expected_measurements", 0) == 0);
  CHECK(overridden.out.find("\n4,") != std::string::npos);

  std::ofstream(dir / "bad.cfg") << "sites 3\n";
  CHECK(cli("toy --config " + (dir / "bad.cfg").string()).code == 2);
  std::ofstream(dir / "unknown.cfg") << "colour = red\n";
  CHECK(cli("toy --config " + (dir / "unknown.cfg").string()).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("file output matches standard output and reruns are identical") {
  const fs::path dir = scratch_dir();
  const std::string args = "bh-projective --sites 3 --trajectories 10 --max-time 10 --seed 3";
  const Run a = cli(args);
  REQUIRE(a.code == 0);
  REQUIRE(cli(args + " --out " + (dir / "f.csv").string()).code == 0);
  CHECK(slurp(dir / "f.csv") == a.out);
  CHECK(cli(args + " --workers 2").out == a.out);
  REQUIRE(cli(args + " --format json --out " + (dir / "f.json").string()).code == 0);
  CHECK(slurp(dir / "f.json").find("\"mean_fidelity\"") != std::string::npos);
  fs::remove_all(dir);
}
