#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "oed/bench.hpp"

#ifndef OED_CLI_PATH
#error "OED_CLI_PATH must be defined by the build"
#endif

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string output;  // stdout only
};

CmdResult run_cli(const std::string& args) {
  const std::string cmd =
      std::string(OED_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CmdResult res;
  std::array<char, 4096> buf;
  while (std::size_t got = fread(buf.data(), 1, buf.size(), pipe)) {
    res.output.append(buf.data(), got);
  }
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string tmp_path(const std::string& name) {
  return "/tmp/oed_cli_test_" + name;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("gen then relax then round matches select byte for byte") {
  const std::string pool = tmp_path("pool.csv");
  CHECK(run_cli("gen --n 40 --p 4 --seed 3 --out " + pool).exit_code == 0);

  const std::string pi = tmp_path("pi.json");
  const std::string common =
      " --criterion A --pool " + pool + " --iterations 80 --lambda 0.01";
  CHECK(run_cli("relax --k 8" + common + " --out " + pi).exit_code == 0);

  const CmdResult rounded = run_cli("round --criterion A --pool " + pool +
                                    " --pi " + pi +
                                    " --epsilon 0.1 --mode practical");
  CHECK(rounded.exit_code == 0);

  const CmdResult selected =
      run_cli("select --k 8" + common + " --epsilon 0.1 --mode practical");
  CHECK(selected.exit_code == 0);
  CHECK(rounded.output == selected.output);
  CHECK(selected.output.find("\"counts\"") != std::string::npos);
}

TEST_CASE("the trace criterion reports an exact ratio") {
  const std::string pool = tmp_path("pool_t.csv");
  CHECK(run_cli("gen --n 20 --p 4 --seed 5 --out " + pool).exit_code == 0);
  const CmdResult res =
      run_cli("select --criterion T --k 6 --pool " + pool);
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("\"ratio\": 1.0") != std::string::npos);
}

TEST_CASE("theory mode refuses an undersized budget and names the bound") {
  const std::string pool = tmp_path("pool_g.csv");
  CHECK(run_cli("gen --n 40 --p 4 --seed 7 --out " + pool).exit_code == 0);
  const std::string cmd = "select --criterion A --k 10 --pool " + pool +
                          " --epsilon 0.1 --mode theory 2>&1";
  FILE* pipe = popen((std::string(OED_CLI_PATH) + " " + cmd).c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 4096> buf;
  while (std::size_t got = fread(buf.data(), 1, buf.size(), pipe)) {
    out.append(buf.data(), got);
  }
  const int status = pclose(pipe);
  CHECK(WEXITSTATUS(status) == 2);
  CHECK(out.find("5") != std::string::npos);  // the 5r/eps^2 lower bound
}

TEST_CASE("bad invocations exit with code 1") {
  CHECK(run_cli("select --no-such-flag").exit_code != 0);
  CHECK(run_cli("select --criterion A --k 3 --pool /nonexistent.csv")
            .exit_code == 1);
  const std::string pool = tmp_path("pool_bad.csv");
  std::ofstream(pool) << "1.0,2.0\n3.0,not_a_number\n";
  CHECK(run_cli("select --criterion A --k 1 --pool " + pool).exit_code == 1);
}

TEST_CASE("infeasible budgets exit with code 2") {
  const std::string pool = tmp_path("pool_inf.csv");
  CHECK(run_cli("gen --n 10 --p 2 --seed 1 --out " + pool).exit_code == 0);
  CHECK(run_cli("select --criterion A --k 11 --b 1 --pool " + pool)
            .exit_code == 2);
}

TEST_CASE("baseline subcommand emits a design JSON") {
  const std::string pool = tmp_path("pool_b.csv");
  CHECK(run_cli("gen --n 16 --p 2 --seed 9 --out " + pool).exit_code == 0);
  const CmdResult res = run_cli(
      "baseline --method uniform --criterion D --k 5 --seed 2 --pool " + pool);
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("\"criterion\": \"D\"") != std::string::npos);
}

TEST_CASE("a tiny bench run emits parseable CSV") {
  const std::string out = tmp_path("bench.csv");
  const CmdResult res = run_cli(
      "bench --n 20 --p 4 --criteria A --k-values 6 --methods UNIFORM "
      "--seeds 1 2 --out " +
      out);
  CHECK(res.exit_code == 0);
  const auto rows = oed::parse_table_csv(read_file(out));
  CHECK(rows.size() == 2);
  CHECK(rows[0].method == "UNIFORM");
  CHECK(rows[0].n == 20);
}
