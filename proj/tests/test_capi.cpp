// SPDX-License-Identifier: Apache-2.0
//
// The C boundary and the command-line binary, exercised only through the
// public header and process exit codes.

#include <doctest.h>

#include "mhs/mhs.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mhs_capi_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(MHS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("library metadata") {
  CHECK(std::strlen(mhs_version()) > 0);
  CHECK(std::string(mhs_status_name(MHS_OK)) == "ok");
  CHECK(std::string(mhs_status_name(MHS_E_CAPACITY)) == "capacity");
  bool has_beta = false;
  for (int c = 0; c < mhs_command_count(); ++c) {
    if (std::string(mhs_command_name(c)) != "beta") continue;
    has_beta = true;
    bool has_n = false;
    for (int o = 0; o < mhs_option_count(c); ++o)
      if (std::string(mhs_option_key(c, o)) == "n") has_n = mhs_option_is_required(c, o) == 1;
    CHECK(has_n);
  }
  CHECK(has_beta);
  CHECK(mhs_command_name(-1) == nullptr);
  CHECK(mhs_option_key(0, 1000) == nullptr);
}

TEST_CASE("sessions run commands and report errors") {
  const fs::path out = scratch("session");
  mhs_session* s = nullptr;
  REQUIRE(mhs_session_new(&s) == MHS_OK);
  CHECK(mhs_session_set(s, "n", "3") == MHS_OK);
  CHECK(mhs_session_set(s, "--a", "3") == MHS_OK);
  CHECK(mhs_session_set(s, "out", out.string().c_str()) == MHS_OK);
  CHECK(mhs_session_run(s, "roots") == MHS_OK);
  CHECK(std::string(mhs_session_summary(s)).find("roots=1") != std::string::npos);
  REQUIRE(mhs_session_artifact_count(s) == 2);
  CHECK(fs::path(mhs_session_artifact(s, 1)).filename() == "meta.json");
  CHECK(mhs_session_artifact(s, 2) == nullptr);

  CHECK(mhs_session_run(s, "no-such-command") == MHS_E_USAGE);
  CHECK(std::string(mhs_last_error()).find("no-such-command") != std::string::npos);
  CHECK(mhs_session_set(s, "n", "2") == MHS_OK);
  CHECK(mhs_session_run(s, "roots") == MHS_E_USAGE);
  CHECK(mhs_session_load_config(s, "/nonexistent.cfg") == MHS_E_IO);
  mhs_session_free(s);

  CHECK(mhs_session_new(nullptr) == MHS_E_USAGE);
  CHECK(mhs_session_run(nullptr, "roots") == MHS_E_USAGE);
  mhs_session_free(nullptr);
}

TEST_CASE("operator handle") {
  mhs_operator* op = nullptr;
  REQUIRE(mhs_operator_new(3, 256, 0, 1, &op) == MHS_OK);
  CHECK(mhs_operator_size(op) == 256);
  double lambda = 0, residual = 1;
  CHECK(mhs_operator_leading_eigenvalue(op, 2.0, &lambda, &residual) == MHS_OK);
  CHECK(std::abs(lambda - 1.0) <= 5e-4);
  CHECK(residual < 1e-6);
  double beta = 0, lo = 0, hi = 0;
  CHECK(mhs_operator_solve_beta(op, 1e-4, &beta, &lo, &hi) == MHS_OK);
  CHECK(std::abs(beta - 2.0) <= 2e-3);
  CHECK(hi - lo <= 1e-4);
  CHECK(mhs_operator_leading_eigenvalue(op, 0.5, &lambda, nullptr) == MHS_E_USAGE);
  mhs_operator_free(op);

  mhs_operator* big = nullptr;
  CHECK(mhs_operator_new(7, 0, 0, 1, &big) == MHS_E_CAPACITY);
  CHECK(big == nullptr);
  CHECK(std::string(mhs_last_error()).find("infeasible") != std::string::npos);
}

TEST_CASE("ball counts") {
  char buf[32];
  REQUIRE(mhs_count_ball(3, 3, 0, "100", buf, sizeof buf) == MHS_OK);
  CHECK(std::string(buf) == "7");
  char tiny[1];
  CHECK(mhs_count_ball(3, 3, 0, "100", tiny, sizeof tiny) == MHS_E_USAGE);
  CHECK(mhs_count_ball(2, 3, 0, "100", buf, sizeof buf) == MHS_E_USAGE);
}

TEST_CASE("command-line binary") {
  const fs::path out = scratch("cli");
  CHECK(cli("--version") == 0);
  CHECK(cli("descend --n 3 --a 3 --k 0 --tuple 2,5,29 --out " + out.string()) == 0);
  const std::string csv = slurp(out / "descent.csv");
  CHECK(csv.size() > 7);
  CHECK(csv.substr(csv.size() - 7) == ",1,1,1\n");

  // Usage errors and capacity refusals map to distinct exit codes.
  CHECK(cli("roots --n 2 --a 3 --out " + out.string()) == MHS_E_USAGE);
  CHECK(cli("roots --a 3 --out " + out.string()) == MHS_E_USAGE);
  CHECK(cli("beta --n 7 --out " + out.string()) == MHS_E_CAPACITY);
  CHECK(cli("frobnicate") == MHS_E_USAGE);

  // Config file with a command-line override.
  const fs::path cfg = out / "run.cfg";
  {
    std::ofstream f(cfg);
    f << "# Markoff\nn = 3\na = 3\nk = 0\nrmax = 50\n";
  }
  CHECK(cli("count --config " + cfg.string() + " --rmax 1e2 --out " + out.string()) == 0);
  const std::string counts = slurp(out / "counts.csv");
  CHECK(counts.find(",100,7,") != std::string::npos);
  CHECK(cli("fit --input " + (out / "counts.csv").string() + " --out " + out.string()) == 0);
  CHECK(cli("fit --input " + (out / "absent.csv").string() + " --out " + out.string()) == MHS_E_IO);

  // Flags.
  CHECK(cli("limitset --n 4 --depth 3 --a-cap 2 --exhaustive --raster 16 --out " + out.string()) == 0);
  CHECK(fs::exists(out / "limitset.pgm"));
}
