// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "orbit_enum.hpp"
#include "runner.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mhs;
using namespace mhs::runner;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mhs_runner_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

ErrorCode code_of(const std::string& cmd, const Options& o) {
  try {
    run(cmd, o);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ok;
}

}  // namespace

TEST_CASE("config files") {
  const Options o = parse_config("# comment\n\nn = 3\n--a=3   # trailing comment\nk=0\n");
  CHECK(o.at("n") == "3");
  CHECK(o.at("a") == "3");
  CHECK(o.at("k") == "0");
  CHECK_THROWS_AS(parse_config("just words\n"), Error);
  CHECK_THROWS_AS(parse_config("=3\n"), Error);
  CHECK_THROWS_AS(load_config("/nonexistent/config.txt"), Error);
}

TEST_CASE("option validation happens before any work") {
  const fs::path out = scratch("validation");
  CHECK(code_of("frobnicate", {}) == ErrorCode::usage);
  CHECK(code_of("roots", {{"n", "3"}, {"a", "3"}, {"bogus", "1"}, {"out", out.string()}}) == ErrorCode::usage);
  CHECK(code_of("roots", {{"n", "3"}, {"out", out.string()}}) == ErrorCode::usage);  // a missing
  CHECK(code_of("roots", {{"n", "2"}, {"a", "3"}, {"out", out.string()}}) == ErrorCode::usage);
  CHECK(code_of("roots", {{"n", "three"}, {"a", "3"}, {"out", out.string()}}) == ErrorCode::usage);
  CHECK(code_of("beta", {{"n", "3"}, {"tol", "-1"}, {"out", out.string()}}) == ErrorCode::usage);
  CHECK(code_of("beta", {{"n", "3"}, {"tail", "maybe"}, {"out", out.string()}}) == ErrorCode::usage);
  CHECK(code_of("count", {{"n", "3"}, {"a", "3"}, {"out", out.string()}}) == ErrorCode::usage);
  // Nothing was written by the refused runs.
  CHECK(!fs::exists(out));
}

TEST_CASE("infeasible workloads are refused") {
  const fs::path out = scratch("capacity");
  CHECK(code_of("beta", {{"n", "7"}, {"out", out.string()}}) == ErrorCode::capacity);
  CHECK(code_of("beta", {{"n", "6"}, {"grid", "400"}, {"out", out.string()}}) == ErrorCode::capacity);
  CHECK(code_of("limitset", {{"n", "4"}, {"exhaustive", "true"}, {"a-cap", "64"}, {"depth", "10"},
                             {"out", out.string()}}) == ErrorCode::capacity);
  CHECK(!fs::exists(out));
}

TEST_CASE("count CSV matches the box oracle and feeds fit unchanged") {
  const fs::path out = scratch("count");
  const auto r = run("count", {{"n", "3"}, {"a", "3"}, {"k", "0"}, {"rmax", "1e2"}, {"out", out.string()}});
  CHECK(r.status == 0);
  const auto rows = orbit::parse_counts_csv(slurp(out / "counts.csv"));
  REQUIRE(!rows.empty());
  REQUIRE(rows.back().R_exact.has_value());
  CHECK(*rows.back().R_exact == 100);
  const auto oracle = orbit::box_oracle(core::Params{3, 3, 0}, BigInt(100));
  CHECK(rows.back().count == oracle.size());

  const fs::path fit_out = scratch("fit");
  const auto f = run("fit", {{"input", (out / "counts.csv").string()}, {"out", fit_out.string()}});
  CHECK(f.status == 0);
  const auto j = nlohmann::json::parse(slurp(fit_out / "fit.json"));
  CHECK(j.contains("beta_hat"));
  CHECK(j["rows_used"].get<int>() >= 2);
  CHECK(lines(slurp(fit_out / "count_curve.csv")).front() == "logR,count,fit,used");

  try {
    run("fit", {{"input", (out / "missing.csv").string()}, {"out", fit_out.string()}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io);
    CHECK(std::string(e.what()).find("`count`") != std::string::npos);
  }
}

TEST_CASE("descend ends at the minimal tuple") {
  const fs::path out = scratch("descend");
  const auto r = run("descend", {{"n", "3"}, {"a", "3"}, {"k", "0"}, {"tuple", "2,5,29"}, {"out", out.string()}});
  const auto ls = lines(slurp(out / "descent.csv"));
  REQUIRE(ls.size() >= 3);
  CHECK(ls.front() == "step,phase,move,x1,x2,x3");
  CHECK(ls[1] == "0,start,,2,5,29");
  CHECK(ls.back().substr(ls.back().size() - 6) == ",1,1,1");
  CHECK(r.summary.find("terminal=1,1,1") != std::string::npos);
  CHECK(code_of("descend", {{"n", "3"}, {"a", "3"}, {"tuple", "2,5,30"}, {"out", out.string()}}) ==
        ErrorCode::invalid_state);
  CHECK(code_of("descend", {{"n", "3"}, {"a", "3"}, {"tuple", "2,5"}, {"out", out.string()}}) ==
        ErrorCode::dimension);
}

TEST_CASE("enumerate and roots") {
  const fs::path out = scratch("enumerate");
  run("enumerate", {{"n", "3"}, {"a", "3"}, {"rmax", "100"}, {"out", out.string()}});
  const auto ls = lines(slurp(out / "orbit.csv"));
  CHECK(ls.front() == "depth,word,x1,x2,x3");
  CHECK(ls.size() == 8);  // the seven Markoff triples with max <= 100
  run("roots", {{"n", "3"}, {"a", "3"}, {"out", out.string()}});
  const auto rs = lines(slurp(out / "roots.csv"));
  REQUIRE(rs.size() >= 2);
  CHECK(rs[1] == "root,1,1,1");
}

TEST_CASE("spectral commands") {
  const fs::path out = scratch("spectral");
  run("beta", {{"n", "3"}, {"tol", "1e-3"}, {"out", out.string()}});
  auto j = nlohmann::json::parse(slurp(out / "spectral.json"));
  CHECK(std::abs(j["beta"].get<double>() - 2.0) <= 2e-3);
  for (const char* key : {"n", "s", "grid", "A_max", "lambda", "residual", "iterations", "beta", "bracket"})
    CHECK(j.contains(key));

  run("beta", {{"n", "4"}, {"grid", "16,32"}, {"amax", "16"}, {"out", out.string()}});
  j = nlohmann::json::parse(slurp(out / "spectral.json"));
  CHECK(j["grids"].size() == 2);
  CHECK(j["refinement_shift"].get<double>() < 0.01);

  run("eig", {{"n", "3"}, {"s", "2"}, {"grid", "128"}, {"dump", "true"}, {"out", out.string()}});
  j = nlohmann::json::parse(slurp(out / "spectral.json"));
  CHECK(j["lambda"].get<double>() == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(j["pairing_nu_h"].get<double>() > 0);
  CHECK(lines(slurp(out / "nu.csv")).size() == 129);

  run("gauss-check", {{"s", "2"}, {"out", out.string()}});
  j = nlohmann::json::parse(slurp(out / "gauss.json"));
  CHECK(j["conjugation_max_diff"].get<double>() <= 1e-10);
  CHECK(j["gauss_lambda"].get<double>() == doctest::Approx(1.0).epsilon(5e-4));
}

TEST_CASE("determinism and meta.json") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const Options base = {{"n", "4"}, {"depth", "4"}, {"a-cap", "3"}, {"exhaustive", "true"}, {"raster", "64"}};
  Options oa = base, ob = base;
  oa["out"] = a.string();
  oa["seed"] = "1";
  ob["out"] = b.string();
  ob["seed"] = "99";
  run("limitset", oa);
  run("limitset", ob);
  CHECK(slurp(a / "limitset.pgm") == slurp(b / "limitset.pgm"));

  Options ra = {{"n", "4"}, {"depth", "8"}, {"count", "500"}, {"seed", "7"}, {"out", a.string()}};
  Options rb = ra;
  rb["out"] = b.string();
  run("limitset", ra);
  run("limitset", rb);
  CHECK(slurp(a / "limitset.csv") == slurp(b / "limitset.csv"));

  Options aa = {{"n", "4"}, {"samples", "2000"}, {"composites", "200"}, {"seed", "3"}, {"out", a.string()}};
  Options ab = aa;
  ab["out"] = b.string();
  ab["threads"] = "2";
  CHECK(run("audit", aa).status == 0);
  run("audit", ab);
  CHECK(slurp(a / "audit.json") == slurp(b / "audit.json"));

  Options ea = {{"n", "4"}, {"s", "2.4"}, {"grid", "48"}, {"amax", "16"}, {"dump", "true"}, {"out", a.string()}};
  Options eb = ea;
  eb["out"] = b.string();
  eb["threads"] = "3";
  run("eig", ea);
  run("eig", eb);
  for (const char* f : {"spectral.json", "h.csv", "nu.csv"}) CHECK(slurp(a / f) == slurp(b / f));

  run("audit", aa);
  const auto meta = nlohmann::json::parse(slurp(a / "meta.json"));
  CHECK(meta["command"] == "audit");
  CHECK(meta["seed"] == "3");
  CHECK(meta["options"]["samples"] == "2000");
  CHECK(meta.contains("wall_time_s"));
  CHECK(meta.contains("version"));
  CHECK(meta["artifacts"].back() == "audit.json");
}

TEST_CASE("limit-set rasters") {
  const fs::path out = scratch("raster");
  auto r = run("limitset", {{"n", "4"}, {"depth", "0"}, {"raster", "32"}, {"count", "50"}, {"out", out.string()}});
  CHECK(r.summary.find("occupied=1 ") != std::string::npos);
  r = run("limitset",
          {{"n", "4"}, {"depth", "6"}, {"a-cap", "3"}, {"exhaustive", "true"}, {"raster", "64"}, {"out", out.string()}});
  CHECK(r.summary.find("points=262144") != std::string::npos);
  const auto pgm = slurp(out / "limitset.pgm");
  CHECK(pgm.rfind("P2\n64 64\n255\n", 0) == 0);
  CHECK(r.summary.find("empty=0") == std::string::npos);
}
