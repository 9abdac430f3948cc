// SPDX-License-Identifier: Apache-2.0

#include "runner.hpp"

#include "mh_core.hpp"
#include "orbit_enum.hpp"
#include "projective.hpp"
#include "transfer.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace mhs::runner {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string version() { return "0.1.0"; }

namespace {

std::vector<OptionSpec> common_options() {
  return {
      {"out", "output directory for artifacts", ".", false, false},
      {"seed", "seed of every random choice", "1", false, false},
      {"threads", "worker threads", "1", false, false},
  };
}

std::vector<OptionSpec> surface_options() {
  return {
      {"n", "number of variables (n >= 3)", "", false, true},
      {"a", "coefficient a >= 1", "", false, true},
      {"k", "constant k", "0", false, false},
  };
}

std::vector<CommandSpec> build_commands() {
  auto with = [](std::vector<OptionSpec> a, const std::vector<OptionSpec>& b) {
    a.insert(a.end(), b.begin(), b.end());
    auto c = common_options();
    a.insert(a.end(), c.begin(), c.end());
    return a;
  };
  const std::vector<OptionSpec> op = {
      {"grid", "nodes per axis (comma list for beta: coarse to fine)", "", false, false},
      {"amax", "explicit branches A = 0..amax", "", false, false},
      {"tail", "tail treatment beyond amax: analytic or drop", "analytic", false, false},
  };
  std::vector<CommandSpec> cs;
  cs.push_back({"enumerate", "orbit nodes with max entry <= rmax (orbit.csv)",
                with(surface_options(),
                     {{"rmax", "ball radius R", "", false, true},
                      {"dedup-depth", "depth up to which children are deduplicated", "4", false, false},
                      {"max-nodes", "refuse beyond this many nodes", "20000000", false, false}})});
  cs.push_back({"count", "orbit counts at increasing radii (counts.csv)",
                with(surface_options(),
                     {{"rmax", "largest integer radius (integer thresholds)", "", false, false},
                      {"logr-max", "largest log R (logarithmic thresholds)", "", false, false},
                      {"logr-min", "smallest log R", "1", false, false},
                      {"rows", "number of thresholds", "20", false, false},
                      {"exact-only", "disable logarithmic nodes", "", true, false},
                      {"shard", "checkpoint file for resumable runs", "", false, false},
                      {"max-nodes", "refuse beyond this many nodes", "4000000000", false, false}})});
  cs.push_back({"descend", "descent path of a solution to a minimal tuple (descent.csv)",
                with(surface_options(), {{"tuple", "comma separated solution", "", false, true}})});
  cs.push_back({"roots", "minimal tuples and exceptional tuples of the search box (roots.csv)",
                with(surface_options(), {})});
  std::vector<OptionSpec> beta = {{"n", "number of variables", "", false, true},
                                  {"tol", "bracket width of the solve", "1e-4", false, false}};
  beta.insert(beta.end(), op.begin(), op.end());
  beta.push_back({"dump", "write h.csv on the finest grid", "", true, false});
  cs.push_back({"beta", "solve lambda_s = 1 (spectral.json)", with(beta, {})});
  std::vector<OptionSpec> eig = {{"n", "number of variables", "", false, true},
                                 {"s", "exponent s > 1", "", false, true}};
  eig.insert(eig.end(), op.begin(), op.end());
  eig.push_back({"dump", "write h.csv and nu.csv", "", true, false});
  cs.push_back({"eig", "leading eigenpair and eigenmeasure at one s (spectral.json)", with(eig, {})});
  cs.push_back({"audit", "sampled contraction audit (audit.json)",
                with({{"n", "number of variables (n >= 4)", "", false, true},
                      {"samples", "samples per inequality and region", "100000", false, false},
                      {"composites", "sampled composite words", "10000", false, false},
                      {"a-cap", "largest exponent in composite words", "64", false, false}},
                     {})});
  cs.push_back({"limitset", "limit-set points and density raster (limitset.csv, limitset.pgm)",
                with({{"n", "number of variables", "", false, true},
                      {"depth", "word length", "10", false, false},
                      {"count", "random words (random mode)", "10000", false, false},
                      {"a-cap", "largest exponent A", "64", false, false},
                      {"exhaustive", "all words with A <= a-cap instead of random words", "", true, false},
                      {"raster", "raster cells per axis", "256", false, false},
                      {"max-points", "refuse beyond this many points", "2000000000", false, false}},
                     {})});
  cs.push_back({"gauss-check", "n = 3 cross-check against the Gauss operator (gauss.json)",
                with({{"s", "exponent s > 1", "2", false, false},
                      {"points", "evaluation points in [0,1]", "64", false, false},
                      {"amax", "explicit branches", "512", false, false},
                      {"grid", "grid of the eigenvalue comparison", "512", false, false}},
                     {})});
  cs.push_back({"fit", "growth exponent from a counts CSV (fit.json, count_curve.csv)",
                with({{"input", "counts CSV written by the count command", "", false, true},
                      {"min-logr", "smallest log R used in the fit", "1", false, false}},
                     {})});
  return cs;
}

// Typed, validated access to the options of one command.
class Args {
 public:
  Args(const CommandSpec& spec, const Options& given) : spec_(spec) {
    for (const auto& [k, v] : given) {
      if (k == "config") continue;
      if (!find(k)) fail(ErrorCode::usage, "unknown option --" + k + " for command " + spec.name);
      values_[k] = v;
    }
    for (const auto& o : spec.options) {
      if (!values_.count(o.key) && !o.default_value.empty()) values_[o.key] = o.default_value;
      if (o.required && !values_.count(o.key))
        fail(ErrorCode::usage, "missing required option --" + o.key + " for command " + spec.name);
    }
  }
  bool has(const std::string& k) const { return values_.count(k) && !values_.at(k).empty(); }
  std::string str(const std::string& k) const { return has(k) ? values_.at(k) : std::string(); }
  long long integer(const std::string& k, long long lo, long long hi) const {
    const std::string v = str(k);
    long long x = 0;
    try {
      size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size() || d != std::floor(d) || std::abs(d) > 9.0e18) throw std::invalid_argument(v);
      x = static_cast<long long>(d);
    } catch (const std::logic_error&) {
      fail(ErrorCode::usage, "option --" + k + " expects an integer, got '" + v + "'");
    }
    if (x < lo || x > hi)
      fail(ErrorCode::usage,
           "option --" + k + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " + v);
    return x;
  }
  double real(const std::string& k) const {
    const std::string v = str(k);
    try {
      size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
      return d;
    } catch (const std::logic_error&) {
      fail(ErrorCode::usage, "option --" + k + " expects a number, got '" + v + "'");
    }
  }
  bool flag(const std::string& k) const {
    if (!values_.count(k)) return false;
    const std::string v = values_.at(k);
    if (v == "" || v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    fail(ErrorCode::usage, "option --" + k + " expects a boolean, got '" + v + "'");
  }
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  const CommandSpec& spec_;
  std::map<std::string, std::string> values_;
  const OptionSpec* find(const std::string& k) const {
    for (const auto& o : spec_.options)
      if (o.key == k) return &o;
    return nullptr;
  }
};

core::Params params_of(const Args& a) {
  core::Params p;
  p.n = static_cast<int>(a.integer("n", 3, 64));
  p.a = static_cast<long>(a.integer("a", 1, 1000000));
  p.k = static_cast<long>(a.integer("k", -1000000000, 1000000000));
  p.validate();
  return p;
}

class Writer {
 public:
  explicit Writer(const std::string& dir) : dir_(dir) {}
  void prepare() {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) fail(ErrorCode::io, "cannot create output directory " + dir_ + ": " + ec.message());
  }
  void write(const std::string& name, const std::string& content) {
    const std::string path = (fs::path(dir_) / name).string();
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::io, "cannot write " + path);
    f << content;
    if (!f) fail(ErrorCode::io, "write failed for " + path);
    paths.push_back(path);
  }
  std::vector<std::string> paths;

 private:
  std::string dir_;
};

spectral::OperatorConfig operator_config(const Args& a, int n, int threads) {
  spectral::OperatorConfig cfg;
  cfg.n = n;
  cfg.threads = threads;
  cfg.A_max = a.has("amax") ? static_cast<int>(a.integer("amax", 1, 1 << 20)) : 0;
  const std::string tail = a.str("tail");
  if (tail == "analytic" || tail.empty())
    cfg.tail = spectral::TailMode::analytic;
  else if (tail == "drop")
    cfg.tail = spectral::TailMode::drop;
  else
    fail(ErrorCode::usage, "option --tail expects analytic or drop, got '" + tail + "'");
  return cfg;
}

std::vector<int> grid_list(const Args& a, int n) {
  std::vector<int> grids;
  if (!a.has("grid")) return {spectral::default_grid(n)};
  std::stringstream ss(a.str("grid"));
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      size_t used = 0;
      const int g = std::stoi(cell, &used);
      if (used != cell.size() || g < 2) throw std::invalid_argument(cell);
      grids.push_back(g);
    } catch (const std::logic_error&) {
      fail(ErrorCode::usage, "option --grid expects resolutions >= 2, got '" + a.str("grid") + "'");
    }
  }
  if (grids.empty()) fail(ErrorCode::usage, "option --grid is empty");
  return grids;
}

std::string read_file(const std::string& path, const std::string& producer) {
  std::ifstream f(path, std::ios::binary);
  if (!f)
    fail(ErrorCode::io, "input '" + path + "' not found; run the `" + producer + "` command first to produce it");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// --------------------------------------------------------------- commands

RunResult cmd_enumerate(const Args& a, Writer& out) {
  const core::Params p = params_of(a);
  const BigInt R = parse_big(a.str("rmax"));
  if (R < 1) fail(ErrorCode::usage, "option --rmax must be positive");
  orbit::EnumOptions opt;
  opt.dedup_depth = static_cast<int>(a.integer("dedup-depth", 0, 1000));
  opt.max_nodes = static_cast<size_t>(a.integer("max-nodes", 1, 4000000000LL));
  const auto roots = orbit::find_roots(p).roots;
  if (roots.empty()) fail(ErrorCode::empty, "no unexceptional minimal tuples for these parameters");
  out.prepare();
  std::string csv = orbit::orbit_csv_header(p.n) + "\n";
  unsigned long long nodes = 0;
  orbit::enumerate_ball(p, roots, R, opt, [&](const orbit::OrbitNode& node) {
    csv += orbit::orbit_csv_row(node) + "\n";
    ++nodes;
  });
  out.write("orbit.csv", csv);
  return {"nodes=" + std::to_string(nodes) + " roots=" + std::to_string(roots.size()), {}, 0};
}

RunResult cmd_count(const Args& a, Writer& out, int threads) {
  const core::Params p = params_of(a);
  const int rows = static_cast<int>(a.integer("rows", 1, 100000));
  std::vector<orbit::Threshold> th;
  if (a.has("rmax") == a.has("logr-max"))
    fail(ErrorCode::usage, "count needs exactly one of --rmax (integer radii) or --logr-max (logarithmic radii)");
  if (a.has("rmax")) {
    const BigInt R = parse_big(a.str("rmax"));
    if (R < 1) fail(ErrorCode::usage, "option --rmax must be positive");
    th = orbit::integer_thresholds(R, rows);
  } else {
    const double hi = a.real("logr-max"), lo = a.real("logr-min");
    if (!(lo > 0) || !(hi >= lo)) fail(ErrorCode::usage, "need 0 < logr-min <= logr-max");
    th = orbit::log_thresholds(lo, hi, rows);
  }
  orbit::CountOptions opt;
  opt.allow_log = !a.flag("exact-only");
  opt.threads = threads;
  opt.max_nodes = static_cast<unsigned long long>(a.integer("max-nodes", 1, 9000000000000000000LL));
  opt.shard_path = a.str("shard");
  out.prepare();
  const auto s = orbit::count_series(p, th, opt);
  out.write("counts.csv", orbit::counts_csv(s));
  std::ostringstream os;
  os << "rows=" << s.rows.size() << " exact_nodes=" << s.stats.exact_nodes << " log_nodes=" << s.stats.log_nodes
     << " last_count=" << (s.rows.empty() ? 0 : s.rows.back().count);
  return {os.str(), {}, 0};
}

RunResult cmd_descend(const Args& a, Writer& out) {
  const core::Params p = params_of(a);
  const core::Tuple x(parse_big_list(a.str("tuple")));
  if (static_cast<int>(x.size()) != p.n)
    fail(ErrorCode::dimension, "tuple has " + std::to_string(x.size()) + " entries, expected n = " +
                                   std::to_string(p.n));
  const core::DescentPath path = core::descend(p, x);
  out.prepare();
  std::string csv = "step,phase,move";
  for (int i = 1; i <= p.n; ++i) csv += ",x" + std::to_string(i);
  csv += "\n";
  int step = 0;
  auto row = [&](const std::string& phase, int move, const core::Tuple& t) {
    csv += std::to_string(step++) + "," + phase + "," + (move ? std::to_string(move) : std::string()) + "," +
           t.str() + "\n";
  };
  row("start", 0, core::order_tuple(x));
  for (const auto& s : path.steps) row("descent", s.j, s.result);
  // Inside the search box, keep moving the largest entry while that strictly
  // lowers the maximum; this ends at a minimal tuple of the orbit.
  core::Tuple t = path.terminal;
  while (true) {
    core::Tuple y = core::order_tuple(core::move_unchecked(p, t, p.n - 1));
    bool positive = true;
    for (const auto& v : y.x) positive = positive && v > 0;
    if (!positive || !(y.max() < t.max())) break;
    row("box", p.n, y);
    t = std::move(y);
  }
  out.write("descent.csv", csv);
  return {"steps=" + std::to_string(step - 1) + " terminal=" + t.str(), {}, 0};
}

RunResult cmd_roots(const Args& a, Writer& out) {
  const core::Params p = params_of(a);
  const auto rs = orbit::find_roots(p);
  out.prepare();
  std::string csv = "kind";
  for (int i = 1; i <= p.n; ++i) csv += ",x" + std::to_string(i);
  csv += "\n";
  for (const auto& t : rs.roots) csv += "root," + t.str() + "\n";
  for (const auto& t : rs.exceptional) csv += "exceptional," + t.str() + "\n";
  out.write("roots.csv", csv);
  return {"roots=" + std::to_string(rs.roots.size()) + " exceptional=" + std::to_string(rs.exceptional.size()) +
              " box_radius=" + mhs::to_string(rs.radius),
          {},
          0};
}

RunResult cmd_beta(const Args& a, Writer& out, int threads) {
  const int n = static_cast<int>(a.integer("n", 3, 64));
  const double tol = a.real("tol");
  if (!(tol > 0) || tol > 1) fail(ErrorCode::usage, "option --tol must lie in (0, 1]");
  spectral::OperatorConfig cfg = operator_config(a, n, threads);
  const auto grids = grid_list(a, n);
  for (int g : grids) {  // validate every grid before computing anything
    spectral::OperatorConfig c = cfg;
    c.grid = g;
    spectral::resolve(c);
  }
  out.prepare();
  std::vector<spectral::BetaResult> results;
  std::optional<double> guess;
  std::string h_csv;
  spectral::OperatorConfig last;
  for (size_t i = 0; i < grids.size(); ++i) {
    spectral::OperatorConfig c = cfg;
    c.grid = grids[i];
    spectral::TransferOperator op(c);
    results.push_back(spectral::solve_beta(op, tol, guess));
    guess = results.back().beta;
    last = op.config();
    if (i + 1 == grids.size() && a.flag("dump")) h_csv = spectral::grid_csv(op.grid(), results.back().eigen.h, "h");
  }
  const auto& fin = results.back();
  json j = json::parse(spectral::spectral_json(last, fin.eigen, &fin));
  if (grids.size() > 1) {
    auto& arr = j["grids"] = json::array();
    for (size_t i = 0; i < grids.size(); ++i)
      arr.push_back({{"grid", grids[i]},
                     {"beta", round15(results[i].beta)},
                     {"bracket", {round15(results[i].lo), round15(results[i].hi)}}});
    j["refinement_shift"] = round15(std::abs(results.back().beta - results[results.size() - 2].beta));
  }
  out.write("spectral.json", j.dump(2) + "\n");
  if (!h_csv.empty()) out.write("h.csv", h_csv);
  std::ostringstream os;
  os << "beta=" << fmt_double(fin.beta) << " bracket=[" << fmt_double(fin.lo) << "," << fmt_double(fin.hi)
     << "] grid=" << last.grid << " A_max=" << last.A_max;
  return {os.str(), {}, 0};
}

RunResult cmd_eig(const Args& a, Writer& out, int threads) {
  const int n = static_cast<int>(a.integer("n", 3, 64));
  const double s = a.real("s");
  if (!(s > 1)) fail(ErrorCode::usage, "option --s must exceed 1");
  spectral::OperatorConfig cfg = operator_config(a, n, threads);
  const auto grids = grid_list(a, n);
  if (grids.size() != 1) fail(ErrorCode::usage, "eig takes a single --grid resolution");
  cfg.grid = grids[0];
  spectral::resolve(cfg);
  out.prepare();
  spectral::TransferOperator op(cfg);
  const auto e = spectral::leading_eigen(op, s);
  const auto m = spectral::eigenmeasure(op, s);
  double pairing = 0.0;
  for (size_t i = 0; i < e.h.size(); ++i) pairing += m.nu[i] * e.h[i];
  json j = json::parse(spectral::spectral_json(op.config(), e));
  j["nu_lambda"] = round15(m.lambda);
  j["nu_residual"] = round15(m.residual);
  j["nu_iterations"] = m.iterations;
  j["pairing_nu_h"] = round15(pairing);
  j["lambda_upper_bound"] = round15(spectral::lambda_upper_bound(n, s));
  if (n == 3) j["gauss_eigenfunction_variation"] = round15(spectral::gauss_eigenfunction_variation(op.grid(), e.h));
  out.write("spectral.json", j.dump(2) + "\n");
  if (a.flag("dump")) {
    out.write("h.csv", spectral::grid_csv(op.grid(), e.h, "h"));
    out.write("nu.csv", spectral::grid_csv(op.grid(), m.nu, "nu"));
  }
  return {"lambda=" + fmt_double(e.lambda) + " residual=" + fmt_double(e.residual) +
              " iterations=" + std::to_string(e.iterations),
          {},
          0};
}

RunResult cmd_audit(const Args& a, Writer& out, uint64_t seed, int threads) {
  const int n = static_cast<int>(a.integer("n", 4, 64));
  const auto samples = static_cast<unsigned long long>(a.integer("samples", 1, 100000000));
  const auto composites = static_cast<unsigned long long>(a.integer("composites", 0, 100000000));
  const int A_cap = static_cast<int>(a.integer("a-cap", 0, 100000));
  if (n > 12) fail(ErrorCode::capacity, "audit supports n <= 12");
  out.prepare();
  const auto r = proj::contraction_audit(n, samples, seed, composites, A_cap, threads);
  out.write("audit.json", proj::audit_json(r));
  const bool ok = r.passed();
  return {std::string("audit ") + (ok ? "passed" : "FAILED") + " n=" + std::to_string(n) +
              " composite_max=" + fmt_double(r.composite.max_norm),
          {},
          ok ? 0 : static_cast<int>(ErrorCode::invariant)};
}

RunResult cmd_limitset(const Args& a, Writer& out, uint64_t seed) {
  const int n = static_cast<int>(a.integer("n", 3, 64));
  proj::LimitOptions opt;
  opt.depth = static_cast<int>(a.integer("depth", 0, 1000));
  opt.count = static_cast<unsigned long long>(a.integer("count", 1, 100000000));
  opt.A_cap = static_cast<int>(a.integer("a-cap", 0, 100000));
  opt.exhaustive = a.flag("exhaustive");
  opt.max_points = static_cast<unsigned long long>(a.integer("max-points", 1, 9000000000000000000LL));
  opt.seed = seed;
  const int grid = static_cast<int>(a.integer("raster", 1, 8192));
  if (opt.exhaustive) {
    const double words = std::pow(static_cast<double>(n - 2) * (opt.A_cap + 1), opt.depth);
    if (words > static_cast<double>(opt.max_points))
      fail(ErrorCode::capacity, "exhaustive limit set would visit " + fmt_double(words) + " words (max-points " +
                                    std::to_string(opt.max_points) + ")");
  }
  out.prepare();
  proj::Raster raster = proj::make_raster(n, grid);
  std::string csv;
  if (!opt.exhaustive) {
    for (int k = 1; k <= n - 2; ++k) csv += (k > 1 ? ",w" : "w") + std::to_string(k);
    csv += "\n";
  }
  unsigned long long points = 0;
  proj::limit_set_visit(n, opt, [&](const proj::Vec& w) {
    raster.add(n, w);
    ++points;
    if (!opt.exhaustive) {
      for (size_t k = 0; k < w.size(); ++k) csv += (k ? "," : "") + fmt_double(w[k]);
      csv += "\n";
    }
  });
  if (!opt.exhaustive) out.write("limitset.csv", csv);
  out.write("limitset.pgm", proj::raster_pgm(raster));
  const size_t occupied = raster.occupied();
  return {"points=" + std::to_string(points) + " occupied=" + std::to_string(occupied) + " empty=" +
              std::to_string(raster.cells.size() - occupied),
          {},
          0};
}

RunResult cmd_gauss(const Args& a, Writer& out, int threads) {
  const double s = a.real("s");
  if (!(s > 1)) fail(ErrorCode::usage, "option --s must exceed 1");
  const int points = static_cast<int>(a.integer("points", 2, 1000000));
  const int A_max = static_cast<int>(a.integer("amax", 1, 1 << 20));
  const int grid = static_cast<int>(a.integer("grid", 2, 1 << 20));
  out.prepare();
  const double diff = spectral::gauss_conjugation_check(s, points, A_max);
  const double lam_gauss = spectral::gauss_leading_eigenvalue(s, grid, A_max);
  spectral::OperatorConfig cfg;
  cfg.n = 3;
  cfg.grid = grid;
  cfg.A_max = A_max;
  cfg.threads = threads;
  spectral::TransferOperator op(cfg);
  const auto e = spectral::leading_eigen(op, s);
  json j;
  j["s"] = round15(s);
  j["points"] = points;
  j["A_max"] = A_max;
  j["grid"] = grid;
  j["conjugation_max_diff"] = round15(diff);
  j["gauss_lambda"] = round15(lam_gauss);
  j["simplex_lambda"] = round15(e.lambda);
  j["eigenfunction_variation"] = round15(spectral::gauss_eigenfunction_variation(op.grid(), e.h));
  out.write("gauss.json", j.dump(2) + "\n");
  return {"conjugation_max_diff=" + fmt_double(diff) + " gauss_lambda=" + fmt_double(lam_gauss) +
              " simplex_lambda=" + fmt_double(e.lambda),
          {},
          0};
}

RunResult cmd_fit(const Args& a, Writer& out) {
  const std::string path = a.str("input");
  const double min_log_R = a.real("min-logr");
  const auto rows = orbit::parse_counts_csv(read_file(path, "count"));
  const auto f = orbit::fit_growth_exponent(rows, min_log_R);
  out.prepare();
  json j;
  j["input"] = path;
  j["min_logR"] = round15(min_log_R);
  j["beta_hat"] = round15(f.beta_hat);
  j["c_hat"] = round15(f.c_hat);
  j["residual"] = round15(f.residual);
  j["rows_used"] = f.rows_used;
  out.write("fit.json", j.dump(2) + "\n");
  std::string csv = "logR,count,fit,used\n";
  for (const auto& r : rows) {
    const double fitted = r.log_R > 0 ? f.c_hat * std::pow(r.log_R, f.beta_hat) : 0.0;
    csv += fmt_double(r.log_R) + "," + std::to_string(r.count) + "," + fmt_double(fitted) + "," +
           (r.log_R >= min_log_R && r.count > 0 ? "1" : "0") + "\n";
  }
  out.write("count_curve.csv", csv);
  return {"beta_hat=" + fmt_double(f.beta_hat) + " rows_used=" + std::to_string(f.rows_used), {}, 0};
}

}  // namespace

const std::vector<CommandSpec>& commands() {
  static const std::vector<CommandSpec> cs = build_commands();
  return cs;
}

const CommandSpec& command(const std::string& name) {
  for (const auto& c : commands())
    if (c.name == name) return c;
  fail(ErrorCode::usage, "unknown command '" + name + "'");
}

Options parse_config(const std::string& text) {
  Options o;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::usage, "config line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (key.empty()) fail(ErrorCode::usage, "config line " + std::to_string(lineno) + ": empty key");
    o[key] = trim(line.substr(eq + 1));
  }
  return o;
}

Options load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::io, "cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

RunResult run(const std::string& name, const Options& options) {
  const auto t0 = std::chrono::steady_clock::now();
  const CommandSpec& spec = command(name);
  const Args a(spec, options);
  const auto seed = static_cast<uint64_t>(a.integer("seed", 0, 9000000000000000000LL));
  const int threads = static_cast<int>(a.integer("threads", 1, 1024));
  Writer out(a.str("out"));
  RunResult r;
  if (name == "enumerate") r = cmd_enumerate(a, out);
  else if (name == "count") r = cmd_count(a, out, threads);
  else if (name == "descend") r = cmd_descend(a, out);
  else if (name == "roots") r = cmd_roots(a, out);
  else if (name == "beta") r = cmd_beta(a, out, threads);
  else if (name == "eig") r = cmd_eig(a, out, threads);
  else if (name == "audit") r = cmd_audit(a, out, seed, threads);
  else if (name == "limitset") r = cmd_limitset(a, out, seed);
  else if (name == "gauss-check") r = cmd_gauss(a, out, threads);
  else if (name == "fit") r = cmd_fit(a, out);
  else fail(ErrorCode::internal, "command table and dispatcher disagree on " + name);

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json meta;
  meta["command"] = name;
  meta["options"] = a.values();
  meta["version"] = version();
  meta["seed"] = std::to_string(seed);
  meta["threads"] = threads;
  meta["wall_time_s"] = round15(wall);
  meta["status"] = r.status;
  meta["summary"] = r.summary;
  json arts = json::array();
  for (const auto& p : out.paths) arts.push_back(fs::path(p).filename().string());
  meta["artifacts"] = arts;
  out.write("meta.json", meta.dump(2) + "\n");
  r.artifacts = out.paths;
  return r;
}

}  // namespace mhs::runner
