// SPDX-License-Identifier: Apache-2.0

#include "projective.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

namespace mhs::proj {

// ---------------------------------------------------------------- matrices

Mat Mat::identity(int m) {
  Mat r(m, m);
  for (int i = 0; i < m; ++i) r(i, i) = 1.0;
  return r;
}

Mat operator*(const Mat& x, const Mat& y) {
  if (x.cols != y.rows) fail(ErrorCode::internal, "matrix shape mismatch");
  Mat r(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k) {
      const double v = x(i, k);
      if (v == 0.0) continue;
      for (int j = 0; j < y.cols; ++j) r(i, j) += v * y(k, j);
    }
  return r;
}

double one_norm(const Mat& m) {
  double best = 0.0;
  for (int j = 0; j < m.cols; ++j) {
    double s = 0.0;
    for (int i = 0; i < m.rows; ++i) s += std::fabs(m(i, j));
    best = std::max(best, s);
  }
  return best;
}

double determinant(Mat m) {
  const int n = m.rows;
  double det = 1.0;
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::fabs(m(r, c)) > std::fabs(m(piv, c))) piv = r;
    if (m(piv, c) == 0.0) return 0.0;
    if (piv != c) {
      for (int k = 0; k < n; ++k) std::swap(m(piv, k), m(c, k));
      det = -det;
    }
    det *= m(c, c);
    for (int r = c + 1; r < n; ++r) {
      const double f = m(r, c) / m(c, c);
      for (int k = c; k < n; ++k) m(r, k) -= f * m(c, k);
    }
  }
  return det;
}

// ------------------------------------------------------------------ random

uint64_t SplitMix::next() {
  uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

namespace {
uint64_t mix(uint64_t a, uint64_t b) {
  SplitMix s(a * 0x9E3779B97F4A7C15ULL + b);
  s.next();
  return s.next();
}

std::string vec_str(const Vec& w) {
  std::string s = "(";
  for (size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + fmt_double(w[i]);
  return s + ")";
}

void check_dims(int n, const Vec& w) {
  if (n < 3) fail(ErrorCode::usage, "n must be at least 3");
  if (static_cast<int>(w.size()) != n - 2)
    fail(ErrorCode::dimension, "simplex point needs n-2 = " + std::to_string(n - 2) + " coordinates");
}
}  // namespace

// ------------------------------------------------------------------ action

double beta_of(const Vec& w) {
  double s = 0.0;
  for (double v : w) s += v;
  return s;
}

Vec full_coords(const Vec& w) {
  Vec f = w;
  f.push_back(1.0 - beta_of(w));
  return f;
}

bool in_delta(int n, const Vec& w, double tol) {
  if (static_cast<int>(w.size()) != n - 2) return false;
  const Vec f = full_coords(w);
  if (f[0] < -tol) return false;
  for (size_t i = 1; i < f.size(); ++i)
    if (f[i] < f[i - 1] - tol) return false;
  return true;
}

bool in_delta0(int n, const Vec& w, double tol) {
  if (!in_delta(n, w, tol)) return false;
  return 1.0 - 2.0 * beta_of(w) >= -tol;  // w_{n-1} >= beta
}

Vec gamma_act_h(int j, const Vec& y) {
  const int n = static_cast<int>(y.size());
  if (j < 1 || j > n - 1) fail(ErrorCode::usage, "generator index out of range");
  for (size_t i = 0; i < y.size(); ++i)
    if (y[i] < 0 || (i && y[i] < y[i - 1])) fail(ErrorCode::domain, "input must be nonnegative and ordered");
  Vec out;
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    if (i != j - 1) {
      out.push_back(y[i]);
      s += y[i];
    }
  out.push_back(s);
  return out;
}

Vec gamma_act(int n, int i, const Vec& w) {
  check_dims(n, w);
  if (i < 1 || i > n - 1) fail(ErrorCode::usage, "generator index out of range");
  const double b = beta_of(w);
  Vec out;
  out.reserve(n - 2);
  if (i == n - 1) {
    for (double v : w) out.push_back(v / (1.0 + b));
  } else {
    const double d = 2.0 - w[i - 1];
    for (int k = 0; k < n - 2; ++k)
      if (k != i - 1) out.push_back(w[k] / d);
    out.push_back((1.0 - b) / d);
  }
  return out;
}

double weight(const Gen& g, const Vec& w) {
  if (g.j < 1 || g.j > static_cast<int>(w.size())) fail(ErrorCode::usage, "generator index out of range");
  if (g.A < 0) fail(ErrorCode::usage, "A must be nonnegative");
  return 1.0 + (g.A + 1.0) * (1.0 - w[g.j - 1]);
}

Vec accel_act(int n, const Gen& g, const Vec& w) {
  check_dims(n, w);
  if (!in_delta(n, w, 1e-9)) fail(ErrorCode::domain, "point " + vec_str(w) + " is not in the simplex");
  const double u = 1.0 / weight(g, w);
  Vec out;
  out.reserve(n - 2);
  for (int k = 0; k < n - 2; ++k)
    if (k != g.j - 1) out.push_back(w[k] * u);
  out.push_back((1.0 - beta_of(w)) * u);
  return out;
}

Vec apply_word(int n, const std::vector<Gen>& gens, const Vec& w) {
  Vec x = w;
  for (auto it = gens.rbegin(); it != gens.rend(); ++it) x = accel_act(n, *it, x);
  return x;
}

double jacobian_det(int n, const Gen& g, const Vec& w) { return std::pow(weight(g, w), -(n - 1.0)); }

double jacobian_det(int n, const std::vector<Gen>& gens, const Vec& w) {
  double j = 1.0;
  Vec x = w;
  for (auto it = gens.rbegin(); it != gens.rend(); ++it) {
    j *= jacobian_det(n, *it, x);
    x = accel_act(n, *it, x);
  }
  return j;
}

// ------------------------------------------------------------- derivatives

Mat generator_derivative(int n, int i, const Vec& w) {
  check_dims(n, w);
  const int m = n - 2;
  Mat d(m, m);
  const double b = beta_of(w);
  if (i == n - 1) {
    const double q = 1.0 + b;
    for (int k = 0; k < m; ++k)
      for (int l = 0; l < m; ++l) d(k, l) = (k == l ? 1.0 / q : 0.0) - w[k] / (q * q);
    return d;
  }
  if (i < 1 || i > n - 1) fail(ErrorCode::usage, "generator index out of range");
  const double q = 2.0 - w[i - 1];
  // output k < m-1 is w_{sigma(k)} / q, the last output is (1 - beta) / q
  int row = 0;
  for (int src = 0; src < m; ++src) {
    if (src == i - 1) continue;
    d(row, src) += 1.0 / q;
    d(row, i - 1) += w[src] / (q * q);
    ++row;
  }
  for (int l = 0; l < m; ++l) d(m - 1, l) = -1.0 / q;
  d(m - 1, i - 1) += (1.0 - b) / (q * q);
  return d;
}

Mat total_derivative(int n, const std::vector<int>& word, const Vec& w) {
  Mat d = Mat::identity(n - 2);
  Vec x = w;
  for (auto it = word.rbegin(); it != word.rend(); ++it) {
    d = generator_derivative(n, *it, x) * d;
    x = gamma_act(n, *it, x);
  }
  return d;
}

std::vector<int> letters(int n, const Gen& g) {
  std::vector<int> word(static_cast<size_t>(g.A), n - 1);
  word.push_back(g.j);
  return word;
}

std::vector<int> letters(int n, const std::vector<Gen>& gens) {
  std::vector<int> word;
  for (const auto& g : gens) {
    const auto l = letters(n, g);
    word.insert(word.end(), l.begin(), l.end());
  }
  return word;
}

// ----------------------------------------------------------------- regions

const char* to_string(Region r) {
  switch (r) {
    case Region::core: return "core";
    case Region::cusp: return "cusp";
    case Region::boundary: return "boundary";
  }
  return "?";
}

Region classify_region(int n, const Vec& w, double tol) {
  check_dims(n, w);
  if (!in_delta0(n, w, tol)) fail(ErrorCode::domain, "point " + vec_str(w) + " is not in the region Delta_0");
  const double b = beta_of(w);
  const double gap = (1.0 - b - b) - w[n - 3];
  if (gap > tol) return Region::cusp;
  if (gap < -tol) return Region::core;
  return Region::boundary;
}

Vec sample_delta(int n, SplitMix& rng) {
  Vec e(n - 1);
  double s = 0.0;
  for (auto& v : e) {
    v = -std::log1p(-rng.uniform());
    s += v;
  }
  for (auto& v : e) v /= s;
  std::sort(e.begin(), e.end());
  e.pop_back();
  return e;
}

Vec sample_region(int n, SampleRegion where, SplitMix& rng) {
  for (int tries = 0; tries < 10'000'000; ++tries) {
    Vec w = sample_delta(n, rng);
    if (where == SampleRegion::delta) return w;
    if (!in_delta0(n, w, 0.0)) continue;
    const Region r = classify_region(n, w, 1e-12);
    if (where == SampleRegion::delta0) return w;
    if (where == SampleRegion::core && r == Region::core) return w;
    if (where == SampleRegion::cusp && r == Region::cusp) return w;
  }
  fail(ErrorCode::internal, "rejection sampling did not accept a point");
}

// ------------------------------------------------------------ fixed points

double fixed_point_weight(int A) {
  const double a1 = A + 1.0;
  return (a1 + std::sqrt(a1 * a1 + 4.0)) / 2.0;
}

Vec fixed_point(int n, int A) {
  if (n < 3) fail(ErrorCode::usage, "n must be at least 3");
  // zeros are preserved; the last free coordinate t = 1 - c solves
  // (A+1) c^2 - (A-1) c - 1 = 0
  const double a1 = A + 1.0;
  const double c = ((A - 1.0) + std::sqrt(a1 * a1 + 4.0)) / (2.0 * a1);
  Vec w(n - 2, 0.0);
  w.back() = 1.0 - c;
  return w;
}

Vec barycenter(int n) {
  // vertices of Delta: the last m of the n-1 coordinates equal 1/m
  Vec full(n - 1, 0.0);
  for (int m = 1; m <= n - 1; ++m)
    for (int k = n - 1 - m; k < n - 1; ++k) full[k] += 1.0 / m;
  for (auto& v : full) v /= (n - 1);
  full.pop_back();
  return full;
}

// ------------------------------------------------------------------- audit

namespace {

struct Inequality {
  std::string name;
  std::vector<std::pair<int, int>> combos;  // (i, j) index choices
  std::function<std::vector<int>(int, int)> word;
  std::function<double(const Vec&, int, int)> closed;
  std::vector<std::pair<SampleRegion, double>> regions;
};

std::vector<Inequality> inequalities(int n) {
  const int m = n - 2;
  auto W = [](const Vec& w, int k) { return w[k - 1]; };
  std::vector<Inequality> list;
  auto range = [](int lo, int hi) {
    std::vector<std::pair<int, int>> c;
    for (int i = lo; i <= hi; ++i) c.emplace_back(i, 0);
    return c;
  };
  {
    Inequality q;
    q.name = "g_i (i <= n-3)";
    q.combos = range(1, n - 3);
    q.word = [](int i, int) { return std::vector<int>{i}; };
    q.closed = [W](const Vec& w, int i, int) { return 2.0 / (2.0 - W(w, i)); };
    q.regions = {{SampleRegion::cusp, 6.0 / 5.0}, {SampleRegion::core, 4.0 / 3.0}};
    list.push_back(q);
  }
  {
    Inequality q;
    q.name = "g_{n-1}";
    q.combos = {{0, 0}};
    q.word = [n](int, int) { return std::vector<int>{n - 1}; };
    q.closed = [W](const Vec& w, int, int) {
      const double b = beta_of(w);
      return (1.0 + 2.0 * b - 2.0 * W(w, 1)) / ((1.0 + b) * (1.0 + b));
    };
    q.regions = {{SampleRegion::delta0, 1.0}};
    list.push_back(q);
  }
  {
    Inequality q;
    q.name = "g_i g_j (i < j <= n-2)";
    for (int i = 1; i <= m; ++i)
      for (int j = i + 1; j <= m; ++j) q.combos.emplace_back(i, j);
    q.word = [](int i, int j) { return std::vector<int>{i, j}; };
    q.closed = [W](const Vec& w, int i, int j) { return 2.0 / (4.0 - 2.0 * W(w, j) - W(w, i)); };
    q.regions = {{SampleRegion::delta0, 4.0 / 5.0}};
    list.push_back(q);
  }
  {
    Inequality q;
    q.name = "g_i g_j (j <= i < n-2)";
    for (int i = 1; i < m; ++i)
      for (int j = 1; j <= i; ++j) q.combos.emplace_back(i, j);
    q.word = [](int i, int j) { return std::vector<int>{i, j}; };
    q.closed = [W](const Vec& w, int i, int j) { return 2.0 / (4.0 - 2.0 * W(w, j) - W(w, i + 1)); };
    q.regions = {{SampleRegion::delta0, 4.0 / 5.0}};
    list.push_back(q);
  }
  {
    Inequality q;
    q.name = "g_{n-2} g_j (j <= n-2)";
    q.combos = range(1, m);
    q.word = [m](int j, int) { return std::vector<int>{m, j}; };
    q.closed = [W](const Vec& w, int j, int) {
      const double b = beta_of(w);
      const double kappa = 3.0 + b - 2.0 * W(w, j);
      return (4.0 + 2.0 * b - 2.0 * W(w, 1) - 3.0 * W(w, j)) / (kappa * kappa);
    };
    q.regions = {{SampleRegion::delta0, 4.0 / 5.0}};
    list.push_back(q);
  }
  {
    Inequality q;
    q.name = "g_{n-1} g_i (i <= n-3)";
    q.combos = range(1, n - 3);
    q.word = [n](int i, int) { return std::vector<int>{n - 1, i}; };
    q.closed = [W](const Vec& w, int i, int) { return 2.0 / (3.0 - 2.0 * W(w, i)); };
    q.regions = {{SampleRegion::cusp, 10.0 / 13.0}, {SampleRegion::core, 4.0 / 5.0}};
    list.push_back(q);
  }
  {
    Inequality q;
    q.name = "g_{n-1} g_{n-2}";
    q.combos = {{0, 0}};
    q.word = [n, m](int, int) { return std::vector<int>{n - 1, m}; };
    q.closed = [W, m](const Vec& w, int, int) { return 2.0 / (3.0 - 2.0 * W(w, m)); };
    q.regions = {{SampleRegion::cusp, 6.0 / 7.0}, {SampleRegion::core, 1.0}};
    list.push_back(q);
  }
  {
    Inequality q;
    q.name = "g_i g_{n-1} g_{n-2} (i <= n-3)";
    q.combos = range(1, n - 3);
    q.word = [n, m](int i, int) { return std::vector<int>{i, n - 1, m}; };
    q.closed = [W, m](const Vec& w, int i, int) { return 2.0 / (6.0 - 4.0 * W(w, m) - W(w, i)); };
    q.regions = {{SampleRegion::delta0, 4.0 / 7.0}};
    list.push_back(q);
  }
  {
    Inequality q;
    q.name = "g_{n-2} g_{n-1} g_{n-2}";
    q.combos = {{0, 0}};
    q.word = [n, m](int, int) { return std::vector<int>{m, n - 1, m}; };
    q.closed = [W, m](const Vec& w, int, int) {
      const double b = beta_of(w);
      const double theta = 5.0 + b - 4.0 * W(w, m);
      return (7.0 + 2.0 * b - 2.0 * W(w, 1) - 6.0 * W(w, m)) / (theta * theta);
    };
    q.regions = {{SampleRegion::delta0, 32.0 / 49.0}};
    list.push_back(q);
  }
  {
    Inequality q;
    q.name = "g_{n-1} g_{n-1} g_{n-2}";
    q.combos = {{0, 0}};
    q.word = [n, m](int, int) { return std::vector<int>{n - 1, n - 1, m}; };
    q.closed = [W, m](const Vec& w, int, int) { return 2.0 / (4.0 - 3.0 * W(w, m)); };
    q.regions = {{SampleRegion::cusp, 2.0 / 3.0}, {SampleRegion::core, 4.0 / 5.0}};
    list.push_back(q);
  }
  return list;
}

const char* region_name(SampleRegion r) {
  switch (r) {
    case SampleRegion::core: return "core";
    case SampleRegion::cusp: return "cusp";
    case SampleRegion::delta0: return "delta0";
    case SampleRegion::delta: return "delta";
  }
  return "?";
}

// Run body(idx) for idx in [0, count) across threads; body must be thread safe.
void parallel_for(unsigned long long count, int threads, const std::function<void(unsigned long long, unsigned long long)>& body) {
  threads = std::max(1, threads);
  if (threads == 1 || count < 1000) {
    body(0, count);
    return;
  }
  std::vector<std::thread> pool;
  const unsigned long long chunk = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const unsigned long long lo = t * chunk, hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(body, lo, hi);
  }
  for (auto& th : pool) th.join();
}

}  // namespace

bool AuditReport::passed() const {
  for (const auto& q : inequalities)
    for (const auto& r : q.regions)
      if (r.violations) return false;
  return composite.violations == 0;
}

AuditReport contraction_audit(int n, unsigned long long samples, uint64_t seed, unsigned long long composite_samples,
                              int A_cap, int threads) {
  if (n < 3) fail(ErrorCode::usage, "n must be at least 3");
  AuditReport rep;
  rep.n = n;
  rep.samples = samples;
  rep.seed = seed;
  rep.A_cap = A_cap;
  rep.rho = std::pow(24.0 / 25.0, 0.25);
  rep.l2_factor = std::sqrt(static_cast<double>(n - 2));
  const auto list = inequalities(n);
  for (size_t qi = 0; qi < list.size(); ++qi) {
    const auto& q = list[qi];
    InequalityCheck ic;
    ic.name = q.name;
    ic.applicable = !q.combos.empty();
    for (size_t ri = 0; ri < q.regions.size(); ++ri) {
      const auto [where, ceiling] = q.regions[ri];
      RegionCheck rc;
      rc.region = region_name(where);
      rc.ceiling = ceiling;
      if (ic.applicable) {
        std::mutex mu;
        unsigned long long first_bad = ~0ULL;
        parallel_for(samples, threads, [&](unsigned long long lo, unsigned long long hi) {
          RegionCheck local;
          unsigned long long local_bad = ~0ULL;
          std::string local_witness;
          for (unsigned long long s = lo; s < hi; ++s) {
            SplitMix rng(mix(mix(seed, qi * 16 + ri), s));
            const Vec w = sample_region(n, where, rng);
            for (const auto& [i, j] : q.combos) {
              const double norm = one_norm(total_derivative(n, q.word(i, j), w));
              const double closed = q.closed(w, i, j);
              local.max_norm = std::max(local.max_norm, norm);
              local.max_closed_form = std::max(local.max_closed_form, closed);
              const bool bad = norm > closed + rep.margin || closed > ceiling + rep.margin || norm > ceiling + rep.margin;
              if (bad) {
                ++local.violations;
                if (s < local_bad) {
                  local_bad = s;
                  std::ostringstream os;
                  os << "w=" << vec_str(w) << " i=" << i << " j=" << j << " norm=" << fmt_double(norm)
                     << " closed=" << fmt_double(closed);
                  local_witness = os.str();
                }
              }
            }
          }
          std::lock_guard<std::mutex> lock(mu);
          rc.max_norm = std::max(rc.max_norm, local.max_norm);
          rc.max_closed_form = std::max(rc.max_closed_form, local.max_closed_form);
          rc.violations += local.violations;
          if (local_bad < first_bad) {
            first_bad = local_bad;
            rc.witness = local_witness;
          }
        });
        rc.samples = samples;
      }
      ic.regions.push_back(rc);
    }
    rep.inequalities.push_back(ic);
  }

  // composite words gamma_{n-1}^L gamma_i gamma_{n-1}^K gamma_j on Delta_0
  std::mutex mu;
  unsigned long long first_bad = ~0ULL;
  parallel_for(composite_samples, threads, [&](unsigned long long lo, unsigned long long hi) {
    double local_max = 0.0;
    unsigned long long viol = 0, local_bad = ~0ULL;
    std::string local_witness;
    for (unsigned long long s = lo; s < hi; ++s) {
      SplitMix rng(mix(mix(seed, 0xC0FFEE), s));
      const Vec w = sample_region(n, SampleRegion::delta0, rng);
      // half of the exponents come from the small values where the bound is tight
      auto draw = [&]() {
        return rng.uniform() < 0.5 ? static_cast<int>(rng.next() % 4)
                                   : static_cast<int>(rng.next() % static_cast<uint64_t>(A_cap + 1));
      };
      const int L = draw(), K = draw();
      const int i = 1 + static_cast<int>(rng.next() % static_cast<uint64_t>(n - 2));
      const int j = 1 + static_cast<int>(rng.next() % static_cast<uint64_t>(n - 2));
      const auto word = letters(n, std::vector<Gen>{{L, i}, {K, j}});
      const double norm = one_norm(total_derivative(n, word, w));
      local_max = std::max(local_max, norm);
      if (norm > 24.0 / 25.0 + rep.margin) {
        ++viol;
        if (s < local_bad) {
          local_bad = s;
          std::ostringstream os;
          os << "w=" << vec_str(w) << " L=" << L << " i=" << i << " K=" << K << " j=" << j << " norm=" << fmt_double(norm);
          local_witness = os.str();
        }
      }
    }
    std::lock_guard<std::mutex> lock(mu);
    rep.composite.max_norm = std::max(rep.composite.max_norm, local_max);
    rep.composite.violations += viol;
    if (local_bad < first_bad) {
      first_bad = local_bad;
      rep.composite.witness = local_witness;
    }
  });
  rep.composite.samples = composite_samples;
  return rep;
}

std::string audit_json(const AuditReport& r) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["n"] = r.n;
  j["samples"] = r.samples;
  j["seed"] = r.seed;
  j["A_cap"] = r.A_cap;
  j["margin"] = r.margin;
  j["norm"] = "l1";
  j["l2_equivalence_factor"] = round15(r.l2_factor);
  j["rho_empirical"] = round15(r.rho);
  ordered_json arr = ordered_json::array();
  for (const auto& q : r.inequalities) {
    ordered_json e;
    e["word"] = q.name;
    e["applicable"] = q.applicable;
    ordered_json regs = ordered_json::array();
    for (const auto& rc : q.regions) {
      ordered_json x;
      x["region"] = rc.region;
      x["bound"] = round15(rc.ceiling);
      x["max_observed"] = round15(rc.max_norm);
      x["max_closed_form"] = round15(rc.max_closed_form);
      x["samples"] = rc.samples;
      x["seed"] = r.seed;
      x["violations"] = rc.violations;
      if (!rc.witness.empty()) x["witness"] = rc.witness;
      regs.push_back(x);
    }
    e["regions"] = regs;
    arr.push_back(e);
  }
  j["inequalities"] = arr;
  ordered_json c;
  c["word"] = "g_{n-1}^L g_i g_{n-1}^K g_j";
  c["bound"] = round15(r.composite.bound);
  c["max_observed"] = round15(r.composite.max_norm);
  c["samples"] = r.composite.samples;
  c["seed"] = r.seed;
  c["violations"] = r.composite.violations;
  if (!r.composite.witness.empty()) c["witness"] = r.composite.witness;
  j["composite"] = c;
  j["passed"] = r.passed();
  return j.dump(2) + "\n";
}

// --------------------------------------------------------------- limit set

void limit_set_visit(int n, const LimitOptions& opt, const std::function<void(const Vec&)>& sink) {
  if (n < 3) fail(ErrorCode::usage, "n must be at least 3");
  if (opt.depth < 0) fail(ErrorCode::usage, "depth must be nonnegative");
  if (opt.A_cap < 0) fail(ErrorCode::usage, "A cap must be nonnegative");
  const Vec base = opt.base.empty() ? barycenter(n) : opt.base;
  check_dims(n, base);
  if (!in_delta(n, base)) fail(ErrorCode::domain, "base point is not in the simplex");
  if (opt.depth == 0) {
    sink(base);
    return;
  }
  if (opt.exhaustive) {
    const double gens = static_cast<double>(opt.A_cap + 1) * (n - 2);
    if (std::pow(gens, opt.depth) > static_cast<double>(opt.max_points))
      fail(ErrorCode::capacity, "exhaustive limit set would produce more than " + std::to_string(opt.max_points) + " points");
    std::vector<Vec> stack_w(opt.depth + 1);
    stack_w[0] = base;
    std::function<void(int)> rec = [&](int level) {
      if (level == opt.depth) {
        sink(stack_w[level]);
        return;
      }
      for (int j = 1; j <= n - 2; ++j)
        for (int A = 0; A <= opt.A_cap; ++A) {
          stack_w[level + 1] = accel_act(n, Gen{A, j}, stack_w[level]);
          rec(level + 1);
        }
    };
    rec(0);
    return;
  }
  // random words: A drawn with probability proportional to (A+1)^{-2}
  std::vector<double> cdf(opt.A_cap + 1);
  double tot = 0.0;
  for (int A = 0; A <= opt.A_cap; ++A) cdf[A] = (tot += 1.0 / ((A + 1.0) * (A + 1.0)));
  for (auto& c : cdf) c /= tot;
  for (unsigned long long c = 0; c < opt.count; ++c) {
    SplitMix rng(mix(opt.seed, c));
    Vec w = base;
    for (int d = 0; d < opt.depth; ++d) {
      const double u = rng.uniform();
      const int A = static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      const int j = 1 + static_cast<int>(rng.next() % static_cast<uint64_t>(n - 2));
      w = accel_act(n, Gen{std::min(A, opt.A_cap), j}, w);
    }
    sink(w);
  }
}

std::vector<Vec> limit_set_sample(int n, const LimitOptions& opt) {
  std::vector<Vec> out;
  limit_set_visit(n, opt, [&](const Vec& w) { out.push_back(w); });
  return out;
}

Raster make_raster(int n, int grid) {
  if (grid < 1 || grid > 8192) fail(ErrorCode::usage, "raster grid must be in 1..8192");
  Raster r;
  r.width = grid;
  r.height = n == 3 ? 1 : grid;
  r.x_max = n == 3 ? 0.5 : 1.0 / 3.0;
  r.y_max = 0.5;
  r.cells.assign(static_cast<size_t>(r.width) * r.height, 0);
  return r;
}

void Raster::add(int n, const Vec& w) {
  const double x = n == 3 ? w[0] : w[n - 4];
  const double y = n == 3 ? 0.0 : w[n - 3];
  int cx = static_cast<int>(std::floor(x / x_max * width));
  int cy = height == 1 ? 0 : static_cast<int>(std::floor(y / y_max * height));
  cx = std::clamp(cx, 0, width - 1);
  cy = std::clamp(cy, 0, height - 1);
  ++cells[static_cast<size_t>(cy) * width + cx];
}

size_t Raster::occupied() const {
  return static_cast<size_t>(std::count_if(cells.begin(), cells.end(), [](auto c) { return c > 0; }));
}

std::string raster_pgm(const Raster& r) {
  std::ostringstream os;
  os << "P2\n" << r.width << ' ' << r.height << "\n255\n";
  unsigned long long cmax = 0;
  for (auto c : r.cells) cmax = std::max(cmax, c);
  const double denom = std::log1p(static_cast<double>(cmax));
  for (int row = r.height - 1; row >= 0; --row) {  // top row = largest y
    for (int col = 0; col < r.width; ++col) {
      const auto c = r.cells[static_cast<size_t>(row) * r.width + col];
      const int v = c == 0 ? 0 : 1 + static_cast<int>(std::floor(254.0 * std::log1p(static_cast<double>(c)) / denom));
      os << (col ? " " : "") << std::min(v, 255);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace mhs::proj
