// SPDX-License-Identifier: Apache-2.0

#include "mh_core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <numeric>

namespace mhs::core {

namespace {

using i128 = __int128;

constexpr i128 kSaturate = static_cast<i128>(1) << 100;

i128 sat_mul(i128 a, i128 b) {
  if (a == 0 || b == 0) return 0;
  if (a >= kSaturate / b) return kSaturate;
  return a * b;
}

i128 isqrt128(i128 v) {
  if (v < 0) return -1;
  i128 r = static_cast<i128>(std::sqrt(static_cast<long double>(v)));
  while (r > 0 && r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

BigInt from_i128(i128 v) {
  const bool neg = v < 0;
  unsigned __int128 u = neg ? static_cast<unsigned __int128>(-v) : static_cast<unsigned __int128>(v);
  const auto hi = static_cast<unsigned long>(u >> 64);
  const auto lo = static_cast<unsigned long>(u & 0xFFFFFFFFFFFFFFFFull);
  BigInt r = hi;
  r <<= 64;
  r += lo;
  return neg ? BigInt(-r) : r;
}

void check_length(const Params& p, const Tuple& x) {
  if (static_cast<int>(x.size()) != p.n)
    fail(ErrorCode::dimension, "tuple has " + std::to_string(x.size()) + " entries, expected n = " + std::to_string(p.n));
}

bool all_positive(const Tuple& x) {
  return std::all_of(x.x.begin(), x.x.end(), [](const BigInt& v) { return sgn(v) > 0; });
}

// lhs >= rhs with a relative safety margin; borderline cases count as "inside".
bool ge_with_margin(double lhs, double rhs) {
  const double scale = std::max({1.0, std::fabs(lhs), std::fabs(rhs)});
  return lhs - rhs >= 1e-9 * scale;
}

// g(u) with u = log t and t = z_n^{1/(n-1)}: the regularity function of z_n.
double regularity_function(double u) {
  const double e = std::exp(-u);
  if (!(2.0 * e < 1.0)) return -INFINITY;
  return (std::log1p(-2.0 * e) - std::log(2.0)) / u;
}

// Smallest log t beyond which the regularity function stays >= -1/2.
double regularity_threshold_logt() {
  double lo = std::log(2.0) + 1e-12, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (regularity_function(mid) >= -0.5) hi = mid; else lo = mid;
  }
  return hi;
}

bool conclusions_hold(const Params& p, const Tuple& x) {
  const int n = p.n;
  const BigInt& xn = x.x[n - 1];
  if (!(x.x[n - 2] < xn)) return false;
  const Tuple down = move_unchecked(p, x, n - 1);
  if (sgn(down.x[n - 1]) <= 0) return false;
  for (const auto& v : down.x)
    if (!(v < xn)) return false;
  for (int j = 0; j < n - 1; ++j) {
    const Tuple up = move_unchecked(p, x, j);
    for (int i = 0; i < n; ++i)
      if (i != j && !(up.x[j] > up.x[i])) return false;
  }
  return true;
}

std::unique_ptr<K0Data> build_k0(const Params& p) {
  auto d = std::make_unique<K0Data>();
  d->params = p;
  const int n = p.n;
  const double a = static_cast<double>(p.a);
  const double kp = std::max<double>(0.0, static_cast<double>(p.k));
  const double kabs = std::fabs(static_cast<double>(p.k));
  const double scale = std::pow(a, 1.0 / (n - 2));  // z = scale * x

  // Radius beyond which the regularity inequalities hold automatically.
  double rr = 0.0;
  rr = std::max(rr, std::sqrt(4.0 * kp / 3.0));                       // first inequality
  rr = std::max(rr, std::exp((n - 1) * regularity_threshold_logt()) / scale);  // z_n threshold
  rr = std::max(rr, 10.0 / scale);                                    // z_n >= 10
  {
    const double m = std::floor(2.0 / scale + 1e-12);                 // x_{n-1} small enough that z_{n-1} <= 2
    if (m >= 1.0) rr = std::max(rr, a * std::pow(m, n - 1) + std::sqrt(kp) + 1.0);
  }
  if (kp > 0) rr = std::max(rr, a * std::pow(std::sqrt(kp), n - 1) + std::sqrt(kp) + 1.0);  // sum of squares >= k
  d->regularity_radius = rr;

  // Radius containing every regular tuple where a descent conclusion can fail
  // (exceptional families excepted): the failure forces a * x_1..x_{n-2} to be
  // small, which bounds every coordinate.
  const double qmax = 2.0 * (n - 1) + 2.0 * kabs;
  double vr = 0.5 * qmax * std::sqrt((n - 2) * qmax * qmax + kabs);
  vr = std::max(vr, std::sqrt(4.0 * kabs / 3.0) + 2.0);
  if (kp > 0) vr = std::max(vr, a * std::pow(std::sqrt(kp), n - 1) + std::sqrt(kp) + 2.0);
  vr = std::max(vr, static_cast<double>(n) + kabs);
  d->violation_radius = vr;

  const double r = std::ceil(std::max(rr, vr) * (1.0 + 1e-6)) + 2.0;
  if (r > 1e9) fail(ErrorCode::capacity, "K0 radius " + fmt_double(r) + " exceeds the exhaustive-search capacity");
  d->radius = BigInt(static_cast<unsigned long>(r));
  d->box = ordered_solutions_upto(p, d->radius);

  // Move-graph components inside the box; a component is exceptional iff it
  // contains a fundamental exceptional tuple.
  std::map<Tuple, size_t> index;
  for (size_t i = 0; i < d->box.size(); ++i) index.emplace(d->box[i], i);
  std::vector<size_t> parent(d->box.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<size_t(size_t)> find = [&](size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (size_t i = 0; i < d->box.size(); ++i) {
    for (int j = 0; j < n; ++j) {
      const Tuple y = order_tuple(move_unchecked(p, d->box[i], j));
      if (!all_positive(y) || y.max() > d->radius) continue;
      const auto it = index.find(y);
      if (it == index.end()) {
        d->notes.push_back("move image " + y.str() + " missing from the K0 box search");
        continue;
      }
      parent[find(i)] = find(it->second);
    }
  }
  std::vector<char> comp_exc(d->box.size(), 0);
  for (size_t i = 0; i < d->box.size(); ++i)
    if (is_fundamental_exceptional(p, d->box[i])) comp_exc[find(i)] = 1;
  for (size_t i = 0; i < d->box.size(); ++i) d->exceptional[d->box[i]] = comp_exc[find(i)] != 0;

  for (const auto& t : d->box) {
    if (d->exceptional[t]) continue;
    if (satisfies_regularity(p, t) && !conclusions_hold(p, t)) d->bad.push_back(t);
  }
  return d;
}

}  // namespace

void Params::validate() const {
  if (n < 3) fail(ErrorCode::usage, "n must be at least 3 (got " + std::to_string(n) + ")");
  if (n > 64) fail(ErrorCode::capacity, "n = " + std::to_string(n) + " is beyond supported sizes");
  if (a < 1) fail(ErrorCode::usage, "a must be a positive integer (got " + std::to_string(a) + ")");
}

Tuple Tuple::of(std::initializer_list<long> v) {
  Tuple t;
  for (long e : v) t.x.emplace_back(e);
  return t;
}

const BigInt& Tuple::max() const {
  if (x.empty()) fail(ErrorCode::dimension, "empty tuple");
  return *std::max_element(x.begin(), x.end());
}

BigInt eval_residual(const Params& p, const Tuple& x) {
  check_length(p, x);
  BigInt sq = 0, prod = p.a;
  for (const auto& v : x.x) {
    sq += v * v;
    prod *= v;
  }
  return sq - prod - p.k;
}

bool is_solution(const Params& p, const Tuple& x) { return sgn(eval_residual(p, x)) == 0; }

Tuple move_unchecked(const Params& p, const Tuple& x, int j) {
  BigInt prod = p.a;
  for (int i = 0; i < static_cast<int>(x.size()); ++i)
    if (i != j) prod *= x.x[i];
  Tuple y(x.x, false);
  y.x[j] = prod - x.x[j];
  return y;
}

Tuple apply_move(const Params& p, const Tuple& x, int j) {
  check_length(p, x);
  if (j < 0 || j >= p.n) fail(ErrorCode::usage, "move index " + std::to_string(j) + " out of range");
  if (!is_solution(p, x)) fail(ErrorCode::invalid_state, "move applied to a non-solution " + x.str());
  return move_unchecked(p, x, j);
}

Tuple order_tuple(const Tuple& x) {
  Tuple y(x.x, true);
  std::stable_sort(y.x.begin(), y.x.end());
  return y;
}

bool is_fundamental_exceptional(const Params& p, const Tuple& xin) {
  if (static_cast<int>(xin.size()) != p.n || !all_positive(xin)) return false;
  const Tuple x = order_tuple(xin);
  const int n = p.n;
  const BigInt diff = x.x[n - 2] - x.x[n - 1];
  const BigInt d2 = diff * diff;
  if (p.a == 1) {
    for (int i = 0; i < n - 3; ++i)
      if (x.x[i] != 1) return false;
    if (x.x[n - 3] != 2) return false;
    if (d2 != BigInt(p.k - n - 1)) return false;
  } else if (p.a == 2) {
    for (int i = 0; i < n - 2; ++i)
      if (x.x[i] != 1) return false;
    if (d2 != BigInt(p.k - n + 2)) return false;
  } else {
    return false;
  }
  return is_solution(p, x);
}

bool satisfies_regularity(const Params& p, const Tuple& x) {
  const int n = p.n;
  const double la = std::log(static_cast<double>(p.a)) / (n - 2);
  const double lzn = log_big(x.x[n - 1]) + la;
  const double lzm = log_big(x.x[n - 2]) + la;
  // z_{n-1} >= z_n^{1/(n-1)} / 2
  if (!ge_with_margin(lzm, lzn / (n - 1) - std::log(2.0))) return false;
  // regularity function of z_n >= -1/2
  const double u = lzn / (n - 1);
  if (!(u > std::log(2.0)) || !ge_with_margin(regularity_function(u), -0.5)) return false;
  // z_n >= 10 and z_{n-1} > 2
  if (!ge_with_margin(lzn, std::log(10.0))) return false;
  if (!ge_with_margin(lzm, std::log(2.0))) return false;
  // z_1^2 + ... + z_{n-1}^2 >= k', exact in x-space
  BigInt c = 0;
  for (int i = 0; i < n - 1; ++i) c += x.x[i] * x.x[i];
  return c >= p.k;
}

const K0Data& k0_data(const Params& p) {
  static std::mutex mu;
  static std::map<Params, std::unique_ptr<K0Data>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(p);
  if (it != cache.end()) return *it->second;
  p.validate();
  auto d = build_k0(p);
  auto& ref = *d;
  cache.emplace(p, std::move(d));
  return ref;
}

bool outside_K0(const Params& p, const Tuple& xin) {
  check_length(p, xin);
  if (!all_positive(xin)) fail(ErrorCode::domain, "outside_K0 requires a positive tuple");
  const Tuple x = xin.ordered ? xin : order_tuple(xin);
  if (!satisfies_regularity(p, x)) return false;
  const K0Data& d = k0_data(p);
  if (x.max() > d.radius) return true;
  return !std::binary_search(d.bad.begin(), d.bad.end(), x);
}

DescentPath descend(const Params& p, const Tuple& xin) {
  p.validate();
  check_length(p, xin);
  if (!all_positive(xin)) fail(ErrorCode::domain, "descent requires a positive tuple");
  if (!is_solution(p, xin)) fail(ErrorCode::invalid_state, "descent input is not a solution: " + xin.str());
  DescentPath path;
  path.start = xin;
  Tuple t = order_tuple(xin);
  const int n = p.n;
  while (true) {
    if (is_fundamental_exceptional(p, t))
      fail(ErrorCode::exceptional, "exceptional solution reached during descent: " + t.str());
    if (!outside_K0(p, t)) break;
    Tuple y = order_tuple(move_unchecked(p, t, n - 1));
    if (!all_positive(y) || !(y.max() < t.max()))
      fail(ErrorCode::invariant, "descent step from " + t.str() + " does not strictly decrease the maximum");
    path.steps.push_back({n, y});
    t = std::move(y);
  }
  const K0Data& d = k0_data(p);
  const auto it = d.exceptional.find(t);
  if (it == d.exceptional.end())
    fail(ErrorCode::invariant, "descent terminal " + t.str() + " not found in the K0 box");
  if (it->second) fail(ErrorCode::exceptional, "descent terminal " + t.str() + " lies in an exceptional orbit");
  path.terminal = t;
  return path;
}

bool is_exceptional(const Params& p, const Tuple& xin) {
  check_length(p, xin);
  if (!all_positive(xin)) fail(ErrorCode::domain, "is_exceptional requires a positive tuple");
  if (!is_solution(p, xin)) fail(ErrorCode::invalid_state, "not a solution: " + xin.str());
  const K0Data& d = k0_data(p);
  Tuple t = order_tuple(xin);
  const int n = p.n;
  while (true) {
    if (is_fundamental_exceptional(p, t)) return true;
    if (t.max() <= d.radius) {
      const auto it = d.exceptional.find(t);
      if (it == d.exceptional.end()) fail(ErrorCode::invariant, "solution " + t.str() + " missing from the K0 box");
      return it->second;
    }
    Tuple y = order_tuple(move_unchecked(p, t, n - 1));
    if (!all_positive(y) || !(y.max() < t.max()))
      fail(ErrorCode::invariant, "descent stalled outside K0 at non-fundamental tuple " + t.str());
    t = std::move(y);
  }
}

const char* to_string(SignClass c) {
  switch (c) {
    case SignClass::all_positive: return "all-positive";
    case SignClass::mixed: return "mixed";
    case SignClass::has_zero: return "has-zero";
  }
  return "?";
}

SignReduced sign_orbit_reduce(const Params& p, const Tuple& x) {
  check_length(p, x);
  if (!is_solution(p, x)) fail(ErrorCode::invalid_state, "sign reduction of a non-solution " + x.str());
  Tuple rep(x.x, false);
  int negatives = 0;
  bool zero = false;
  for (auto& v : rep.x) {
    if (sgn(v) == 0) zero = true;
    if (sgn(v) < 0) {
      ++negatives;
      v = -v;
    }
  }
  if (zero) return {rep, SignClass::has_zero};
  if (negatives % 2 == 0) return {rep, SignClass::all_positive};
  rep.x[0] = -rep.x[0];
  return {rep, SignClass::mixed};
}

bool is_exceptional_signed(const Params& p, const Tuple& x) {
  const SignReduced r = sign_orbit_reduce(p, x);
  if (r.cls == SignClass::has_zero) {
    int zeros = 0, at = -1;
    for (int i = 0; i < p.n; ++i)
      if (sgn(x.x[i]) == 0) {
        ++zeros;
        at = i;
      }
    // With two or more zeros every move only flips a sign, so the orbit never
    // reaches a positive tuple and in particular no exceptional family.
    if (zeros >= 2) return false;
    return is_exceptional_signed(p, move_unchecked(p, x, at));
  }
  if (r.cls == SignClass::all_positive) return is_exceptional(p, r.rep);
  // x_1 < 0: the move at the negative coordinate lands on a positive tuple.
  return is_exceptional(p, move_unchecked(p, r.rep, 0));
}

std::vector<Tuple> ordered_solutions_upto(const Params& p, const BigInt& Rbig) {
  p.validate();
  std::vector<Tuple> out;
  if (sgn(Rbig) <= 0) return out;
  if (Rbig > BigInt(1000000000UL))
    fail(ErrorCode::capacity, "exhaustive search radius " + mhs::to_string(Rbig) + " exceeds 1e9");
  const i128 R = static_cast<i128>(Rbig.get_ui());
  const int n = p.n;
  const i128 a = p.a, k = p.k;
  const i128 qmax = 2 * (n - 1) + 2 * (k < 0 ? -k : k);
  std::vector<i128> xs(n - 1, 0);

  // prefix products: prod of x_1..x_m and of x_1..x_min(m, n-2)
  std::function<void(int, i128, i128, i128)> rec = [&](int m, i128 prod, i128 prodq, i128 sumsq) {
    if (m == n - 1) {
      if (prod >= (static_cast<i128>(1) << 62)) return;
      const i128 ap = a * prod;
      const i128 disc = ap * ap - 4 * (sumsq - k);
      if (disc < 0) return;
      const i128 s = isqrt128(disc);
      if (s * s != disc || ((ap + s) & 1) != 0) return;
      const i128 roots[2] = {(ap - s) / 2, (ap + s) / 2};
      for (int r = 0; r < 2; ++r) {
        if (r == 1 && s == 0) break;
        const i128 xn = roots[r];
        if (xn < xs[n - 2] || xn > R || xn < 1) continue;
        Tuple t;
        t.ordered = true;
        for (int i = 0; i < n - 1; ++i) t.x.push_back(from_i128(xs[i]));
        t.x.push_back(from_i128(xn));
        out.push_back(std::move(t));
      }
      return;
    }
    const i128 lo = m == 0 ? 1 : xs[m - 1];
    for (i128 v = lo; v <= R; ++v) {
      // lower bounds for the completed products, all later coordinates >= v
      i128 plb = sat_mul(prod, v);
      for (int r = m + 1; r < n - 1; ++r) plb = sat_mul(plb, v);
      i128 qlb;
      if (m <= n - 3) {
        qlb = sat_mul(prodq, v);
        for (int r = m + 1; r <= n - 3; ++r) qlb = sat_mul(qlb, v);
      } else {
        qlb = prodq;
      }
      if (sat_mul(a, plb) > 2 * R && sat_mul(a, qlb) > qmax) break;
      xs[m] = v;
      rec(m + 1, sat_mul(prod, v), m <= n - 3 ? sat_mul(prodq, v) : prodq, sumsq + v * v);
    }
  };
  rec(0, 1, 1, 0);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

BigInt ordering_multiplicity(const Tuple& xin) {
  Tuple x = order_tuple(xin);
  BigInt num;
  mpz_fac_ui(num.get_mpz_t(), x.size());
  size_t i = 0;
  while (i < x.size()) {
    size_t j = i;
    while (j < x.size() && x.x[j] == x.x[i]) ++j;
    BigInt f;
    mpz_fac_ui(f.get_mpz_t(), j - i);
    num /= f;
    i = j;
  }
  return num;
}

}  // namespace mhs::core
