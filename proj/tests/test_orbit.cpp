// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "orbit_enum.hpp"

#include <cmath>
#include <random>
#include <set>

using namespace mhs;
using namespace mhs::orbit;

namespace {
Params P(int n, long a, long k) { return Params{n, a, k}; }

std::vector<Tuple> ball(const Params& p, long R, EnumOptions opt = {}) {
  std::vector<Tuple> out;
  enumerate_ball(p, find_roots(p).roots, BigInt(R), opt, [&](const OrbitNode& n) { out.push_back(*n.tuple); });
  return out;
}
}  // namespace

TEST_CASE("forward moves") {
  const auto p = P(3, 3, 0);
  OrbitNode n;
  n.tuple = Tuple::of({1, 2, 5});
  std::set<Tuple> kids;
  for (auto& c : forward_moves(p, n)) kids.insert(*c.tuple);
  CHECK(kids == std::set<Tuple>{Tuple::of({1, 5, 13}), Tuple::of({2, 5, 29})});
  n.tuple = Tuple::of({1, 1, 2});
  auto c2 = forward_moves(p, n);
  REQUIRE(c2.size() == 1);
  CHECK(*c2[0].tuple == Tuple::of({1, 2, 5}));
  const auto q = P(4, 4, 0);
  n.tuple = Tuple::of({1, 1, 3, 11});
  for (auto& c : forward_moves(q, n)) {
    CHECK(core::is_solution(q, *c.tuple));
    CHECK(c.tuple->max() > 11);
  }
}

TEST_CASE("Markoff ball of radius 100") {
  const auto got = ball(P(3, 3, 0), 100);
  const std::set<Tuple> want{Tuple::of({1, 1, 1}),  Tuple::of({1, 1, 2}),  Tuple::of({1, 2, 5}),
                             Tuple::of({1, 5, 13}), Tuple::of({2, 5, 29}), Tuple::of({1, 13, 34}),
                             Tuple::of({1, 34, 89})};
  CHECK(got.size() == 7);
  CHECK(std::set<Tuple>(got.begin(), got.end()) == want);
  CHECK(ball(P(3, 3, 0), 0).empty());
}

TEST_CASE("roots") {
  const auto r = find_roots(P(3, 3, 0));
  REQUIRE(r.roots.size() == 1);
  CHECK(r.roots[0] == Tuple::of({1, 1, 1}));
  for (int n = 3; n <= 5; ++n) {
    const auto rr = find_roots(P(n, n, 0));
    std::vector<BigInt> ones(n, BigInt(1));
    CHECK(std::find(rr.roots.begin(), rr.roots.end(), Tuple(ones, true)) != rr.roots.end());
  }
  CHECK(find_roots(P(3, 1, 0)).roots == std::vector<Tuple>{Tuple::of({3, 3, 3})});
  CHECK(find_roots(P(3, 1, 6)).roots.empty());
}

TEST_CASE("box oracle examples") {
  CHECK(box_oracle(P(3, 3, 0), BigInt(2)) == std::vector<Tuple>{Tuple::of({1, 1, 1}), Tuple::of({1, 1, 2})});
  for (const auto& t : box_oracle(P(3, 1, 6), BigInt(5))) CHECK(core::is_solution(P(3, 1, 6), t));
  CHECK(box_oracle(P(4, 4, 0), BigInt(3)) == std::vector<Tuple>{Tuple::of({1, 1, 1, 1}), Tuple::of({1, 1, 1, 3})});
}

TEST_CASE("oracle equivalence on the test matrix") {
  for (auto [p, R] : std::vector<std::pair<Params, long>>{
           {P(3, 3, 0), 200}, {P(3, 1, 6), 200}, {P(4, 4, 0), 60}, {P(4, 1, 7), 60}, {P(4, 2, 3), 60}}) {
    const auto got = ball(p, R);
    std::set<Tuple> gs(got.begin(), got.end());
    CHECK(gs.size() == got.size());
    std::set<Tuple> want;
    for (const auto& t : box_oracle(p, BigInt(R)))
      if (!core::is_exceptional(p, t)) want.insert(t);
    CHECK(gs == want);
    for (long r : {0L, 1L, 2L, 5L, 13L, 29L})
      CHECK(count_integer_ball(p, BigInt(r)).total == signed_box_count(p, r));
  }
}

TEST_CASE("integer ball example") {
  CHECK(count_integer_ball(P(3, 3, 0), BigInt(2)).total == 16);
  CHECK(count_integer_ball(P(3, 3, 0), BigInt(29)).total == signed_box_count(P(3, 3, 0), 29));
  CHECK(count_integer_ball(P(3, 1, 5), BigInt(0)).total == 0);
  CHECK(count_integer_ball(P(3, 1, 5), BigInt(0)).total == count_integer_ball(P(3, 1, 5), BigInt(0)).zero_points);
}

TEST_CASE("free orbit has no duplicates to depth 20") {
  const auto r3 = check_free_orbit(P(3, 3, 0), Tuple::of({1, 2, 5}), 20, 5'000'000);
  CHECK(r3.depth == 20);
  CHECK(r3.nodes == (1ULL << 21) - 1);
  CHECK(r3.duplicates == 0);
  CHECK(r3.growth_ok);
  const auto r4 = check_free_orbit(P(4, 4, 0), Tuple::of({1, 3, 11, 131}), 13, 5'000'000);
  CHECK(r4.duplicates == 0);
  CHECK(r4.growth_ok);
  EnumOptions opt;
  opt.check_freeness = true;
  CHECK_NOTHROW(ball(P(4, 4, 0), 1000000, opt));
}

TEST_CASE("log-space advance tracks exact moves") {
  const auto p = P(4, 4, 0);
  Tuple x = Tuple::of({1, 1, 3, 11});
  std::mt19937_64 rng(7);
  while (true) {
    auto ln = to_log(p, x);
    if (ln && log_alpha_lower(*ln, p.n) > 10) break;
    x = core::order_tuple(core::move_unchecked(p, x, 0));
  }
  auto node = *to_log(p, x);
  for (int step = 0; step < 30; ++step) {
    const int j = 1 + static_cast<int>(rng() % (p.n - 1));
    auto adv = log_space_advance(p, node, j);
    REQUIRE(adv);
    CHECK(adv->error_bound() >= node.error_bound());
    x = core::order_tuple(core::move_unchecked(p, x, j - 1));
    const double la = std::log(4.0) / 2;
    for (int i = 0; i < p.n; ++i) {
      const double exact = log_big(x.x[i]) + la;
      CHECK(std::fabs(adv->l[i] - exact) <= adv->e[i]);
      if (i == p.n - 1) CHECK(adv->l[i] >= exact - 1e-9);  // sandwich lower side
    }
    node = *adv;
  }
  LogNode small;
  small.l = {0.1, 0.1, 0.2, 0.4};
  small.e = {0, 0, 0, 0};
  CHECK_FALSE(log_space_advance(p, small, 1));
}

TEST_CASE("hybrid and exact counts agree") {
  const auto p = P(3, 3, 0);
  const auto th = log_thresholds(5.0, 60.0, 12);
  CountOptions exact_opt;
  exact_opt.allow_log = false;
  const auto a = count_series(p, th, exact_opt);
  const auto b = count_series(p, th, CountOptions{});
  REQUIRE(a.rows.size() == b.rows.size());
  for (size_t i = 0; i < a.rows.size(); ++i) {
    if (a.rows[i].exact && b.rows[i].exact) CHECK(a.rows[i].count == b.rows[i].count);
    if (i) CHECK(a.rows[i].count >= a.rows[i - 1].count);
  }
  // integer thresholds against the enumerator
  const auto c = count_series(p, integer_thresholds(BigInt(100), 5), CountOptions{});
  CHECK(c.rows.back().count == 7);
}

TEST_CASE("growth fit") {
  std::vector<CountRow> rows;
  for (int i = 1; i <= 10; ++i) {
    CountRow r;
    r.log_R = std::exp(static_cast<double>(i));
    r.count = static_cast<unsigned long long>(7.0 * r.log_R * r.log_R + 0.5);
    rows.push_back(r);
  }
  // counts are rounded to integers; the residual bound reflects that
  const auto f = fit_growth_exponent(rows, 1.0);
  CHECK(std::fabs(f.beta_hat - 2.0) < 1e-2);
  std::vector<CountRow> two(rows.begin(), rows.begin() + 2);
  CHECK_THROWS_AS(fit_growth_exponent(two, 1.0), Error);
}

TEST_CASE("counts CSV round trip") {
  const auto s = count_series(P(3, 3, 0), log_thresholds(1.0, 20.0, 5), CountOptions{});
  const auto csv = counts_csv(s);
  CHECK(csv.rfind("logR,R,count,exact_flag\n", 0) == 0);
  const auto rows = parse_counts_csv(csv);
  REQUIRE(rows.size() == s.rows.size());
  for (size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].count == s.rows[i].count);

  const auto t = count_series(P(3, 3, 0), integer_thresholds(BigInt(100), 6), CountOptions{});
  const auto back = parse_counts_csv(counts_csv(t));
  REQUIRE(back.size() == t.rows.size());
  for (size_t i = 0; i < back.size(); ++i) {
    REQUIRE(back[i].R_exact.has_value());
    CHECK(*back[i].R_exact == *t.rows[i].R_exact);
    CHECK(back[i].count == t.rows[i].count);
  }
  CHECK(*back.back().R_exact == 100);
  CHECK_THROWS_AS(parse_counts_csv("logR,count\n"), Error);
}
