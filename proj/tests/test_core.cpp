// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "mh_core.hpp"
#include "orbit_enum.hpp"

#include <random>

using namespace mhs;
using namespace mhs::core;

namespace {
Params P(int n, long a, long k) { return Params{n, a, k}; }
}  // namespace

TEST_CASE("residual of small tuples") {
  CHECK(eval_residual(P(3, 3, 0), Tuple::of({1, 1, 1})) == 0);
  CHECK(eval_residual(P(3, 3, 0), Tuple::of({1, 1, 3})) == 2);
  CHECK(eval_residual(P(4, 4, 0), Tuple::of({1, 1, 1, 1})) == 0);
  CHECK_THROWS_AS(eval_residual(P(3, 3, 0), Tuple::of({1, 1})), Error);
  try {
    eval_residual(P(3, 3, 0), Tuple::of({1, 1}));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::dimension);
  }
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(P(2, 1, 0).validate(), Error);
  CHECK_THROWS_AS(P(3, 0, 0).validate(), Error);
  CHECK_NOTHROW(P(3, 1, -5).validate());
}

TEST_CASE("moves") {
  const auto p = P(3, 3, 0);
  CHECK(apply_move(p, Tuple::of({1, 1, 1}), 2) == Tuple::of({1, 1, 2}));
  CHECK(apply_move(p, Tuple::of({1, 1, 2}), 1) == Tuple::of({1, 5, 2}));
  CHECK(apply_move(p, Tuple::of({2, 5, 29}), 2) == Tuple::of({2, 5, 1}));
  try {
    apply_move(p, Tuple::of({1, 1, 3}), 0);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_state);
  }
}

TEST_CASE("ordering is stable ascending") {
  CHECK(order_tuple(Tuple::of({1, 5, 2})) == Tuple::of({1, 2, 5}));
  CHECK(order_tuple(Tuple::of({1, 1, 1})) == Tuple::of({1, 1, 1}));
  CHECK(order_tuple(Tuple::of({29, 2, 5})) == Tuple::of({2, 5, 29}));
  CHECK(order_tuple(Tuple::of({3, 1})).ordered);
}

TEST_CASE("fundamental exceptional families") {
  CHECK(is_fundamental_exceptional(P(3, 2, 2), Tuple::of({1, 4, 5})));
  CHECK_FALSE(is_fundamental_exceptional(P(3, 3, 0), Tuple::of({1, 2, 5})));
  const auto p = P(4, 1, 6);
  CHECK(eval_residual(p, Tuple::of({1, 2, 3, 4})) == 0);
  CHECK(is_fundamental_exceptional(p, Tuple::of({1, 2, 3, 4})));
  // a = 2, k = n - 2 + m^2: (1,...,1,t,t+m) lies on the surface
  for (int n = 3; n <= 6; ++n)
    for (long m = 0; m <= 4; ++m)
      for (long t = 1; t <= 30; ++t) {
        std::vector<BigInt> v(n - 2, BigInt(1));
        v.emplace_back(t);
        v.emplace_back(t + m);
        CHECK(eval_residual(P(n, 2, n - 2 + m * m), Tuple(v)) == 0);
      }
}

TEST_CASE("outside K0 examples") {
  const auto p = P(3, 3, 0);
  CHECK_FALSE(outside_K0(p, Tuple::of({1, 1, 1})));
  CHECK(outside_K0(p, Tuple::of({2, 5, 29})));
  CHECK_FALSE(outside_K0(p, Tuple::of({1, 2, 5})));
}

TEST_CASE("descent examples") {
  const auto p = P(3, 3, 0);
  const auto path = descend(p, Tuple::of({2, 5, 29}));
  CHECK(path.start == Tuple::of({2, 5, 29}));
  CHECK_FALSE(path.steps.empty());
  // the terminal is reached by the move formula and sits inside K0
  CHECK_FALSE(outside_K0(p, path.terminal));
  Tuple cur = path.start;
  for (const auto& s : path.steps) {
    CHECK(s.result.max() < cur.max());
    cur = s.result;
  }
  CHECK(cur == path.terminal);
  CHECK(path.steps.front().result == Tuple::of({1, 2, 5}));
  CHECK(descend(p, Tuple::of({1, 1, 1})).steps.empty());
  CHECK(descend(P(4, 4, 0), Tuple::of({1, 1, 1, 1})).steps.empty());
}

TEST_CASE("sign orbit reduction") {
  auto r = sign_orbit_reduce(P(3, 3, 0), Tuple::of({-1, -1, 1}));
  CHECK(r.rep == Tuple::of({1, 1, 1}));
  CHECK(r.cls == SignClass::all_positive);
  r = sign_orbit_reduce(P(3, 3, 0), Tuple::of({1, 1, 1}));
  CHECK(r.cls == SignClass::all_positive);
  r = sign_orbit_reduce(P(3, 1, 5), Tuple::of({0, 1, 2}));
  CHECK(r.rep == Tuple::of({0, 1, 2}));
  CHECK(r.cls == SignClass::has_zero);
  CHECK_THROWS_AS(sign_orbit_reduce(P(3, 3, 0), Tuple::of({1, 1, 3})), Error);
}

TEST_CASE("K0 box agrees with the plain box scan") {
  for (auto p : {P(3, 3, 0), P(3, 1, 6), P(4, 4, 0), P(4, 1, 7), P(4, 2, 3)}) {
    const auto& d = k0_data(p);
    if (d.radius <= 200) {
      CHECK(d.box == orbit::box_oracle(p, d.radius));
    } else {
      CHECK(ordered_solutions_upto(p, BigInt(200)) == orbit::box_oracle(p, BigInt(200)));
    }
  }
}

TEST_CASE("property: involution, preservation, descent on random deep points") {
  std::mt19937_64 rng(12345);
  for (auto p : {P(3, 3, 0), P(4, 4, 0), P(3, 1, 0), P(5, 5, 0)}) {
    const auto roots = orbit::find_roots(p).roots;
    REQUIRE_FALSE(roots.empty());
    for (int trial = 0; trial < 250; ++trial) {
      Tuple x = roots[rng() % roots.size()];
      const int cap = p.n == 3 ? 25 : p.n == 4 ? 14 : 10;  // entries grow doubly exponentially
      const int depth = 1 + static_cast<int>(rng() % cap);
      for (int d = 0; d < depth; ++d) {
        int j = static_cast<int>(rng() % (p.n - 1));
        x = order_tuple(move_unchecked(p, x, j));
      }
      REQUIRE(is_solution(p, x));
      for (int j = 0; j < p.n; ++j) {
        const Tuple y = apply_move(p, x, j);
        CHECK(is_solution(p, y));
        CHECK(apply_move(p, y, j) == x);
      }
      const auto path = descend(p, x);
      BigInt prev = x.max();
      for (const auto& s : path.steps) {
        CHECK(s.result.max() < prev);
        prev = s.result.max();
      }
      CHECK_FALSE(outside_K0(p, path.terminal));
    }
  }
}

TEST_CASE("exceptional tuples are detected along their orbits") {
  // a = 2, k = 2: (1, t, t+1) family
  const auto p = P(3, 2, 2);
  CHECK(is_exceptional(p, Tuple::of({1, 1, 2})));
  CHECK(is_exceptional(p, Tuple::of({1, 7, 8})));
  Tuple x = Tuple::of({1, 7, 8});
  x = order_tuple(apply_move(p, x, 1));
  CHECK(is_exceptional(p, x));
  try {
    descend(p, Tuple::of({1, 40, 41}));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::exceptional);
  }
}
