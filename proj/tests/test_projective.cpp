// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "mh_core.hpp"
#include "orbit_enum.hpp"
#include "projective.hpp"

#include <cmath>

using namespace mhs;
using namespace mhs::proj;

namespace {
double dist(const Vec& a, const Vec& b) {
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

// Central differences of a map on free coordinates.
Mat fd_jacobian(int n, const std::vector<int>& word, const Vec& w, double h) {
  auto f = [&](const Vec& x) {
    Vec y = x;
    for (auto it = word.rbegin(); it != word.rend(); ++it) y = gamma_act(n, *it, y);
    return y;
  };
  Mat d(n - 2, n - 2);
  for (int l = 0; l < n - 2; ++l) {
    Vec p = w, m = w;
    p[l] += h;
    m[l] -= h;
    const Vec fp = f(p), fm = f(m);
    for (int k = 0; k < n - 2; ++k) d(k, l) = (fp[k] - fm[k]) / (2 * h);
  }
  return d;
}
}  // namespace

TEST_CASE("generator action on the hyperplane") {
  CHECK(gamma_act_h(1, {0, 1, 1}) == Vec{1, 1, 2});
  CHECK(gamma_act_h(2, {0, 1, 1}) == Vec{0, 1, 1});
  CHECK(gamma_act_h(3, {0, 0, 1, 1}) == Vec{0, 0, 1, 1});
}

TEST_CASE("accelerated action") {
  // n = 3: w = (0) is the x-chart point x = 0; the branch 1/(x+1) gives x' = 1
  const Vec w1 = accel_act(3, Gen{0, 1}, Vec{0.0});
  CHECK(w1[0] == doctest::Approx(0.5));
  CHECK(w1[0] / (1 - w1[0]) == doctest::Approx(1.0));
  // n = 3, A = 0: fixed point x* = (sqrt5 - 1)/2 in the x-chart
  const Vec fp = fixed_point(3, 0);
  CHECK(fp[0] / (1 - fp[0]) == doctest::Approx((std::sqrt(5.0) - 1) / 2).epsilon(1e-12));
  CHECK(dist(accel_act(3, Gen{0, 1}, fp), fp) < 1e-14);
  // n = 4, w = (1/6, 1/3), (A=1, j=1): (w_2, w_3) / (1 + 2 * 5/6) = (1/8, 3/16)
  const Vec w4 = accel_act(4, Gen{1, 1}, Vec{1.0 / 6, 1.0 / 3});
  CHECK(w4[0] == doctest::Approx(1.0 / 8).epsilon(1e-14));
  CHECK(w4[1] == doctest::Approx(3.0 / 16).epsilon(1e-14));
  CHECK(classify_region(4, w4) == Region::cusp);
  CHECK_THROWS_AS(accel_act(4, Gen{0, 1}, Vec{0.4, 0.3}), Error);
}

TEST_CASE("weights and Jacobians") {
  CHECK(weight(Gen{0, 1}, Vec{0.0}) == 2.0);
  CHECK(weight(Gen{1, 1}, Vec{0.5}) == 2.0);
  CHECK(weight(Gen{0, 1}, fixed_point(3, 0)) == doctest::Approx((1 + std::sqrt(5.0)) / 2).epsilon(1e-14));
  CHECK(jacobian_det(3, Gen{0, 1}, Vec{0.0}) == 0.25);
  CHECK(jacobian_det(4, std::vector<Gen>{}, Vec{0.1, 0.3}) == 1.0);
  for (int A = 0; A <= 10; ++A)
    for (int n = 3; n <= 6; ++n) {
      const Vec f = fixed_point(n, A);
      CHECK(dist(accel_act(n, Gen{A, n - 2}, f), f) < 1e-13);
      CHECK(std::fabs(weight(Gen{A, n - 2}, f) - fixed_point_weight(A)) < 1e-9);
    }
}

TEST_CASE("derivative examples") {
  // gamma_2 for n = 3 at w_1 = 0: (1 + 2b - 2w_1) / (1 + b)^2 = 1
  const Mat d = generator_derivative(3, 2, Vec{0.0});
  CHECK(d(0, 0) == doctest::Approx(1.0));
  CHECK(one_norm(generator_derivative(4, 3, Vec{0.0, 0.0})) == doctest::Approx(1.0));
}

TEST_CASE("property: analytic derivatives, chain rule, Jacobian identity, weight bound") {
  SplitMix rng(2024);
  for (int n = 3; n <= 6; ++n) {
    for (int t = 0; t < 100; ++t) {
      const Vec w = sample_region(n, SampleRegion::delta, rng);
      // single generators and random short words against central differences
      std::vector<int> word;
      const int len = 1 + static_cast<int>(rng.next() % 4);
      for (int k = 0; k < len; ++k) word.push_back(1 + static_cast<int>(rng.next() % (n - 1)));
      const Mat an = total_derivative(n, word, w);
      const Mat fd = fd_jacobian(n, word, w, 1e-6);
      double err = 0;
      for (size_t k = 0; k < an.a.size(); ++k) err = std::max(err, std::fabs(an.a[k] - fd.a[k]));
      CHECK(err <= 1e-5);
      // chain rule
      const int a = 1 + static_cast<int>(rng.next() % (n - 1)), b = 1 + static_cast<int>(rng.next() % (n - 1));
      const Mat lhs = total_derivative(n, {a, b}, w);
      const Mat rhs = generator_derivative(n, a, gamma_act(n, b, w)) * generator_derivative(n, b, w);
      for (size_t k = 0; k < lhs.a.size(); ++k) CHECK(std::fabs(lhs.a[k] - rhs.a[k]) <= 1e-12);
      // accelerated generators: |det| * weight^{n-1} = 1 and weight >= 3/2
      const Gen g{static_cast<int>(rng.next() % 20), 1 + static_cast<int>(rng.next() % (n - 2))};
      const double det = std::fabs(determinant(total_derivative(n, letters(n, g), w)));
      CHECK(std::fabs(det * std::pow(weight(g, w), n - 1) - 1.0) <= 1e-9);
      CHECK(std::fabs(det - jacobian_det(n, g, w)) <= 1e-9);
      CHECK(weight(g, w) >= 1.5);
    }
  }
}

TEST_CASE("region classification") {
  CHECK(classify_region(4, Vec{0.25, 0.25}) == Region::core);
  CHECK(classify_region(4, Vec{0.0, 0.0}) == Region::cusp);
  CHECK(classify_region(3, Vec{1.0 / 3}) == Region::boundary);
  CHECK_THROWS_AS(classify_region(4, Vec{0.3, 0.3}), Error);
  SplitMix rng(99);
  for (int n = 3; n <= 6; ++n)
    for (int t = 0; t < 500; ++t) {
      const Vec w = sample_region(n, SampleRegion::delta, rng);
      const int j = 1 + static_cast<int>(rng.next() % (n - 2));
      CHECK(classify_region(n, accel_act(n, Gen{0, j}, w), 1e-12) != Region::cusp);
      CHECK(classify_region(n, accel_act(n, Gen{1 + static_cast<int>(rng.next() % 10), j}, w), 1e-12) != Region::core);
    }
}

TEST_CASE("contraction audit (reduced sample count)") {
  for (int n = 3; n <= 6; ++n) {
    const auto rep = contraction_audit(n, 2000, 7, 2000);
    CHECK(rep.passed());
    CHECK(rep.inequalities.size() == 10);
  }
  const auto r4 = contraction_audit(4, 100, 1, 10);
  // norm of d gamma_{n-1} reaches 1 at w = 0
  CHECK(one_norm(generator_derivative(4, 3, Vec{0.0, 0.0})) <= 1.0 + 1e-12);
  CHECK(audit_json(r4).find("\"passed\": true") != std::string::npos);
}

TEST_CASE("limit set") {
  LimitOptions opt;
  opt.depth = 0;
  CHECK(limit_set_sample(4, opt).size() == 1);
  opt.depth = 8;
  opt.count = 500;
  for (const auto& w : limit_set_sample(5, opt)) CHECK(in_delta0(5, w, 1e-12));
  // different base points converge along the same word
  std::vector<Gen> word;
  SplitMix rng(5);
  for (int k = 0; k < 30; ++k) word.push_back(Gen{static_cast<int>(rng.next() % 4), 1 + static_cast<int>(rng.next() % 2)});
  CHECK(dist(apply_word(4, word, barycenter(4)), apply_word(4, word, Vec{0.0, 0.0})) < 1e-6);
  // exhaustive raster is deterministic and has empty cells
  LimitOptions ex;
  ex.depth = 5;
  ex.A_cap = 3;
  ex.exhaustive = true;
  Raster r1 = make_raster(4, 64), r2 = make_raster(4, 64);
  limit_set_visit(4, ex, [&](const Vec& w) { r1.add(4, w); });
  ex.seed = 99;
  limit_set_visit(4, ex, [&](const Vec& w) { r2.add(4, w); });
  CHECK(raster_pgm(r1) == raster_pgm(r2));
  CHECK(r1.occupied() > 0);
  CHECK(r1.occupied() < r1.cells.size());
  LimitOptions z;
  z.depth = 0;
  Raster r0 = make_raster(4, 32);
  limit_set_visit(4, z, [&](const Vec& w) { r0.add(4, w); });
  CHECK(r0.occupied() == 1);
}

TEST_CASE("log projection follows the accelerated action") {
  // deep exact tuples of (4,4,0): the simplex projection of f(z) moves like
  // the projective generator up to the sandwich error
  const core::Params p{4, 4, 0};
  core::Tuple x = core::Tuple::of({1, 3, 11, 131});
  for (int k = 0; k < 30; ++k) x = core::order_tuple(core::move_unchecked(p, x, k % 2));
  auto ln = orbit::to_log(p, x);
  REQUIRE(ln);
  REQUIRE(orbit::log_alpha_lower(*ln, 4) > 30);
  auto project = [](const std::vector<double>& l) { return Vec{l[0] / l[3], l[1] / l[3]}; };
  const Vec w = project(ln->l);
  // lambda_3^A lambda_j on the exact tuple against gamma_3^A gamma_j on w
  for (int j = 1; j <= 2; ++j)
    for (int A = 0; A <= 3; ++A) {
      core::Tuple y = core::order_tuple(core::move_unchecked(p, x, j - 1));
      for (int a = 0; a < A; ++a) y = core::order_tuple(core::move_unchecked(p, y, 2));
      const double la = std::log(4.0) / 2;
      std::vector<double> l;
      double s = 0;
      for (int i = 0; i < 3; ++i) {
        l.push_back(log_big(y.x[i]) + la);
        s += l.back();
      }
      l.push_back(s);
      CHECK(dist(project(l), accel_act(4, Gen{A, j}, w)) < 1e-9);
    }
}
