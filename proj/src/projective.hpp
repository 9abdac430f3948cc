// SPDX-License-Identifier: Apache-2.0
//
// The linear semigroup acting on the hyperplane y_1 + ... + y_{n-1} = y_n and
// its projectivization onto the ordered simplex Delta, in the free
// coordinates w_1..w_{n-2} (w_{n-1} = 1 - sum).  Exact action formulas,
// analytic total derivatives, region classification, the contraction audit,
// fixed points and limit-set sampling.

#pragma once

#include "common.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mhs::proj {

using Vec = std::vector<double>;

// Small dense row-major matrix.
struct Mat {
  int rows = 0, cols = 0;
  std::vector<double> a;
  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}
  static Mat identity(int m);
  double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }
};
Mat operator*(const Mat& x, const Mat& y);
double one_norm(const Mat& m);  // maximum absolute column sum
double determinant(Mat m);

// Deterministic, platform-independent pseudo random numbers.
struct SplitMix {
  uint64_t state;
  explicit SplitMix(uint64_t seed) : state(seed) {}
  uint64_t next();
  double uniform();  // [0, 1)
};

// An accelerated generator gamma_{n-1}^A gamma_j (1 <= j <= n-2).
struct Gen {
  int A = 0;
  int j = 1;
};

double beta_of(const Vec& w);  // w_1 + ... + w_{n-2}
Vec full_coords(const Vec& w);  // append w_{n-1} = 1 - beta

bool in_delta(int n, const Vec& w, double tol = 1e-12);
bool in_delta0(int n, const Vec& w, double tol = 1e-12);

// gamma_j on a nonnegative ordered n-vector: drop y_j, append the sum of the
// others (1-based j in 1..n-1).
Vec gamma_act_h(int j, const Vec& y);
// A single generator gamma_i (1 <= i <= n-1) on free coordinates.
Vec gamma_act(int n, int i, const Vec& w);
// Accelerated generator on free coordinates; w must lie in Delta.
Vec accel_act(int n, const Gen& g, const Vec& w);
// Apply gens[0] o gens[1] o ... o gens[m-1] (the last entry acts first).
Vec apply_word(int n, const std::vector<Gen>& gens, const Vec& w);

// Growth of the last homogeneous coordinate: 1 + (A+1)(1 - w_j).
double weight(const Gen& g, const Vec& w);
// |Jac| of the accelerated generator: weight^{-(n-1)}.
double jacobian_det(int n, const Gen& g, const Vec& w);
// Product of Jacobians along a word (chain rule).
double jacobian_det(int n, const std::vector<Gen>& gens, const Vec& w);

// Analytic derivative of one generator gamma_i (1 <= i <= n-1).
Mat generator_derivative(int n, int i, const Vec& w);
// Derivative of the word gamma_{i_1} o ... o gamma_{i_m} (last letter first).
Mat total_derivative(int n, const std::vector<int>& word, const Vec& w);
// Letters of an accelerated generator: [n-1 repeated A times, j].
std::vector<int> letters(int n, const Gen& g);
std::vector<int> letters(int n, const std::vector<Gen>& gens);

enum class Region { core, cusp, boundary };
const char* to_string(Region r);
Region classify_region(int n, const Vec& w, double tol = 1e-12);

// Uniform sample of the ordered simplex Delta.
Vec sample_delta(int n, SplitMix& rng);
enum class SampleRegion { delta, delta0, core, cusp };
// Rejection sampling into the requested region (boundary ties rejected).
Vec sample_region(int n, SampleRegion where, SplitMix& rng);

// Fixed point of the accelerated generator (A, n-2), and the closed form of
// its weight (A + 1 + sqrt((A+1)^2 + 4)) / 2.
Vec fixed_point(int n, int A);
double fixed_point_weight(int A);

Vec barycenter(int n);

// Contraction audit -------------------------------------------------------

struct RegionCheck {
  std::string region;  // "core", "cusp" or "delta0"
  double ceiling = 0.0;
  double max_norm = 0.0;         // largest observed 1-norm
  double max_closed_form = 0.0;  // largest observed value of the closed-form bound
  unsigned long long samples = 0;
  unsigned long long violations = 0;
  std::string witness;  // first violating point, if any
};

struct InequalityCheck {
  std::string name;   // word shape, e.g. "g_{n-1} g_i (i <= n-3)"
  bool applicable = true;
  std::vector<RegionCheck> regions;
};

struct CompositeCheck {
  double bound = 24.0 / 25.0;
  double max_norm = 0.0;
  unsigned long long samples = 0;
  unsigned long long violations = 0;
  std::string witness;
};

struct AuditReport {
  int n = 0;
  unsigned long long samples = 0;
  uint64_t seed = 0;
  int A_cap = 64;
  double margin = 1e-12;
  std::vector<InequalityCheck> inequalities;
  CompositeCheck composite;
  double rho = 0.0;         // empirical contraction per letter (24/25)^{1/4}
  double l2_factor = 0.0;   // sqrt(n-2) norm-equivalence factor
  bool passed() const;
};

AuditReport contraction_audit(int n, unsigned long long samples, uint64_t seed,
                              unsigned long long composite_samples = 10000, int A_cap = 64, int threads = 1);
std::string audit_json(const AuditReport& r);

// Limit set ---------------------------------------------------------------

struct LimitOptions {
  int depth = 10;
  unsigned long long count = 10000;  // random mode only
  uint64_t seed = 1;
  int A_cap = 64;
  bool exhaustive = false;  // all words with A <= A_cap
  unsigned long long max_points = 2'000'000'000ULL;
  Vec base;  // empty: barycenter of Delta
};

// Points gamma^(1) ... gamma^(depth) . w0.  With a callback the points are
// streamed instead of stored.
std::vector<Vec> limit_set_sample(int n, const LimitOptions& opt);
void limit_set_visit(int n, const LimitOptions& opt, const std::function<void(const Vec&)>& sink);

// Density raster over the last two free coordinates (w_{n-3}, w_{n-2}); for
// n = 3 a single row over w_1.
struct Raster {
  int width = 0, height = 0;
  double x_max = 0.0, y_max = 0.0;
  std::vector<unsigned long long> cells;
  void add(int n, const Vec& w);
  size_t occupied() const;
};
Raster make_raster(int n, int grid);
std::string raster_pgm(const Raster& r);

}  // namespace mhs::proj
