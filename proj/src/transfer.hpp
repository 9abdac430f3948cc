// SPDX-License-Identifier: Apache-2.0
//
// Discretized transfer operator L_s on the ordered simplex, its leading
// eigenpair and dual eigenmeasure, the solve of lambda_s = 1, the Gauss-map
// cross-check for n = 3 and the residual checks of the conformal measure and
// of the eigenfunction recursion.
//
// Discretization.  Every branch image lies in the invariant region
// Delta0 = {w in Delta : w_1 + ... + w_{n-2} <= 1/2}, which is affinely
// equivalent to the Kuhn simplex {0 <= c_1 <= ... <= c_m <= 1}, m = n - 2:
//   c_k = sum_{i <= k} 2 (m - i + 1) (w_i - w_{i-1}),  w_0 = 0.
// The grid is the set of nodes c = i / N with integer 0 <= i_1 <= ... <= i_m
// <= N (N = resolution - 1), and functions are interpolated piecewise
// linearly on the Kuhn triangulation, so every stencil node lies inside the
// region and the interpolant reproduces affine functions of w exactly.

#pragma once

#include "common.hpp"
#include "projective.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mhs::spectral {

using Vec = std::vector<double>;

enum class TailMode { drop, analytic };

struct OperatorConfig {
  int n = 3;
  int grid = 0;   // nodes per axis; 0 selects the default for n
  int A_max = 0;  // explicit branches 0..A_max per j; 0 selects the default
  TailMode tail = TailMode::analytic;
  int threads = 1;
  double tol = 1e-10;         // power iteration: Rayleigh quotient delta
  int max_iterations = 10000;
};

int default_grid(int n);
int default_amax(int n);
// Fill defaults and validate (usage / capacity errors).
OperatorConfig resolve(OperatorConfig cfg);

// Nodes and Kuhn-simplex interpolation on Delta0.
class SimplexGrid {
 public:
  SimplexGrid(int n, int resolution);
  int n() const { return n_; }
  int dim() const { return m_; }
  int intervals() const { return N_; }
  size_t size() const { return nodes_.size() / m_; }
  Vec node(size_t i) const;               // free coordinates w_1..w_{n-2}
  const double* node_ptr(size_t i) const { return &nodes_[i * m_]; }
  Vec to_c(const Vec& w) const;
  Vec from_c(const Vec& c) const;
  // Stencil of dim()+1 node indices and barycentric weights for a point given
  // in c-coordinates; geometry error if the point is outside the region.
  void locate_c(const double* c, int* idx, double* lam) const;
  double interpolate(const Vec& f, const Vec& w) const;
  size_t origin() const { return 0; }  // node w = 0

 private:
  int n_, m_, N_;
  std::vector<double> nodes_;
  std::vector<int> lookup_;  // dense (N+1)^m table, -1 outside the region
  size_t flat(const int* i) const;
};

// Dropped-tail bound: sup|f| * integral_{A_max}^inf (1 + (t+1) c)^{-s} dt,
// c = 1 - w_j.  Dominates sum_{A > A_max} (1 + (A+1) c)^{-s} sup|f|.
double tail_bound(double s, double c, int A_max);

// The operator matrix, assembled once per grid and reweighted per s.
class TransferOperator {
 public:
  explicit TransferOperator(const OperatorConfig& cfg);
  const OperatorConfig& config() const { return cfg_; }
  const SimplexGrid& grid() const { return grid_; }
  size_t size() const { return grid_.size(); }

  void set_s(double s);
  double s() const { return s_; }

  // out = L_s f and out = L_s^T nu on grid samples.
  void apply(const Vec& f, Vec& out) const;
  void apply_transpose(const Vec& nu, Vec& out) const;

  // L_s applied to a function evaluated exactly at branch images (no
  // interpolation); the same branch truncation and tail quadrature.
  Vec apply_exact(const std::function<double(const Vec&)>& f, double s) const;

 private:
  OperatorConfig cfg_;
  SimplexGrid grid_;
  double s_ = 0.0;
  int terms_per_row_ = 0;
  int stencil_ = 0;
  // Per term: kind (0 explicit, 1..3 tail node), and a, b parameters:
  // explicit a = log weight; tail a = c = 1 - w_j, b = U.
  std::vector<unsigned char> kind_;
  std::vector<double> pa_, pb_;
  std::vector<int> idx_;
  std::vector<double> lam_;
  std::vector<double> coef_;
  double multiplier(size_t t, double s) const;
};

struct EigenResult {
  double s = 0.0;
  double lambda = 0.0;
  Vec h;              // max-normalized, positive
  int iterations = 0;
  double residual = 0.0;  // ||L h - lambda h||_inf / ||h||_inf
};

struct MeasureResult {
  double lambda = 0.0;
  Vec nu;             // nonnegative, sums to 1
  int iterations = 0;
  double residual = 0.0;  // ||L^T nu - lambda nu||_1
};

// Power iteration; `start` (if non-empty) is a warm start.
EigenResult leading_eigen(TransferOperator& op, double s, const Vec& start = {});
MeasureResult eigenmeasure(TransferOperator& op, double s, const Vec& start = {});

struct TracePoint {
  double s = 0.0;
  double lambda = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

struct BetaResult {
  double beta = 0.0;
  double lo = 0.0, hi = 0.0;  // bracket with lambda(lo) >= 1 >= lambda(hi)
  std::vector<TracePoint> trace;
  EigenResult eigen;          // at s = beta (not part of the trace)
};

// Bracket and solve lambda_s = 1 on one grid.  `guess`, when given, starts
// from a narrow bracket around it (widened automatically).
BetaResult solve_beta(TransferOperator& op, double tol, std::optional<double> guess = std::nullopt);

// The solve on several resolutions, coarse to fine, each seeding the next.
struct MultiGridBeta {
  std::vector<int> grids;
  std::vector<BetaResult> results;
};
MultiGridBeta solve_beta_grids(OperatorConfig cfg, const std::vector<int>& grids, double tol);

// Conformal-measure residual: max over test functions f of
// |nu(f) - sum_gamma int f(gamma.w) |Jac_w gamma|^{s/(n-1)} dnu(w)|.
struct TestFunction {
  std::string name;
  std::function<double(const Vec&)> f;
};
std::vector<TestFunction> monomials(int n, int degree);
double conformal_residual(const TransferOperator& op, double s, const Vec& nu,
                          const std::vector<TestFunction>& tests);
// ||L^T nu - nu||_1: residual of the conformal equation itself.
double conformal_eigen_residual(TransferOperator& op, double s, const Vec& nu);

// sup over nodes |L_s h - h| / ||h||_inf.
double h_recursion_residual(TransferOperator& op, double s, const Vec& h);

// Gauss cross-check (n = 3): the conjugated operator
// (1+x)^{-s} L_s[(1+x)^s F] evaluated through the simplex chart against the
// direct Gauss operator sum_A (x+A+1)^{-s} F(1/(x+A+1)), both truncated at
// A_max, at `points` equispaced x in [0,1] for F in {1, x, x^2, x^3}.
double gauss_conjugation_check(double s, int points = 64, int A_max = 512);
// Leading eigenvalue of the direct Gauss operator on [0,1] (own grid, linear
// interpolation, own tail quadrature).
double gauss_leading_eigenvalue(double s, int grid = 512, int A_max = 512);
// Relative variation (max - min) / max of h / (1 + x) over the grid nodes for
// an n = 3 eigenfunction, x = w_1 / (1 - w_1).
double gauss_eigenfunction_variation(const SimplexGrid& g, const Vec& h);

// Upper bound on lambda_s from the weight lower bound 1 + (A+1)(1-w_j) >=
// (3+A)/2: lambda_s <= 2^s (n-2) sum_A (3+A)^{-s}.
double lambda_upper_bound(int n, double s);
struct UpperBoundCheck {
  double lambda = 0.0;
  double bound = 0.0;
  bool ok = false;
};
UpperBoundCheck lambda_upper_bound_check(int n, double s, const OperatorConfig& cfg = {});

// Renewal identity for the orbit count N(w, a) = #{gamma in Gamma' u {e} :
// log (gamma.y)_n - log y_n <= a}, each side computed by direct enumeration
// of words: N(w,a) == 1{a >= 0} + sum_{t} N(t.w, a - log (t.y)_n / y_n).
struct RenewalReport {
  int samples = 0;
  int mismatches = 0;
  unsigned long long largest_count = 0;
  std::string witness;
};
unsigned long long count_words(int n, const Vec& y, double a);
RenewalReport renewal_check(int n, int samples, double a_max, uint64_t seed);

std::string spectral_json(const OperatorConfig& cfg, const EigenResult& e, const BetaResult* beta = nullptr);
// Grid samples keyed by node coordinates: "w1,..,w_{n-2},value".
std::string grid_csv(const SimplexGrid& g, const Vec& values, const std::string& column);

}  // namespace mhs::spectral
