// SPDX-License-Identifier: Apache-2.0

#include "transfer.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace mhs::spectral {

namespace {

// Run body(lo, hi) over [0, count) split across threads; exceptions thrown by
// any worker are rethrown in the caller.
void parallel_rows(size_t count, int threads, const std::function<void(size_t, size_t, int)>& body,
                   size_t serial_below = 256) {
  threads = std::max(1, threads);
  if (threads == 1 || count < serial_below) {
    body(0, count, 0);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const size_t chunk = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const size_t lo = t * chunk, hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi, t] {
      try {
        body(lo, hi, t);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Quadrature weights for sum_{A > A_max} u_A^s f(u_A v), u_A = 1/(1+(A+1)c):
// midpoint Euler-Maclaurin turns the sum into (1/c) int_0^U u^{s-2} f(u v) du
// minus (1/24) s c U^{s+1} f(U v), U = u(A_max + 1/2); the integral uses
// product integration with f quadratic through u = 0, U/2, U.
void tail_weights(double s, double c, double U, double W[3]) {
  const double p = std::pow(U, s - 1.0);
  const double I0 = p / (s - 1.0), I1 = p / s, I2 = p / (s + 1.0);
  W[0] = (I0 - 3.0 * I1 + 2.0 * I2) / c;
  W[1] = (4.0 * I1 - 4.0 * I2) / c;
  W[2] = (-I1 + 2.0 * I2) / c - s * c * p * U * U / 24.0;
}

double tail_U(double c, int A_max) { return 1.0 / (1.0 + (A_max + 1.5) * c); }

// v = (w without w_j, 1 - beta): the image of w under the branch (A, j) is
// v / weight.
void branch_vector(int m, const double* w, int j, double* v) {
  double b = 0.0;
  for (int k = 0; k < m; ++k) b += w[k];
  int o = 0;
  for (int k = 0; k < m; ++k)
    if (k != j - 1) v[o++] = w[k];
  v[o] = 1.0 - b;
}

constexpr double kGeomTol = 1e-9;

}  // namespace

int default_grid(int n) {
  switch (n) {
    case 3: return 512;
    case 4: return 192;
    case 5: return 48;
    case 6: return 24;
    default: return 0;
  }
}

int default_amax(int n) { return n == 3 ? 512 : 64; }

OperatorConfig resolve(OperatorConfig cfg) {
  if (cfg.n < 3) fail(ErrorCode::usage, "n must be at least 3");
  if (cfg.n > 6)
    fail(ErrorCode::capacity, "the transfer operator for n = " + std::to_string(cfg.n) +
                                  " needs a grid in " + std::to_string(cfg.n - 2) +
                                  " dimensions; refused as infeasible (n <= 6 supported)");
  if (cfg.grid == 0) cfg.grid = default_grid(cfg.n);
  if (cfg.A_max == 0) cfg.A_max = default_amax(cfg.n);
  if (cfg.grid < 2) fail(ErrorCode::usage, "grid resolution must be at least 2");
  if (cfg.A_max < 1) fail(ErrorCode::usage, "A_max must be at least 1");
  if (cfg.threads < 1) cfg.threads = 1;
  if (!(cfg.tol > 0)) fail(ErrorCode::usage, "tolerance must be positive");
  if (cfg.max_iterations < 1) fail(ErrorCode::usage, "max_iterations must be positive");
  // Memory estimate of the assembled operator.
  const int m = cfg.n - 2;
  double rows = 1.0;
  for (int k = 1; k <= m; ++k) rows = rows * (cfg.grid - 1 + k) / k;
  const double terms = rows * m * (cfg.A_max + 1 + (cfg.tail == TailMode::analytic ? 3 : 0));
  const double bytes = terms * (17.0 + (m + 1) * 20.0);
  const double dense = std::pow(static_cast<double>(cfg.grid), m) * 4.0;
  if (bytes + dense > 3.5e9)
    fail(ErrorCode::capacity, "operator at grid " + std::to_string(cfg.grid) + " and A_max " +
                                  std::to_string(cfg.A_max) + " needs about " +
                                  std::to_string(static_cast<long long>((bytes + dense) / 1e6)) +
                                  " MB; refused as infeasible");
  return cfg;
}

// ------------------------------------------------------------------ grid

SimplexGrid::SimplexGrid(int n, int resolution) : n_(n), m_(n - 2), N_(resolution - 1) {
  if (n < 3) fail(ErrorCode::usage, "n must be at least 3");
  if (resolution < 2) fail(ErrorCode::usage, "grid resolution must be at least 2");
  size_t dense = 1;
  for (int k = 0; k < m_; ++k) dense *= static_cast<size_t>(N_ + 1);
  lookup_.assign(dense, -1);
  std::vector<int> i(m_, 0);
  // Enumerate 0 <= i_1 <= ... <= i_m <= N in lexicographic order.
  int count = 0;
  while (true) {
    lookup_[flat(i.data())] = count++;
    for (int k = 0; k < m_; ++k) nodes_.push_back(0.0);
    Vec c(m_);
    for (int k = 0; k < m_; ++k) c[k] = static_cast<double>(i[k]) / N_;
    const Vec w = from_c(c);
    std::copy(w.begin(), w.end(), nodes_.end() - m_);
    int k = m_ - 1;
    while (k >= 0 && i[k] == N_) --k;
    if (k < 0) break;
    ++i[k];
    for (int q = k + 1; q < m_; ++q) i[q] = i[k];
  }
}

size_t SimplexGrid::flat(const int* i) const {
  size_t f = 0;
  for (int k = 0; k < m_; ++k) f = f * static_cast<size_t>(N_ + 1) + static_cast<size_t>(i[k]);
  return f;
}

Vec SimplexGrid::node(size_t i) const { return Vec(nodes_.begin() + i * m_, nodes_.begin() + (i + 1) * m_); }

Vec SimplexGrid::to_c(const Vec& w) const {
  Vec c(m_);
  double prev_w = 0.0, acc = 0.0;
  for (int k = 0; k < m_; ++k) {
    acc += 2.0 * (m_ - k) * (w[k] - prev_w);
    prev_w = w[k];
    c[k] = acc;
  }
  return c;
}

Vec SimplexGrid::from_c(const Vec& c) const {
  Vec w(m_);
  double prev_c = 0.0, acc = 0.0;
  for (int k = 0; k < m_; ++k) {
    acc += (c[k] - prev_c) / (2.0 * (m_ - k));
    prev_c = c[k];
    w[k] = acc;
  }
  return w;
}

void SimplexGrid::locate_c(const double* c, int* idx, double* lam) const {
  int b[8];
  double f[8];
  int order[8];
  double prev = 0.0;
  for (int k = 0; k < m_; ++k) {
    double ck = c[k];
    if (!(ck >= prev - kGeomTol) || ck > 1.0 + kGeomTol) {
      std::ostringstream os;
      os << "interpolation target outside the grid region (c_" << (k + 1) << " = " << ck << ")";
      fail(ErrorCode::geometry, os.str());
    }
    ck = std::min(1.0, std::max(prev, ck));
    prev = ck;
    const double t = ck * N_;
    int bk = static_cast<int>(std::floor(t));
    bk = std::min(std::max(bk, 0), N_ - 1);
    b[k] = bk;
    f[k] = t - bk;
    order[k] = k;
  }
  // Fractional parts in decreasing order, ties broken by decreasing index so
  // that every vertex of the Kuhn simplex stays ordered.
  std::sort(order, order + m_, [&](int x, int y) { return f[x] != f[y] ? f[x] > f[y] : x > y; });
  idx[0] = lookup_[flat(b)];
  lam[0] = 1.0 - f[order[0]];
  for (int v = 1; v <= m_; ++v) {
    ++b[order[v - 1]];
    idx[v] = lookup_[flat(b)];
    lam[v] = (v < m_ ? f[order[v - 1]] - f[order[v]] : f[order[m_ - 1]]);
  }
  for (int v = 0; v <= m_; ++v)
    if (idx[v] < 0) fail(ErrorCode::invariant, "Kuhn stencil left the grid region");
}

double SimplexGrid::interpolate(const Vec& f, const Vec& w) const {
  const Vec c = to_c(w);
  int idx[9];
  double lam[9];
  locate_c(c.data(), idx, lam);
  double r = 0.0;
  for (int v = 0; v <= m_; ++v) r += lam[v] * f[idx[v]];
  return r;
}

double tail_bound(double s, double c, int A_max) {
  return std::pow(1.0 + (A_max + 1.0) * c, 1.0 - s) / (c * (s - 1.0));
}

// -------------------------------------------------------------- operator

TransferOperator::TransferOperator(const OperatorConfig& cfg) : cfg_(resolve(cfg)), grid_(cfg_.n, cfg_.grid) {
  const int m = grid_.dim();
  const bool tail = cfg_.tail == TailMode::analytic;
  terms_per_row_ = m * (cfg_.A_max + 1 + (tail ? 3 : 0));
  stencil_ = m + 1;
  const size_t rows = grid_.size();
  const size_t terms = rows * static_cast<size_t>(terms_per_row_);
  kind_.assign(terms, 0);
  pa_.assign(terms, 0.0);
  pb_.assign(terms, 0.0);
  idx_.assign(terms * stencil_, 0);
  lam_.assign(terms * stencil_, 0.0);
  parallel_rows(rows, cfg_.threads, [&](size_t lo, size_t hi, int) {
    double v[8], cv[8], pt[8];
    for (size_t r = lo; r < hi; ++r) {
      const double* w = grid_.node_ptr(r);
      size_t t = r * terms_per_row_;
      for (int j = 1; j <= m; ++j) {
        const double c = 1.0 - w[j - 1];
        branch_vector(m, w, j, v);
        const Vec cvv = grid_.to_c(Vec(v, v + m));
        std::copy(cvv.begin(), cvv.end(), cv);
        auto put = [&](unsigned char kind, double u, double a, double b) {
          for (int k = 0; k < m; ++k) pt[k] = u * cv[k];
          kind_[t] = kind;
          pa_[t] = a;
          pb_[t] = b;
          grid_.locate_c(pt, &idx_[t * stencil_], &lam_[t * stencil_]);
          ++t;
        };
        for (int A = 0; A <= cfg_.A_max; ++A) {
          const double wt = 1.0 + (A + 1.0) * c;
          put(0, 1.0 / wt, std::log(wt), 0.0);
        }
        if (tail) {
          const double U = tail_U(c, cfg_.A_max);
          put(1, 0.0, c, U);
          put(2, 0.5 * U, c, U);
          put(3, U, c, U);
        }
      }
    }
  });
  coef_.assign(terms * stencil_, 0.0);
}

double TransferOperator::multiplier(size_t t, double s) const {
  if (kind_[t] == 0) return std::exp(-s * pa_[t]);
  double W[3];
  tail_weights(s, pa_[t], pb_[t], W);
  return W[kind_[t] - 1];
}

void TransferOperator::set_s(double s) {
  if (!(s > 1.0)) fail(ErrorCode::usage, "s must exceed 1");
  if (s == s_) return;
  const size_t rows = grid_.size();
  parallel_rows(rows, cfg_.threads, [&](size_t lo, size_t hi, int) {
    for (size_t t = lo * terms_per_row_; t < hi * terms_per_row_; ++t) {
      const double mu = multiplier(t, s);
      for (int v = 0; v < stencil_; ++v) coef_[t * stencil_ + v] = mu * lam_[t * stencil_ + v];
    }
  });
  s_ = s;
}

void TransferOperator::apply(const Vec& f, Vec& out) const {
  if (s_ == 0.0) fail(ErrorCode::invalid_state, "set_s must be called before apply");
  const size_t rows = grid_.size();
  if (f.size() != rows) fail(ErrorCode::dimension, "grid function has the wrong length");
  out.assign(rows, 0.0);
  const size_t per_row = static_cast<size_t>(terms_per_row_) * stencil_;
  parallel_rows(rows, cfg_.threads, [&](size_t lo, size_t hi, int) {
    for (size_t r = lo; r < hi; ++r) {
      const double* c = &coef_[r * per_row];
      const int* ix = &idx_[r * per_row];
      double acc = 0.0;
      for (size_t e = 0; e < per_row; ++e) acc += c[e] * f[ix[e]];
      out[r] = acc;
    }
  });
}

void TransferOperator::apply_transpose(const Vec& nu, Vec& out) const {
  if (s_ == 0.0) fail(ErrorCode::invalid_state, "set_s must be called before apply");
  const size_t rows = grid_.size();
  if (nu.size() != rows) fail(ErrorCode::dimension, "grid measure has the wrong length");
  const size_t per_row = static_cast<size_t>(terms_per_row_) * stencil_;
  // Scatter into a fixed number of row blocks, reduced in block order, so the
  // floating-point result does not depend on the thread count.
  constexpr size_t blocks = 8;
  const size_t block_rows = (rows + blocks - 1) / blocks;
  std::vector<Vec> partial(blocks, Vec(rows, 0.0));
  const int threads = rows < 256 ? 1 : std::max(1, cfg_.threads);
  parallel_rows(blocks, threads, [&](size_t blo, size_t bhi, int) {
    for (size_t b = blo; b < bhi; ++b) {
      Vec& acc = partial[b];
      for (size_t r = b * block_rows; r < std::min(rows, (b + 1) * block_rows); ++r) {
        const double x = nu[r];
        const double* c = &coef_[r * per_row];
        const int* ix = &idx_[r * per_row];
        for (size_t e = 0; e < per_row; ++e) acc[ix[e]] += c[e] * x;
      }
    }
  }, 1);
  out = std::move(partial[0]);
  for (size_t b = 1; b < blocks; ++b)
    for (size_t i = 0; i < rows; ++i) out[i] += partial[b][i];
}

Vec TransferOperator::apply_exact(const std::function<double(const Vec&)>& f, double s) const {
  const int m = grid_.dim();
  const size_t rows = grid_.size();
  Vec out(rows, 0.0);
  const bool tail = cfg_.tail == TailMode::analytic;
  parallel_rows(rows, cfg_.threads, [&](size_t lo, size_t hi, int) {
    double v[8];
    Vec pt(m);
    for (size_t r = lo; r < hi; ++r) {
      const double* w = grid_.node_ptr(r);
      double acc = 0.0;
      for (int j = 1; j <= m; ++j) {
        const double c = 1.0 - w[j - 1];
        branch_vector(m, w, j, v);
        auto at = [&](double u) {
          for (int k = 0; k < m; ++k) pt[k] = u * v[k];
          return f(pt);
        };
        for (int A = 0; A <= cfg_.A_max; ++A) {
          const double u = 1.0 / (1.0 + (A + 1.0) * c);
          acc += std::pow(u, s) * at(u);
        }
        if (tail) {
          const double U = tail_U(c, cfg_.A_max);
          double W[3];
          tail_weights(s, c, U, W);
          acc += W[0] * at(0.0) + W[1] * at(0.5 * U) + W[2] * at(U);
        }
      }
      out[r] = acc;
    }
  });
  return out;
}

// ------------------------------------------------------------ eigenpairs

EigenResult leading_eigen(TransferOperator& op, double s, const Vec& start) {
  op.set_s(s);
  const auto& cfg = op.config();
  const size_t N = op.size();
  EigenResult res;
  res.s = s;
  Vec h = start.size() == N ? start : Vec(N, 1.0);
  double mx = *std::max_element(h.begin(), h.end());
  if (!(mx > 0)) h.assign(N, 1.0), mx = 1.0;
  for (auto& x : h) x /= mx;
  Vec g;
  double prev = std::nan("");
  bool converged = false;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    op.apply(h, g);
    const double lam = *std::max_element(g.begin(), g.end());
    if (!(lam > 0) || !std::isfinite(lam)) fail(ErrorCode::convergence, "power iteration lost positivity");
    for (size_t i = 0; i < N; ++i) h[i] = g[i] / lam;
    res.iterations = it;
    res.lambda = lam;
    if (std::abs(lam - prev) < cfg.tol) {
      converged = true;
      break;
    }
    prev = lam;
  }
  op.apply(h, g);
  double r = 0.0;
  for (size_t i = 0; i < N; ++i) r = std::max(r, std::abs(g[i] - res.lambda * h[i]));
  res.residual = r;  // ||h||_inf = 1
  if (!converged) {
    std::ostringstream os;
    os << "power iteration did not converge in " << cfg.max_iterations << " iterations (residual " << r << ")";
    fail(ErrorCode::convergence, os.str());
  }
  for (double x : h)
    if (!(x > 0)) fail(ErrorCode::invariant, "eigenfunction is not positive");
  res.h = std::move(h);
  return res;
}

MeasureResult eigenmeasure(TransferOperator& op, double s, const Vec& start) {
  op.set_s(s);
  const auto& cfg = op.config();
  const size_t N = op.size();
  MeasureResult res;
  Vec nu = start.size() == N ? start : Vec(N, 1.0);
  double total = std::accumulate(nu.begin(), nu.end(), 0.0);
  if (!(total > 0)) nu.assign(N, 1.0), total = static_cast<double>(N);
  for (auto& x : nu) x /= total;
  Vec g;
  double prev = std::nan("");
  bool converged = false;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    op.apply_transpose(nu, g);
    const double lam = std::accumulate(g.begin(), g.end(), 0.0);
    if (!(lam > 0) || !std::isfinite(lam)) fail(ErrorCode::convergence, "dual iteration lost positivity");
    for (size_t i = 0; i < N; ++i) nu[i] = g[i] / lam;
    res.iterations = it;
    res.lambda = lam;
    if (std::abs(lam - prev) < cfg.tol) {
      converged = true;
      break;
    }
    prev = lam;
  }
  // Renormalize so that the weights sum to one exactly in floating point
  // order of summation used by callers.
  total = std::accumulate(nu.begin(), nu.end(), 0.0);
  for (auto& x : nu) x /= total;
  op.apply_transpose(nu, g);
  double r = 0.0;
  for (size_t i = 0; i < N; ++i) r += std::abs(g[i] - res.lambda * nu[i]);
  res.residual = r;
  if (!converged) {
    std::ostringstream os;
    os << "dual iteration did not converge in " << cfg.max_iterations << " iterations (residual " << r << ")";
    fail(ErrorCode::convergence, os.str());
  }
  res.nu = std::move(nu);
  return res;
}

// ------------------------------------------------------------ beta solve

BetaResult solve_beta(TransferOperator& op, double tol, std::optional<double> guess) {
  if (!(tol > 0)) fail(ErrorCode::usage, "tolerance must be positive");
  constexpr double lower_limit = 1.1;
  constexpr double upper_limit = 64.0;
  BetaResult res;
  Vec warm;
  auto eval = [&](double s) {
    EigenResult e = leading_eigen(op, s, warm);
    warm = e.h;
    res.trace.push_back({s, e.lambda, e.iterations, e.residual});
    const double g = std::log(e.lambda);
    res.eigen = std::move(e);
    return g;
  };

  double lo = lower_limit, hi = 6.0;
  if (guess) {
    lo = std::max(lower_limit, *guess - 0.02);
    hi = std::max(lo + 0.01, *guess + 0.02);
  }
  double glo = eval(lo);
  double step = hi - lo;
  // lambda is decreasing: need lambda(lo) >= 1 and lambda(hi) <= 1.
  std::optional<double> ghi_known;
  while (glo < 0) {
    if (lo <= lower_limit) fail(ErrorCode::no_root, "lambda_s < 1 already at the lower bound s = 1.1");
    hi = lo;
    ghi_known = glo;
    lo = std::max(lower_limit, lo - step);
    step *= 2;
    glo = eval(lo);
  }
  double ghi = ghi_known ? *ghi_known : eval(hi);
  while (ghi > 0) {
    if (hi >= upper_limit) fail(ErrorCode::no_root, "lambda_s > 1 on the whole search range");
    lo = hi;
    glo = ghi;
    hi = std::min(upper_limit, hi + step);
    step *= 2;
    ghi = eval(hi);
  }

  // Bracketing secant with the Illinois modification; the secant estimate is
  // kept at least tol/2 away from the bracket ends so that an accurate
  // estimate closes the bracket in one more evaluation.
  int side = 0;
  for (int guard = 0; hi - lo > tol; ++guard) {
    if (guard > 200) fail(ErrorCode::convergence, "beta solve did not converge");
    double q;
    if (hi - lo <= 2.0 * tol || glo == ghi) {
      q = 0.5 * (lo + hi);
    } else {
      q = lo - glo * (hi - lo) / (ghi - glo);
      q = std::min(hi - 0.5 * tol, std::max(lo + 0.5 * tol, q));
    }
    const double gq = eval(q);
    if (gq >= 0) {
      lo = q;
      glo = gq;
      if (side == -1) ghi *= 0.5;
      side = -1;
    } else {
      hi = q;
      ghi = gq;
      if (side == 1) glo *= 0.5;
      side = 1;
    }
  }
  res.lo = lo;
  res.hi = hi;
  res.beta = 0.5 * (lo + hi);
  res.eigen = leading_eigen(op, res.beta, warm);
  return res;
}

MultiGridBeta solve_beta_grids(OperatorConfig cfg, const std::vector<int>& grids, double tol) {
  MultiGridBeta out;
  std::optional<double> guess;
  for (int g : grids) {
    cfg.grid = g;
    TransferOperator op(cfg);
    BetaResult r = solve_beta(op, tol, guess);
    guess = r.beta;
    out.grids.push_back(op.config().grid);
    out.results.push_back(std::move(r));
  }
  return out;
}

// ------------------------------------------------------------- residuals

std::vector<TestFunction> monomials(int n, int degree) {
  const int m = n - 2;
  std::vector<TestFunction> out;
  out.push_back({"1", [](const Vec&) { return 1.0; }});
  if (degree >= 1)
    for (int k = 0; k < m; ++k)
      out.push_back({"w" + std::to_string(k + 1), [k](const Vec& w) { return w[k]; }});
  if (degree >= 2)
    for (int k = 0; k < m; ++k)
      for (int l = k; l < m; ++l)
        out.push_back({"w" + std::to_string(k + 1) + "*w" + std::to_string(l + 1),
                       [k, l](const Vec& w) { return w[k] * w[l]; }});
  return out;
}

double conformal_residual(const TransferOperator& op, double s, const Vec& nu, const std::vector<TestFunction>& tests) {
  const auto& g = op.grid();
  if (nu.size() != g.size()) fail(ErrorCode::dimension, "measure has the wrong length");
  double worst = 0.0;
  for (const auto& t : tests) {
    const Vec Lf = op.apply_exact(t.f, s);
    double lhs = 0.0, rhs = 0.0;
    for (size_t i = 0; i < g.size(); ++i) {
      lhs += nu[i] * t.f(g.node(i));
      rhs += nu[i] * Lf[i];
    }
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

double conformal_eigen_residual(TransferOperator& op, double s, const Vec& nu) {
  op.set_s(s);
  Vec g;
  op.apply_transpose(nu, g);
  double r = 0.0;
  for (size_t i = 0; i < nu.size(); ++i) r += std::abs(g[i] - nu[i]);
  return r;
}

double h_recursion_residual(TransferOperator& op, double s, const Vec& h) {
  op.set_s(s);
  Vec g;
  op.apply(h, g);
  double r = 0.0, mx = 0.0;
  for (size_t i = 0; i < h.size(); ++i) {
    r = std::max(r, std::abs(g[i] - h[i]));
    mx = std::max(mx, std::abs(h[i]));
  }
  if (!(mx > 0)) fail(ErrorCode::usage, "eigenfunction must be nonzero");
  return r / mx;
}

// ----------------------------------------------------------------- Gauss

double gauss_conjugation_check(double s, int points, int A_max) {
  if (!(s > 1.0)) fail(ErrorCode::usage, "s must exceed 1");
  if (points < 2 || A_max < 1) fail(ErrorCode::usage, "need at least 2 points and A_max >= 1");
  const std::vector<std::function<double(double)>> basis = {
      [](double) { return 1.0; }, [](double x) { return x; }, [](double x) { return x * x; },
      [](double x) { return x * x * x; }};
  double worst = 0.0;
  for (int p = 0; p < points; ++p) {
    const double x = static_cast<double>(p) / (points - 1);
    const Vec w = {x / (1.0 + x)};
    for (const auto& G : basis) {
      // Simplex chart: (1+x)^{-s} sum_A weight^{-s} [(1+x')^s G(x')](image).
      double lhs = 0.0;
      for (int A = 0; A <= A_max; ++A) {
        const proj::Gen g{A, 1};
        const Vec im = proj::accel_act(3, g, w);
        const double xi = im[0] / (1.0 - im[0]);
        lhs += std::pow(proj::weight(g, w), -s) * std::pow(1.0 + xi, s) * G(xi);
      }
      lhs *= std::pow(1.0 + x, -s);
      // Direct Gauss operator.
      double rhs = 0.0;
      for (int A = 0; A <= A_max; ++A) {
        const double d = x + A + 1.0;
        rhs += std::pow(d, -s) * G(1.0 / d);
      }
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  return worst;
}

double gauss_leading_eigenvalue(double s, int grid, int A_max) {
  if (!(s > 1.0)) fail(ErrorCode::usage, "s must exceed 1");
  if (grid < 2 || A_max < 1) fail(ErrorCode::usage, "need grid >= 2 and A_max >= 1");
  const int N = grid - 1;
  struct Entry {
    int i;
    double c;
  };
  std::vector<std::vector<Entry>> rows(grid);
  auto add = [&](std::vector<Entry>& row, double y, double c) {
    const double t = y * N;
    int b = std::min(N - 1, std::max(0, static_cast<int>(std::floor(t))));
    const double f = t - b;
    row.push_back({b, c * (1.0 - f)});
    row.push_back({b + 1, c * f});
  };
  for (int i = 0; i <= N; ++i) {
    const double x = static_cast<double>(i) / N;
    auto& row = rows[i];
    for (int A = 0; A <= A_max; ++A) {
      const double d = x + A + 1.0;
      add(row, 1.0 / d, std::pow(d, -s));
    }
    // Tail: sum_{A > A_max} y^s F(y), y = 1/(x+A+1), as int_0^Y y^{s-2} F dy
    // with F quadratic on [0, Y], minus the midpoint end correction.
    const double Y = 1.0 / (x + A_max + 1.5);
    const double p = std::pow(Y, s - 1.0);
    const double I0 = p / (s - 1.0), I1 = p / s, I2 = p / (s + 1.0);
    add(row, 0.0, I0 - 3.0 * I1 + 2.0 * I2);
    add(row, 0.5 * Y, 4.0 * I1 - 4.0 * I2);
    add(row, Y, -I1 + 2.0 * I2 - s * p * Y * Y / 24.0);
  }
  Vec h(grid, 1.0), g(grid);
  double prev = std::nan(""), lam = 0.0;
  for (int it = 0; it < 10000; ++it) {
    for (int i = 0; i <= N; ++i) {
      double acc = 0.0;
      for (const auto& e : rows[i]) acc += e.c * h[e.i];
      g[i] = acc;
    }
    lam = *std::max_element(g.begin(), g.end());
    for (int i = 0; i <= N; ++i) h[i] = g[i] / lam;
    if (std::abs(lam - prev) < 1e-12) return lam;
    prev = lam;
  }
  fail(ErrorCode::convergence, "Gauss operator power iteration did not converge");
}

double gauss_eigenfunction_variation(const SimplexGrid& g, const Vec& h) {
  if (g.n() != 3) fail(ErrorCode::usage, "the Gauss chart exists for n = 3 only");
  double lo = INFINITY, hi = -INFINITY;
  for (size_t i = 0; i < g.size(); ++i) {
    const double w1 = g.node_ptr(i)[0];
    const double x = w1 / (1.0 - w1);
    const double r = h[i] / (1.0 + x);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return (hi - lo) / hi;
}

// ----------------------------------------------------------- upper bound

double lambda_upper_bound(int n, double s) {
  if (!(s > 1.0)) fail(ErrorCode::usage, "s must exceed 1");
  constexpr int M = 100000;
  double sum = 0.0;
  for (int A = M; A >= 0; --A) sum += std::pow(3.0 + A, -s);
  // The midpoint rule underestimates the integral of a convex function, so
  // the integral from M + 1/2 bounds the remaining sum from above.
  sum += std::pow(3.0 + M + 0.5, 1.0 - s) / (s - 1.0);
  return std::pow(2.0, s) * (n - 2) * sum;
}

UpperBoundCheck lambda_upper_bound_check(int n, double s, const OperatorConfig& cfg) {
  OperatorConfig c = cfg;
  c.n = n;
  TransferOperator op(c);
  UpperBoundCheck r;
  r.lambda = leading_eigen(op, s).lambda;
  r.bound = lambda_upper_bound(n, s);
  r.ok = r.lambda <= r.bound;
  return r;
}

// --------------------------------------------------------------- renewal

namespace {

// gamma_j on an ordered homogeneous vector in place (1-based j <= n-1).
void gamma_inplace(double* y, int n, int j) {
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    if (i != j - 1) total += y[i];
  for (int i = j - 1; i < n - 1; ++i) y[i] = y[i + 1];
  y[n - 1] = total;
}

void count_rec(int n, const Vec& y, double base, double a, unsigned long long& count) {
  Vec z(n);
  for (int j = 1; j <= n - 2; ++j) {
    z = y;
    gamma_inplace(z.data(), n, j);
    for (int A = 0;; ++A) {
      if (A > 0) gamma_inplace(z.data(), n, n - 1);
      if (std::log(z[n - 1]) - base > a) break;
      ++count;
      count_rec(n, z, base, a, count);
    }
  }
}

}  // namespace

unsigned long long count_words(int n, const Vec& y, double a) {
  if (static_cast<int>(y.size()) != n) fail(ErrorCode::dimension, "homogeneous vector must have n entries");
  if (a < 0) return 0;
  unsigned long long count = 1;  // the identity
  count_rec(n, y, std::log(y[n - 1]), a, count);
  return count;
}

RenewalReport renewal_check(int n, int samples, double a_max, uint64_t seed) {
  if (n < 3) fail(ErrorCode::usage, "n must be at least 3");
  proj::SplitMix rng(seed);
  RenewalReport rep;
  for (int k = 0; k < samples; ++k) {
    const Vec w = proj::sample_delta(n, rng);
    const double a = k == 0 ? a_max : a_max * rng.uniform();
    Vec y = proj::full_coords(w);
    y.push_back(1.0);
    const unsigned long long lhs = count_words(n, y, a);
    unsigned long long rhs = 1;
    const double base = std::log(y[n - 1]);
    for (int j = 1; j <= n - 2; ++j) {
      Vec z = y;
      gamma_inplace(z.data(), n, j);
      for (int A = 0;; ++A) {
        if (A > 0) gamma_inplace(z.data(), n, n - 1);
        const double step = std::log(z[n - 1]) - base;
        if (step > a) break;
        rhs += count_words(n, z, a - step);
      }
    }
    ++rep.samples;
    rep.largest_count = std::max(rep.largest_count, lhs);
    if (lhs != rhs) {
      if (!rep.mismatches) {
        std::ostringstream os;
        os << "a=" << a << " lhs=" << lhs << " rhs=" << rhs;
        rep.witness = os.str();
      }
      ++rep.mismatches;
    }
  }
  return rep;
}

// ----------------------------------------------------------------- output

std::string spectral_json(const OperatorConfig& cfg, const EigenResult& e, const BetaResult* beta) {
  nlohmann::ordered_json j;
  j["n"] = cfg.n;
  j["s"] = round15(e.s);
  j["grid"] = cfg.grid;
  j["A_max"] = cfg.A_max;
  j["tail"] = cfg.tail == TailMode::analytic ? "analytic" : "drop";
  j["lambda"] = round15(e.lambda);
  j["residual"] = round15(e.residual);
  j["iterations"] = e.iterations;
  if (beta) {
    j["beta"] = round15(beta->beta);
    j["bracket"] = {round15(beta->lo), round15(beta->hi)};
    auto& tr = j["trace"] = nlohmann::ordered_json::array();
    for (const auto& t : beta->trace)
      tr.push_back({{"s", round15(t.s)}, {"lambda", round15(t.lambda)}, {"iterations", t.iterations}});
  }
  return j.dump(2) + "\n";
}

std::string grid_csv(const SimplexGrid& g, const Vec& values, const std::string& column) {
  std::string out;
  for (int k = 1; k <= g.dim(); ++k) out += "w" + std::to_string(k) + ",";
  out += column + "\n";
  for (size_t i = 0; i < g.size(); ++i) {
    const double* w = g.node_ptr(i);
    for (int k = 0; k < g.dim(); ++k) out += fmt_double(w[k]) + ",";
    out += fmt_double(values[i]) + "\n";
  }
  return out;
}

}  // namespace mhs::spectral
