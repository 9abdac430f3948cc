// SPDX-License-Identifier: Apache-2.0

#include "orbit_enum.hpp"

#include <algorithm>
#include <atomic>
#include <cfloat>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace mhs::orbit {

namespace {

using i128 = __int128;

i128 isqrt128(i128 v) {
  if (v < 0) return -1;
  i128 r = static_cast<i128>(std::sqrt(static_cast<long double>(v)));
  while (r > 0 && r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

bool positive(const Tuple& t) {
  return std::all_of(t.x.begin(), t.x.end(), [](const BigInt& v) { return sgn(v) > 0; });
}

double log_shift(const Params& p) { return std::log(static_cast<double>(p.a)) / (p.n - 2); }

// Children of a node inside K0: every move that strictly increases the max.
std::vector<std::pair<int, Tuple>> increasing_children(const Params& p, const Tuple& x) {
  std::vector<std::pair<int, Tuple>> out;
  for (int j = 0; j < p.n; ++j) {
    Tuple y = core::order_tuple(core::move_unchecked(p, x, j));
    if (!positive(y) || !(y.max() > x.max())) continue;
    const bool dup = std::any_of(out.begin(), out.end(), [&](const auto& c) { return c.second == y; });
    if (!dup) out.emplace_back(j + 1, std::move(y));
  }
  return out;
}

// Exact forward children at ordered positions 1..n-1 (equal entries give
// equal children; only the first position of a run of equal values is used).
std::vector<std::pair<int, Tuple>> forward_children(const Params& p, const Tuple& x) {
  std::vector<std::pair<int, Tuple>> out;
  const int n = p.n;
  BigInt prod_all = p.a;
  for (const auto& v : x.x) prod_all *= v;
  for (int j = 0; j < n - 1; ++j) {
    if (j > 0 && x.x[j] == x.x[j - 1]) continue;
    Tuple y;
    y.ordered = true;
    y.x.reserve(n);
    BigInt prod = p.a;
    for (int i = 0; i < n; ++i)
      if (i != j) {
        prod *= x.x[i];
        y.x.push_back(x.x[i]);
      }
    BigInt nv = prod - x.x[j];
    if (!(nv > x.x[n - 1]))
      fail(ErrorCode::invariant, "forward move at position " + std::to_string(j + 1) + " of " + x.str() +
                                     " does not increase the maximum");
    y.x.push_back(std::move(nv));
    out.emplace_back(j + 1, std::move(y));
  }
  return out;
}

}  // namespace

double LogNode::error_bound() const { return e.empty() ? 0.0 : *std::max_element(e.begin(), e.end()); }

LogConstants log_constants(int n) {
  LogConstants c;
  c.C1 = std::max(2.0 * std::sqrt(static_cast<double>(n - 1)), 10.0);
  c.C2 = static_cast<double>(n);
  c.switch_log_alpha = 30.0;
  return c;
}

double log_alpha_lower(const LogNode& node, int n) {
  double s = 0.0;
  for (int i = 0; i < n - 2; ++i) s += node.l[i] - node.e[i];
  return s;
}

std::optional<LogNode> to_log(const Params& p, const Tuple& xin) {
  const Tuple x = xin.ordered ? xin : core::order_tuple(xin);
  const int n = p.n;
  const LogConstants c = log_constants(n);
  const double la = log_shift(p);
  LogNode node;
  node.l.resize(n);
  node.e.resize(n);
  double sum = 0.0, esum = 0.0;
  for (int i = 0; i < n - 1; ++i) {
    node.l[i] = log_big(x.x[i]) + la;
    node.e[i] = 8.0 * DBL_EPSILON * std::max(1.0, std::fabs(node.l[i]));
    sum += node.l[i];
    esum += node.e[i];
  }
  const double lal = log_alpha_lower(node, n);
  if (!(lal > std::log(c.C1))) return std::nullopt;
  node.l[n - 1] = sum;
  node.e[n - 1] = esum + c.C2 * std::exp(-2.0 * lal) + n * DBL_EPSILON * std::fabs(sum);
  return node;
}

std::optional<LogNode> log_space_advance(const Params& p, const LogNode& node, int j) {
  const int n = p.n;
  if (j < 1 || j > n - 1) fail(ErrorCode::usage, "log-space move index out of range");
  const LogConstants c = log_constants(n);
  if (!(log_alpha_lower(node, n) > std::log(c.C1))) return std::nullopt;
  LogNode out;
  out.l.reserve(n);
  out.e.reserve(n);
  for (int i = 0; i < n; ++i)
    if (i != j - 1) {
      out.l.push_back(node.l[i]);
      out.e.push_back(node.e[i]);
    }
  double sum = 0.0, esum = 0.0;
  for (int i = 0; i < n - 1; ++i) {
    sum += out.l[i];
    esum += out.e[i];
  }
  const double lal = log_alpha_lower(out, n);
  out.l.push_back(sum);
  out.e.push_back(esum + c.C2 * std::exp(-2.0 * lal) + n * DBL_EPSILON * std::fabs(sum));
  return out;
}

std::vector<OrbitNode> forward_moves(const Params& p, const OrbitNode& node) {
  std::vector<OrbitNode> out;
  if (node.tuple) {
    for (auto& [j, y] : forward_children(p, *node.tuple)) {
      OrbitNode c;
      c.tuple = std::move(y);
      c.word = node.word;
      c.word.push_back(j);
      c.depth = node.depth + 1;
      c.root = node.root;
      out.push_back(std::move(c));
    }
  } else if (node.log) {
    for (int j = 1; j <= p.n - 1; ++j) {
      if (j > 1 && node.log->l[j - 1] == node.log->l[j - 2]) continue;
      auto adv = log_space_advance(p, *node.log, j);
      if (!adv) fail(ErrorCode::domain, "log-space move refused: alpha below the sandwich threshold");
      OrbitNode c;
      c.log = std::move(*adv);
      c.word = node.word;
      c.word.push_back(j);
      c.depth = node.depth + 1;
      c.root = node.root;
      out.push_back(std::move(c));
    }
  }
  return out;
}

void enumerate_ball(const Params& p, const std::vector<Tuple>& roots, const BigInt& R, const EnumOptions& opt,
                    const std::function<void(const OrbitNode&)>& sink) {
  p.validate();
  std::set<Tuple> visited;
  std::vector<OrbitNode> frontier;
  for (size_t r = 0; r < roots.size(); ++r) {
    Tuple t = core::order_tuple(roots[r]);
    if (t.max() > R) continue;
    if (!visited.insert(t).second) continue;
    OrbitNode node;
    node.tuple = std::move(t);
    node.root = r;
    frontier.push_back(std::move(node));
  }
  size_t emitted = 0;
  while (!frontier.empty()) {
    std::vector<OrbitNode> next;
    for (const auto& node : frontier) {
      sink(node);
      if (++emitted > opt.max_nodes) fail(ErrorCode::capacity, "enumeration exceeded the node budget");
      const Tuple& x = *node.tuple;
      const bool inside = !core::outside_K0(p, x);
      const auto kids = inside ? increasing_children(p, x) : forward_children(p, x);
      for (const auto& [j, y] : kids) {
        if (y.max() > R) continue;
        const bool category = inside || node.depth + 1 <= opt.dedup_depth || !core::outside_K0(p, y);
        if (category || opt.check_freeness) {
          if (!visited.insert(y).second) {
            if (category) continue;
            fail(ErrorCode::invariant, "freeness violation: tuple " + y.str() + " reached twice");
          }
        }
        OrbitNode c;
        c.tuple = y;
        c.word = node.word;
        c.word.push_back(j);
        c.depth = node.depth + 1;
        c.root = node.root;
        next.push_back(std::move(c));
      }
    }
    frontier = std::move(next);
  }
}

std::vector<Tuple> box_oracle(const Params& p, const BigInt& Rbig) {
  p.validate();
  std::vector<Tuple> out;
  if (sgn(Rbig) <= 0) return out;
  if (Rbig > BigInt(100000)) fail(ErrorCode::capacity, "box oracle radius too large");
  const long R = Rbig.get_si();
  const int n = p.n;
  std::vector<long> xs(n - 1, 1);
  // plain nested scan of ordered prefixes x_1 <= ... <= x_{n-1} <= R
  std::function<void(int)> rec = [&](int m) {
    if (m == n - 1) {
      i128 prod = 1, sumsq = 0;
      for (long v : xs) {
        prod *= v;
        sumsq += static_cast<i128>(v) * v;
      }
      const i128 ap = static_cast<i128>(p.a) * prod;
      const i128 disc = ap * ap - 4 * (sumsq - p.k);
      if (disc < 0) return;
      const i128 s = isqrt128(disc);
      if (s * s != disc || ((ap + s) & 1) != 0) return;
      std::set<i128> roots{(ap - s) / 2, (ap + s) / 2};
      for (i128 xn : roots) {
        if (xn < xs[n - 2] || xn > R) continue;
        Tuple t;
        t.ordered = true;
        for (long v : xs) t.x.emplace_back(v);
        t.x.emplace_back(static_cast<long>(xn));
        out.push_back(std::move(t));
      }
      return;
    }
    for (long v = m == 0 ? 1 : xs[m - 1]; v <= R; ++v) {
      xs[m] = v;
      rec(m + 1);
    }
  };
  rec(0);
  std::sort(out.begin(), out.end());
  return out;
}

BigInt signed_box_count(const Params& p, long R) {
  p.validate();
  if (R > 2000) fail(ErrorCode::capacity, "signed box search radius too large");
  const int n = p.n;
  std::vector<long> xs(n - 1, 0);
  BigInt count = 0;
  std::function<void(int)> rec = [&](int m) {
    if (m == n - 1) {
      i128 prod = 1, sumsq = 0;
      for (long v : xs) {
        prod *= v;
        sumsq += static_cast<i128>(v) * v;
      }
      const i128 ap = static_cast<i128>(p.a) * prod;
      const i128 disc = ap * ap - 4 * (sumsq - p.k);
      if (disc < 0) return;
      const i128 s = isqrt128(disc);
      if (s * s != disc || ((ap + s) & 1) != 0) return;
      std::set<i128> roots{(ap - s) / 2, (ap + s) / 2};
      for (i128 xn : roots) {
        if (xn < -R || xn > R) continue;
        Tuple t;
        bool origin = xn == 0;
        for (long v : xs) {
          t.x.emplace_back(v);
          origin = origin && v == 0;
        }
        t.x.emplace_back(static_cast<long>(xn));
        if (origin) continue;
        if (!core::is_exceptional_signed(p, t)) ++count;
      }
      return;
    }
    for (long v = -R; v <= R; ++v) {
      xs[m] = v;
      rec(m + 1);
    }
  };
  rec(0);
  return count;
}

IntegerBallCount count_integer_ball(const Params& p, const BigInt& R) {
  p.validate();
  IntegerBallCount res;
  const int n = p.n;
  if (sgn(R) > 0) {
    const RootSet rs = find_roots(p);
    enumerate_ball(p, rs.roots, R, EnumOptions{}, [&](const OrbitNode& node) {
      res.positive_points += core::ordering_multiplicity(*node.tuple);
    });
  }
  // Bounded searches: every coordinate of these finite sets has |x_i|^2 <= k.
  if (p.k > 0) {
    const long kb = static_cast<long>(std::floor(std::sqrt(static_cast<double>(p.k)))) + 1;
    const long lim = R < kb ? static_cast<long>(R.get_si()) : kb;
    std::vector<long> xs(n, 0);
    // mixed sign orbits: positive x~ with sum x~^2 + a prod x~ = k
    std::function<void(int, long)> rec_mixed = [&](int m, long sumsq) {
      if (m == n) {
        i128 prod = p.a;
        for (long v : xs) prod *= v;
        if (static_cast<i128>(sumsq) + prod != p.k) return;
        Tuple t;
        for (long v : xs) t.x.emplace_back(v);
        t.x[0] = -t.x[0];
        if (!core::is_exceptional_signed(p, t)) ++res.mixed_orbits;
        return;
      }
      for (long v = 1; v <= lim && sumsq + v * v <= p.k; ++v) {
        xs[m] = v;
        rec_mixed(m + 1, sumsq + v * v);
      }
    };
    rec_mixed(0, 0);
    // zero-coordinate solutions: sum x^2 = k with some x_i = 0
    std::function<void(int, long, bool)> rec_zero = [&](int m, long sumsq, bool zero) {
      if (m == n) {
        if (!zero || sumsq != p.k) return;
        Tuple t;
        for (long v : xs) t.x.emplace_back(v);
        if (!core::is_exceptional_signed(p, t)) ++res.zero_points;
        return;
      }
      for (long v = -lim; v <= lim; ++v) {
        if (sumsq + v * v > p.k) continue;
        xs[m] = v;
        rec_zero(m + 1, sumsq + v * v, zero || v == 0);
      }
    };
    rec_zero(0, 0, false);
  }
  BigInt pw;
  mpz_ui_pow_ui(pw.get_mpz_t(), 2, static_cast<unsigned long>(n - 1));
  res.total = pw * (res.positive_points + res.mixed_orbits) + res.zero_points;
  return res;
}

RootSet find_roots(const Params& p) {
  const core::K0Data& d = core::k0_data(p);
  RootSet rs;
  rs.radius = d.radius;
  std::set<Tuple> unexc;
  for (const auto& t : d.box) {
    if (d.exceptional.at(t)) rs.exceptional.push_back(t);
    else {
      rs.unexceptional.push_back(t);
      unexc.insert(t);
    }
  }
  std::set<Tuple> reached;
  for (const auto& u : rs.unexceptional)
    for (const auto& [j, y] : increasing_children(p, u))
      if (unexc.count(y)) reached.insert(y);
  for (const auto& u : rs.unexceptional)
    if (!reached.count(u)) rs.roots.push_back(u);
  return rs;
}

std::vector<Threshold> log_thresholds(double lo, double hi, int rows) {
  std::vector<Threshold> out;
  if (rows < 1) return out;
  for (int i = 0; i < rows; ++i) {
    Threshold t;
    t.log_R = rows == 1 ? hi : lo + (hi - lo) * i / (rows - 1);
    out.push_back(t);
  }
  return out;
}

std::vector<Threshold> integer_thresholds(const BigInt& Rmax, int rows) {
  std::vector<Threshold> out;
  if (sgn(Rmax) <= 0 || rows < 1) return out;
  const double lmax = log_big(Rmax);
  std::set<BigInt> seen;
  for (int i = 0; i < rows; ++i) {
    BigInt r;
    if (i == rows - 1) {
      r = Rmax;
    } else {
      const double l = rows == 1 ? lmax : lmax * i / (rows - 1);
      r = BigInt(std::floor(std::exp(l) + 1e-9));
      if (r < 1) r = 1;
      if (r > Rmax) r = Rmax;
    }
    if (!seen.insert(r).second) continue;
    Threshold t;
    t.R_exact = r;
    t.log_R = log_big(r);
    out.push_back(t);
  }
  return out;
}

namespace {

struct Histogram {
  std::vector<unsigned long long> bins;       // first row containing the node
  std::vector<unsigned long long> ambiguous;  // nodes within error of a row threshold
  unsigned long long exact_nodes = 0, log_nodes = 0;
  double max_err = 0.0;
  explicit Histogram(size_t rows = 0) : bins(rows + 1, 0), ambiguous(rows, 0) {}
  void merge(const Histogram& o) {
    for (size_t i = 0; i < bins.size(); ++i) bins[i] += o.bins[i];
    for (size_t i = 0; i < ambiguous.size(); ++i) ambiguous[i] += o.ambiguous[i];
    exact_nodes += o.exact_nodes;
    log_nodes += o.log_nodes;
    max_err = std::max(max_err, o.max_err);
  }
};

class Counter {
 public:
  Counter(const Params& p, const std::vector<Threshold>& th, const CountOptions& opt)
      : p_(p), th_(th), opt_(opt), la_(log_shift(p)), lc_(log_constants(p.n)) {
    for (const auto& t : th_) logs_.push_back(t.log_R);
    max_log_ = logs_.empty() ? -INFINITY : logs_.back();
    for (const auto& t : th_)
      if (t.R_exact && (!max_exact_ || *t.R_exact > *max_exact_)) max_exact_ = *t.R_exact;
  }

  // Record an exact node; returns false when it lies beyond every threshold.
  bool record_exact(const Tuple& x, Histogram& h) const {
    const BigInt& v = x.x.back();
    const double lv = log_big(v);
    const double margin = 1e-12 * std::max(1.0, std::fabs(lv));
    if (lv - margin > max_log_ && (!max_exact_ || v > *max_exact_)) return false;
    size_t first = th_.size();
    for (size_t r = lower(lv - margin); r < th_.size(); ++r) {
      bool inside;
      if (th_[r].R_exact) {
        inside = v <= *th_[r].R_exact;
      } else {
        inside = lv <= logs_[r];
        if (std::fabs(lv - logs_[r]) <= margin) ++h.ambiguous[r];
      }
      if (inside) {
        first = r;
        break;
      }
    }
    ++h.bins[first];
    ++h.exact_nodes;
    return first < th_.size() || lv - margin <= max_log_;
  }

  bool record_log(const LogNode& node, Histogram& h) const {
    const int n = p_.n;
    const double lv = node.l[n - 1] - la_;
    const double err = node.e[n - 1] + 1e-12 * std::max(1.0, std::fabs(lv));
    h.max_err = std::max(h.max_err, node.e[n - 1]);
    if (lv - err > max_log_) return false;
    size_t first = th_.size();
    for (size_t r = lower(lv - err); r < th_.size(); ++r) {
      if (std::fabs(lv - logs_[r]) <= err) ++h.ambiguous[r];
      if (lv <= logs_[r]) {
        first = r;
        break;
      }
    }
    ++h.bins[first];
    ++h.log_nodes;
    return true;
  }

  // Depth-first count of the free subtree below an exact unit root.
  void run_unit(const Tuple& unit, Histogram& h) const {
    struct Item {
      std::optional<Tuple> t;
      std::optional<LogNode> l;
    };
    std::vector<Item> stack;
    stack.push_back({unit, std::nullopt});
    const int n = p_.n;
    while (!stack.empty()) {
      Item it = std::move(stack.back());
      stack.pop_back();
      if (h.exact_nodes + h.log_nodes > opt_.max_nodes)
        fail(ErrorCode::capacity, "count exceeded the node budget");
      if (it.t) {
        if (!record_exact(*it.t, h)) continue;
        if (opt_.allow_log) {
          double la = 0.0;
          for (int i = 0; i < n - 2; ++i) la += log_big(it.t->x[i]) + la_;
          if (la >= lc_.switch_log_alpha) {
            auto ln = to_log(p_, *it.t);
            if (ln) {
              push_log_children(*ln, stack);
              continue;
            }
          }
        }
        for (auto& [j, y] : forward_children(p_, *it.t)) stack.push_back({std::move(y), std::nullopt});
      } else {
        if (!record_log(*it.l, h)) continue;
        push_log_children(*it.l, stack);
      }
    }
  }

 private:
  template <class Stack>
  void push_log_children(const LogNode& node, Stack& stack) const {
    for (int j = 1; j <= p_.n - 1; ++j) {
      if (j > 1 && node.l[j - 1] == node.l[j - 2]) continue;
      auto c = log_space_advance(p_, node, j);
      if (!c) fail(ErrorCode::invariant, "log-space move refused below the sandwich threshold");
      stack.push_back({std::nullopt, std::move(*c)});
    }
  }

  size_t lower(double v) const { return static_cast<size_t>(std::lower_bound(logs_.begin(), logs_.end(), v) - logs_.begin()); }

  const Params& p_;
  const std::vector<Threshold>& th_;
  const CountOptions& opt_;
  std::vector<double> logs_;
  double max_log_;
  std::optional<BigInt> max_exact_;
  double la_;
  LogConstants lc_;
};

std::string signature(const Params& p, const std::vector<Threshold>& th, const CountOptions& opt) {
  std::ostringstream os;
  os << "n=" << p.n << ";a=" << p.a << ";k=" << p.k << ";log=" << (opt.allow_log ? 1 : 0) << ";rows=";
  for (const auto& t : th) os << fmt_double(t.log_R) << (t.R_exact ? ":" + to_string(*t.R_exact) : "") << "|";
  return os.str();
}

}  // namespace

CountSeries count_series(const Params& p, std::vector<Threshold> thresholds, const CountOptions& opt) {
  p.validate();
  std::sort(thresholds.begin(), thresholds.end(), [](const Threshold& a, const Threshold& b) { return a.log_R < b.log_R; });
  CountSeries series;
  series.params = p;
  const RootSet rs = find_roots(p);
  series.roots = rs.roots;
  const Counter counter(p, thresholds, opt);
  Histogram total(thresholds.size());

  // Shallow region: every unexceptional tuple of the K0 box is an orbit node.
  const core::K0Data& d = core::k0_data(p);
  std::set<Tuple> units;
  for (const auto& u : rs.unexceptional) {
    counter.record_exact(u, total);
    for (const auto& [j, y] : increasing_children(p, u))
      if (y.max() > d.radius) units.insert(y);
  }
  // Split the free region into a few hundred exact work units.
  std::vector<Tuple> work(units.begin(), units.end());
  for (int round = 0; round < 6 && !work.empty() && work.size() < 256; ++round) {
    std::vector<Tuple> next;
    for (const auto& u : work) {
      const double lv = log_big(u.x.back());
      if (lv > thresholds.back().log_R + 1.0 && !(thresholds.back().R_exact && u.x.back() <= *thresholds.back().R_exact)) {
        continue;  // beyond every threshold; descendants only grow
      }
      counter.record_exact(u, total);
      for (auto& [j, y] : forward_children(p, u)) next.push_back(std::move(y));
    }
    work = std::move(next);
  }
  std::sort(work.begin(), work.end());
  series.stats.work_units = work.size();

  // Resume support: append-only shard of finished units.
  std::vector<char> done(work.size(), 0);
  std::vector<Histogram> results(work.size(), Histogram(thresholds.size()));
  const std::string sig = signature(p, thresholds, opt);
  std::mutex shard_mu;
  std::ofstream shard;
  if (!opt.shard_path.empty()) {
    std::ifstream in(opt.shard_path);
    std::string line;
    bool sig_ok = false;
    if (std::getline(in, line)) {
      if (line != "# " + sig) fail(ErrorCode::io, "shard file " + opt.shard_path + " belongs to a different configuration");
      sig_ok = true;
      while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string field;
        std::vector<std::string> f;
        while (std::getline(ls, field, ',')) f.push_back(field);
        if (f.size() != 6 + 2 * thresholds.size()) continue;  // torn trailing write
        const size_t idx = std::stoul(f[0]);
        if (idx >= work.size() || f[1] != join(work[idx].x, '-')) continue;
        Histogram h(thresholds.size());
        h.exact_nodes = std::stoull(f[2]);
        h.log_nodes = std::stoull(f[3]);
        h.max_err = std::stod(f[4]);
        for (size_t r = 0; r <= thresholds.size(); ++r) h.bins[r] = std::stoull(f[5 + r]);
        for (size_t r = 0; r < thresholds.size(); ++r) h.ambiguous[r] = std::stoull(f[6 + thresholds.size() + r]);
        results[idx] = h;
        done[idx] = 1;
        ++series.stats.resumed_units;
      }
    }
    shard.open(opt.shard_path, std::ios::app);
    if (!shard) fail(ErrorCode::io, "cannot open shard file " + opt.shard_path);
    if (!sig_ok) shard << "# " << sig << "\n" << std::flush;
  }

  std::atomic<size_t> next_unit{0};
  std::vector<std::exception_ptr> errors(std::max(1, opt.threads));
  auto worker = [&](int tid) {
    try {
      while (true) {
        const size_t i = next_unit.fetch_add(1);
        if (i >= work.size()) break;
        if (done[i]) continue;
        counter.run_unit(work[i], results[i]);
        if (shard.is_open()) {
          std::lock_guard<std::mutex> lock(shard_mu);
          const Histogram& h = results[i];
          shard << i << ',' << join(work[i].x, '-') << ',' << h.exact_nodes << ',' << h.log_nodes << ','
                << fmt_double(h.max_err);
          for (auto b : h.bins) shard << ',' << b;
          for (auto b : h.ambiguous) shard << ',' << b;
          shard << '\n' << std::flush;
        }
      }
    } catch (...) {
      errors[tid] = std::current_exception();
    }
  };
  const int nthreads = std::max(1, opt.threads);
  if (nthreads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (const auto& h : results) total.merge(h);

  unsigned long long running = 0;
  for (size_t r = 0; r < thresholds.size(); ++r) {
    running += total.bins[r];
    CountRow row;
    row.log_R = thresholds[r].log_R;
    row.R_exact = thresholds[r].R_exact;
    row.count = running;
    row.exact = total.ambiguous[r] == 0;
    series.rows.push_back(row);
  }
  series.stats.exact_nodes = total.exact_nodes;
  series.stats.log_nodes = total.log_nodes;
  series.stats.max_error_bound = total.max_err;
  return series;
}

FitResult fit_growth_exponent(const std::vector<CountRow>& rows, double min_log_R) {
  std::vector<double> xs, ys;
  std::set<double> distinct;
  for (const auto& r : rows) {
    if (r.log_R < min_log_R || r.log_R <= 0.0 || r.count == 0) continue;
    xs.push_back(std::log(r.log_R));
    ys.push_back(std::log(static_cast<double>(r.count)));
    distinct.insert(r.log_R);
  }
  if (distinct.size() < 3) fail(ErrorCode::fit, "growth fit needs at least 3 rows with distinct R and positive counts");
  const double m = static_cast<double>(xs.size());
  double sx = 0, sy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 1e-24 * std::max(1.0, mx * mx))) fail(ErrorCode::fit, "degenerate design matrix in growth fit");
  FitResult f;
  f.beta_hat = sxy / sxx;
  const double intercept = my - f.beta_hat * mx;
  f.c_hat = std::exp(intercept);
  double ss = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (intercept + f.beta_hat * xs[i]);
    ss += e * e;
  }
  f.residual = std::sqrt(ss / m);
  f.rows_used = xs.size();
  return f;
}

FreenessReport check_free_orbit(const Params& p, const Tuple& rootin, int depth, unsigned long long max_nodes) {
  p.validate();
  const Tuple root = core::order_tuple(rootin);
  if (!core::is_solution(p, root)) fail(ErrorCode::invalid_state, "freeness root is not a solution");
  using u64 = unsigned long long;
  using u128 = unsigned __int128;
  const u64 primes[2] = {(1ULL << 61) - 1, 2305843009213693921ULL};  // 2^61-1 and 2^61-31
  const int n = p.n;
  FreenessReport rep;
  // exact growth check on the first few levels
  {
    std::vector<Tuple> level{root};
    for (int d = 0; d < std::min(depth, 6); ++d) {
      std::vector<Tuple> next;
      for (const auto& t : level)
        for (int j = 0; j < n - 1; ++j) {
          Tuple y = core::order_tuple(core::move_unchecked(p, t, j));
          if (!(y.max() > t.max())) rep.growth_ok = false;
          next.push_back(std::move(y));
        }
      level = std::move(next);
    }
  }
  struct Node {
    std::vector<u64> r[2];
    int d;
  };
  std::vector<std::pair<u64, u64>> prints;
  std::vector<Node> stack;
  Node r0;
  r0.d = 0;
  for (int q = 0; q < 2; ++q)
    for (const auto& v : root.x) r0.r[q].push_back(mpz_fdiv_ui(v.get_mpz_t(), static_cast<unsigned long>(primes[q])));
  stack.push_back(r0);
  auto mulmod = [](u64 x, u64 y, u64 m) { return static_cast<u64>((static_cast<u128>(x) * y) % m); };
  while (!stack.empty()) {
    Node nd = std::move(stack.back());
    stack.pop_back();
    prints.emplace_back(0, 0);
    for (int q = 0; q < 2; ++q) {
      u64 h = 1469598103934665603ULL % primes[q];
      for (u64 v : nd.r[q]) h = (mulmod(h, 1000003ULL, primes[q]) + v) % primes[q];
      (q == 0 ? prints.back().first : prints.back().second) = h;
    }
    if (++rep.nodes > max_nodes) fail(ErrorCode::capacity, "freeness audit exceeded the node budget");
    rep.depth = std::max(rep.depth, nd.d);
    if (nd.d == depth) continue;
    for (int j = 0; j < n - 1; ++j) {
      // equal ordered entries give the same child; only exact for the root
      if (nd.d == 0 && j > 0 && root.x[j] == root.x[j - 1]) continue;
      Node c;
      c.d = nd.d + 1;
      for (int q = 0; q < 2; ++q) {
        const u64 m = primes[q];
        u64 prod = static_cast<u64>(p.a) % m;
        for (int i = 0; i < n; ++i)
          if (i != j) prod = mulmod(prod, nd.r[q][i], m);
        const u64 nv = (prod + m - nd.r[q][j]) % m;
        for (int i = 0; i < n; ++i)
          if (i != j) c.r[q].push_back(nd.r[q][i]);
        c.r[q].push_back(nv);
      }
      stack.push_back(std::move(c));
    }
  }
  std::sort(prints.begin(), prints.end());
  for (size_t i = 1; i < prints.size(); ++i)
    if (prints[i] == prints[i - 1]) ++rep.duplicates;
  return rep;
}

std::string counts_csv(const CountSeries& s) {
  std::ostringstream os;
  os << "logR,R,count,exact_flag\n";
  for (const auto& r : s.rows)
    os << fmt_double(r.log_R) << ',' << (r.R_exact ? r.R_exact->get_str(10) : std::string()) << ',' << r.count
       << ',' << (r.exact ? 1 : 0) << '\n';
  return os.str();
}

std::vector<CountRow> parse_counts_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::io, "empty counts CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "logR,R,count,exact_flag") fail(ErrorCode::io, "unexpected counts CSV header: " + line);
  std::vector<CountRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.push_back("");
    if (f.size() != 4) fail(ErrorCode::io, "malformed counts CSV row: " + line);
    CountRow r;
    try {
      r.log_R = std::stod(f[0]);
      if (!f[1].empty()) r.R_exact = parse_big(f[1]);
      r.count = std::stoull(f[2]);
      r.exact = std::stoi(f[3]) != 0;
    } catch (const std::logic_error&) {
      fail(ErrorCode::io, "malformed counts CSV row: " + line);
    }
    rows.push_back(r);
  }
  return rows;
}

std::string orbit_csv_header(int n) {
  std::string h = "depth,word";
  for (int i = 1; i <= n; ++i) h += ",x" + std::to_string(i);
  return h;
}

std::string orbit_csv_row(const OrbitNode& node) {
  std::string s = std::to_string(node.depth) + ",";
  for (size_t i = 0; i < node.word.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(node.word[i]);
  }
  if (node.tuple) {
    for (const auto& v : node.tuple->x) s += "," + v.get_str(10);
  } else if (node.log) {
    for (double l : node.log->l) s += ",exp(" + fmt_double(l) + ")";
  }
  return s;
}

}  // namespace mhs::orbit
