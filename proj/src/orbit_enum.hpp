// SPDX-License-Identifier: Apache-2.0
//
// Forward enumeration of move orbits on ordered tuples, ball counts, the
// brute-force oracles, hybrid exact/logarithmic arithmetic for deep counts
// and growth-exponent fitting.

#pragma once

#include "mh_core.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mhs::orbit {

using core::Params;
using core::Tuple;

// Logarithmic representation of a deep normalized tuple z = a^{1/(n-2)} x.
// l[0..n-2] approximate log z_1..log z_{n-1}; l[n-1] is the sum of the others,
// i.e. the log of the product z_1..z_{n-1}, which exceeds log z_n by at most
// C2 * alpha(z)^{-2}.  |l[i] - log z_i| <= e[i] for every i.
struct LogNode {
  std::vector<double> l;
  std::vector<double> e;
  double error_bound() const;  // max_i e[i]; never decreases along a path
};

// Constants of the logarithmic sandwich and the exact->log switch-over.
struct LogConstants {
  double C1 = 10.0;
  double C2 = 3.0;
  double switch_log_alpha = 30.0;
};
LogConstants log_constants(int n);

// Lower bound on log alpha(z) = sum_{i <= n-2} log z_i.
double log_alpha_lower(const LogNode& node, int n);

// Exact ordered positive tuple -> log node (requires alpha > C1).
std::optional<LogNode> to_log(const Params& p, const Tuple& x);

// Replace the move at 1-based ordered position j (1 <= j <= n-1) by the linear
// map on logs.  Returns nullopt (caller stays exact) when the certified
// lower bound on alpha is below C1.
std::optional<LogNode> log_space_advance(const Params& p, const LogNode& node, int j);

struct OrbitNode {
  std::optional<Tuple> tuple;
  std::optional<LogNode> log;
  std::vector<int> word;  // 1-based move positions from the root
  int depth = 0;
  size_t root = 0;  // index of the root the node descends from
  double error_bound() const { return log ? log->error_bound() : 0.0; }
};

// Children by the forward moves at ordered positions 1..n-1 (duplicates from
// equal entries removed).  Each child's maximum must exceed the parent's.
std::vector<OrbitNode> forward_moves(const Params& p, const OrbitNode& node);

struct EnumOptions {
  int dedup_depth = 4;          // depth up to which children are deduplicated
  bool check_freeness = false;  // track every node and report duplicates
  size_t max_nodes = 20'000'000;
};

// Every orbit node with max entry <= R exactly once, in breadth-first order
// (ties by lexicographic word).  Nodes inside K0 use all increasing moves.
void enumerate_ball(const Params& p, const std::vector<Tuple>& roots, const BigInt& R,
                    const EnumOptions& opt, const std::function<void(const OrbitNode&)>& sink);

// Ordered positive solutions with max <= R by direct search (oracle).
std::vector<Tuple> box_oracle(const Params& p, const BigInt& R);

// |{x in Z^n : |x_i| <= R, x != 0, x on the surface, x unexceptional}| by
// scanning all signed prefixes (oracle, small R only).
BigInt signed_box_count(const Params& p, long R);

struct IntegerBallCount {
  BigInt total;
  BigInt positive_points;   // positive unexceptional points, all orderings
  BigInt mixed_orbits;      // sign orbits without a positive representative
  BigInt zero_points;       // unexceptional points with a zero coordinate (origin excluded)
};
IntegerBallCount count_integer_ball(const Params& p, const BigInt& R);

struct RootSet {
  std::vector<Tuple> roots;        // minimal unexceptional tuples of the K0 box
  std::vector<Tuple> unexceptional;  // every unexceptional tuple of the box
  std::vector<Tuple> exceptional;    // exceptional tuples of the box
  BigInt radius;
};
RootSet find_roots(const Params& p);

// Thresholds for a count series.  R_exact, when present, is used for exact
// comparisons with exact nodes; log_R is always present.
struct Threshold {
  double log_R = 0.0;
  std::optional<BigInt> R_exact;
};

struct CountRow {
  double log_R = 0.0;
  std::optional<BigInt> R_exact;
  unsigned long long count = 0;
  bool exact = true;  // no node lies within its error bound of the threshold
};

struct CountOptions {
  bool allow_log = true;
  int threads = 1;
  unsigned long long max_nodes = 4'000'000'000ULL;
  std::string shard_path;  // append-only checkpoint of finished work units
};

struct CountStats {
  unsigned long long exact_nodes = 0;
  unsigned long long log_nodes = 0;
  double max_error_bound = 0.0;
  size_t work_units = 0;
  size_t resumed_units = 0;
};

struct CountSeries {
  Params params;
  std::vector<CountRow> rows;
  std::vector<Tuple> roots;
  CountStats stats;
};

CountSeries count_series(const Params& p, std::vector<Threshold> thresholds, const CountOptions& opt);

// Geometric thresholds log R = lo..hi (inclusive) in `rows` steps.
std::vector<Threshold> log_thresholds(double log_lo, double log_hi, int rows);
// Integer thresholds R = 1..Rmax spaced geometrically (always includes Rmax).
std::vector<Threshold> integer_thresholds(const BigInt& Rmax, int rows);

struct FitResult {
  double beta_hat = 0.0;
  double c_hat = 0.0;
  double residual = 0.0;
  size_t rows_used = 0;
};

// Least squares log(count) = beta log(log R) + log c over rows with
// log R >= min_log_R and positive counts.
FitResult fit_growth_exponent(const std::vector<CountRow>& rows, double min_log_R = 1.0);

// Freeness audit of the forward tree below an ordered root: every word of
// length <= depth is applied with residues modulo two 61-bit primes (the
// ordered position of each coordinate is structural for forward moves, so no
// big integers are needed) and the fingerprints are checked for collisions.
struct FreenessReport {
  int depth = 0;
  unsigned long long nodes = 0;
  unsigned long long duplicates = 0;
  bool growth_ok = true;  // exact check of max growth on the first levels
};
FreenessReport check_free_orbit(const Params& p, const Tuple& root, int depth, unsigned long long max_nodes);

std::string counts_csv(const CountSeries& s);
std::vector<CountRow> parse_counts_csv(const std::string& text);
std::string orbit_csv_header(int n);
std::string orbit_csv_row(const OrbitNode& node);

}  // namespace mhs::orbit
