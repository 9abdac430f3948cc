// SPDX-License-Identifier: Apache-2.0
//
// Exact arithmetic on the Markoff-Hurwitz surface
//     x_1^2 + ... + x_n^2 = a x_1 x_2 ... x_n + k
// Moves, ordering, exceptional detection, sign-orbit normalization and
// infinite descent into the compact set K0.

#pragma once

#include "common.hpp"

#include <map>
#include <optional>
#include <vector>

namespace mhs::core {

struct Params {
  int n = 3;
  long a = 1;
  long k = 0;

  void validate() const;
  bool operator==(const Params&) const = default;
  auto operator<=>(const Params&) const = default;
};

struct Tuple {
  std::vector<BigInt> x;
  bool ordered = false;

  Tuple() = default;
  explicit Tuple(std::vector<BigInt> v, bool ord = false) : x(std::move(v)), ordered(ord) {}
  static Tuple of(std::initializer_list<long> v);

  size_t size() const { return x.size(); }
  const BigInt& max() const;
  bool operator==(const Tuple& o) const { return x == o.x; }
  bool operator<(const Tuple& o) const { return x < o.x; }
  std::string str() const { return join(x); }
};

// Sum of squares minus a * product minus k; zero iff x lies on the surface.
BigInt eval_residual(const Params& p, const Tuple& x);
bool is_solution(const Params& p, const Tuple& x);

// Replace coordinate j (0-based) by a * prod_{i != j} x_i - x_j.  The input
// must be a solution; the result is again a solution.
Tuple apply_move(const Params& p, const Tuple& x, int j);
// Same formula without the solution check (callers that already know).
Tuple move_unchecked(const Params& p, const Tuple& x, int j);

// Stable ascending sort; sets the ordered flag.
Tuple order_tuple(const Tuple& x);

// Membership in the linear-growth families (a = 1 or a = 2); reorders
// internally and requires the residual to vanish.
bool is_fundamental_exceptional(const Params& p, const Tuple& x);

// The regularity inequalities of the descent region evaluated for the
// normalized tuple z = a^{1/(n-2)} x (floating point, erring towards
// "inside").  Input must be ordered and positive.
bool satisfies_regularity(const Params& p, const Tuple& x);

// Data describing the compact set K0 for one parameter triple.  Computed on
// first use and cached for the lifetime of the process.
struct K0Data {
  Params params;
  BigInt radius;             // every solution with max entry > radius is outside K0
  double regularity_radius;  // contribution of the regularity inequalities
  double violation_radius;   // contribution of the descent-conclusion search
  std::vector<Tuple> box;    // all ordered positive solutions with max <= radius
  std::vector<Tuple> bad;    // regular tuples where a descent conclusion fails
  std::map<Tuple, bool> exceptional;  // classification of every box tuple
  std::vector<std::string> notes;     // anomalies worth reporting (never hidden)
};

const K0Data& k0_data(const Params& p);

// True iff x passes the regularity inequalities and avoids the finite bad set.
bool outside_K0(const Params& p, const Tuple& x);

struct DescentStep {
  int j;  // 1-based position (in the ordered input of the step) that was moved
  Tuple result;
};

struct DescentPath {
  std::vector<DescentStep> steps;
  Tuple start;
  Tuple terminal;
};

// Moves at the maximal coordinate while outside K0; every step must strictly
// decrease the maximum.  Exceptional input raises ErrorCode::exceptional.
DescentPath descend(const Params& p, const Tuple& x);

// Operational exceptional test for positive solutions: greedy descent until a
// fundamental exceptional tuple is met or the K0 box is reached, where the
// precomputed move-graph classification decides.
bool is_exceptional(const Params& p, const Tuple& x);

enum class SignClass { all_positive, mixed, has_zero };
const char* to_string(SignClass c);

struct SignReduced {
  Tuple rep;
  SignClass cls;
};

// Representative of the orbit under even sign changes.
SignReduced sign_orbit_reduce(const Params& p, const Tuple& x);

// Exceptional test for arbitrary integer solutions (signs and zeros allowed).
bool is_exceptional_signed(const Params& p, const Tuple& x);

// All ordered positive solutions with max entry <= R, by direct search over
// (x_1..x_{n-1}) with the last coordinate solved exactly from the quadratic.
// The search prunes prefixes that provably admit no solution.
std::vector<Tuple> ordered_solutions_upto(const Params& p, const BigInt& R);

// Number of distinct orderings of the entries: n! / prod(m_i!).
BigInt ordering_multiplicity(const Tuple& x);

}  // namespace mhs::core
