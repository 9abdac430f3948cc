// SPDX-License-Identifier: Apache-2.0
//
// Shared vocabulary for the mhs library: error taxonomy, arbitrary-precision
// integer helpers and deterministic number formatting.

#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mhs {

using BigInt = mpz_class;

// Error codes are shared with the C API (see include/mhs/mhs.h); keep the
// numeric values in sync.
enum class ErrorCode : int {
  ok = 0,
  usage = 1,          // invalid parameters or options
  dimension = 2,      // tuple length does not match n
  invalid_state = 3,  // e.g. a move applied to a non-solution
  domain = 4,         // point outside the admissible region
  exceptional = 5,    // exceptional solution where an unexceptional one is required
  invariant = 6,      // internal invariant violation (never silently ignored)
  convergence = 7,    // iterative method did not converge
  geometry = 8,       // interpolation target outside the computational grid
  fit = 9,            // degenerate regression design
  capacity = 10,      // workload refused as infeasible
  io = 11,            // file or parse failure
  no_root = 12,       // no solution of lambda_s = 1 above the lower bound
  empty = 13,         // no unexceptional base tuples found
  internal = 99
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

// Natural logarithm of a positive big integer, accurate to double precision
// for any magnitude (no overflow for huge values).
double log_big(const BigInt& x);

// Parse a decimal integer string; accepts a leading sign and, for
// convenience, scientific notation with an integral value such as "1e30".
BigInt parse_big(std::string_view text);

// Comma separated decimal integers, e.g. "2,5,29".
std::vector<BigInt> parse_big_list(std::string_view text);

std::string to_string(const BigInt& x);
std::string join(const std::vector<BigInt>& xs, char sep = ',');

// Floats are always serialized with 15 significant digits.
std::string fmt_double(double v);
// Shortest representation that round-trips through 15 significant digits,
// used when a value is embedded into JSON.
double round15(double v);

}  // namespace mhs
