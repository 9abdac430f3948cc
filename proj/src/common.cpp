// SPDX-License-Identifier: Apache-2.0

#include "common.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace mhs {

double log_big(const BigInt& x) {
  if (sgn(x) <= 0) fail(ErrorCode::domain, "log of a non-positive integer");
  long exp2 = 0;
  const double mant = mpz_get_d_2exp(&exp2, x.get_mpz_t());
  return std::log(mant) + static_cast<double>(exp2) * std::log(2.0);
}

BigInt parse_big(std::string_view text) {
  std::string s(text);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  size_t b = 0;
  while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  s = s.substr(b);
  if (s.empty()) fail(ErrorCode::usage, "empty integer literal");
  const auto epos = s.find_first_of("eE");
  if (epos != std::string::npos) {
    // mantissa[.digits]e<exp> with an integral result
    std::string mant = s.substr(0, epos);
    const long ex = std::strtol(s.c_str() + epos + 1, nullptr, 10);
    bool neg = false;
    if (!mant.empty() && (mant[0] == '-' || mant[0] == '+')) {
      neg = mant[0] == '-';
      mant = mant.substr(1);
    }
    long frac = 0;
    const auto dot = mant.find('.');
    if (dot != std::string::npos) {
      frac = static_cast<long>(mant.size() - dot - 1);
      mant.erase(dot, 1);
    }
    if (mant.empty() || mant.find_first_not_of("0123456789") != std::string::npos)
      fail(ErrorCode::usage, "malformed integer literal: " + s);
    BigInt m(mant, 10);
    const long shift = ex - frac;
    BigInt p;
    if (shift >= 0) {
      mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(shift));
      m *= p;
    } else {
      mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(-shift));
      if (m % p != 0) fail(ErrorCode::usage, "non-integral literal: " + s);
      m /= p;
    }
    return neg ? BigInt(-m) : m;
  }
  size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size() || s.find_first_not_of("0123456789", i) != std::string::npos)
    fail(ErrorCode::usage, "malformed integer literal: " + s);
  BigInt v;
  if (v.set_str(s[0] == '+' ? s.substr(1) : s, 10) != 0)
    fail(ErrorCode::usage, "malformed integer literal: " + s);
  return v;
}

std::vector<BigInt> parse_big_list(std::string_view text) {
  std::vector<BigInt> out;
  size_t start = 0;
  while (start <= text.size()) {
    const size_t comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string_view::npos ? text.size() - start : comma - start);
    out.push_back(parse_big(piece));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string to_string(const BigInt& x) { return x.get_str(10); }

std::string join(const std::vector<BigInt>& xs, char sep) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out.push_back(sep);
    out += xs[i].get_str(10);
  }
  return out;
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

double round15(double v) {
  if (!std::isfinite(v)) return v;
  return std::strtod(fmt_double(v).c_str(), nullptr);
}

}  // namespace mhs
