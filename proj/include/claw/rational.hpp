#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <string>

namespace claw {

using Integer = mpz_class;
using Rational = mpq_class;

inline Rational make_rational(long num, long den = 1) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

inline bool is_integer(const Rational& r) { return r.get_den() == 1; }

inline bool is_zero(const Rational& r) { return sgn(r) == 0; }

/// Value as a signed machine integer, when it is one and fits.
inline std::optional<long> to_long(const Rational& r) {
  if (!is_integer(r) || !r.get_num().fits_slong_p()) return std::nullopt;
  return r.get_num().get_si();
}

inline Rational rational_pow(const Rational& base, long exponent) {
  if (exponent < 0) {
    Rational inv = 1 / base;
    return rational_pow(inv, -exponent);
  }
  Rational result = 1;
  Rational b = base;
  auto e = static_cast<unsigned long>(exponent);
  while (e != 0) {
    if (e & 1u) result *= b;
    e >>= 1;
    if (e != 0) b *= b;
  }
  return result;
}

/// Exact r-th power when the result is rational (perfect powers only).
inline std::optional<Rational> exact_rational_pow(const Rational& base, const Rational& exponent) {
  if (is_integer(exponent)) {
    if (sgn(base) == 0 && sgn(exponent) < 0) return std::nullopt;
    return rational_pow(base, exponent.get_num().get_si());
  }
  if (sgn(base) < 0) return std::nullopt;
  if (!exponent.get_den().fits_ulong_p()) return std::nullopt;
  const unsigned long root = exponent.get_den().get_ui();
  Integer num_root, den_root;
  if (mpz_root(num_root.get_mpz_t(), base.get_num().get_mpz_t(), root) == 0) return std::nullopt;
  if (mpz_root(den_root.get_mpz_t(), base.get_den().get_mpz_t(), root) == 0) return std::nullopt;
  Rational r(num_root, den_root);
  r.canonicalize();
  return rational_pow(r, exponent.get_num().get_si());
}

inline Integer binomial(unsigned long n, unsigned long k) {
  Integer r;
  mpz_bin_uiui(r.get_mpz_t(), n, k);
  return r;
}

inline Integer factorial(unsigned long n) {
  Integer r;
  mpz_fac_ui(r.get_mpz_t(), n);
  return r;
}

inline std::string to_string(const Rational& r) { return r.get_str(); }

inline double to_double(const Rational& r) { return r.get_d(); }

}  // namespace claw
