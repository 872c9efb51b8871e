#ifndef STURM_REAL_HPP
#define STURM_REAL_HPP

#include <boost/multiprecision/mpfr.hpp>
#include <boost/multiprecision/gmp.hpp>

#include <string>

namespace sturm {

// All floating computation runs on MPFR through boost::multiprecision.
// Precision is variable per value; freshly constructed values pick up the
// thread-local working precision, results inherit operand precision.
using Real = boost::multiprecision::mpfr_float;
using BigInt = boost::multiprecision::mpz_int;
using Rational = boost::multiprecision::mpq_rational;

inline unsigned digits10_for_bits(unsigned bits) {
  // ceil(bits * log10(2)) plus slack so the backend allocates >= bits.
  return static_cast<unsigned>((static_cast<unsigned long long>(bits) * 30103u) / 100000u) + 4u;
}

// The mpfr bit count boost allocates for that digits10 value. Explicitly
// rounded values are pinned to this grid so they match the values the
// working precision produces; mismatches would make boost's internal
// precision guards write the process-global default from worker threads.
inline unsigned backend_bits_for(unsigned bits) {
  return boost::multiprecision::detail::digits10_2_2(digits10_for_bits(bits));
}

// Thread-local working precision, in bits. Values constructed after a call
// carry at least this precision.
void set_working_precision(unsigned bits);
unsigned working_precision_bits();

struct PrecisionScope {
  explicit PrecisionScope(unsigned bits)
      : saved_(working_precision_bits()) {
    set_working_precision(bits);
  }
  ~PrecisionScope() { set_working_precision(saved_); }
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  unsigned saved_;
};

// Fresh values at the current working precision.
Real real_from(double v);
Real real_from(long v);
Real real_from(const Rational& q);
Real real_from_decimal(const std::string& text);

// Round a value to `bits` of precision (returns a new value).
Real round_to_bits(const Real& v, unsigned bits);

// Decimal rendering with enough digits for the value's own precision.
std::string to_decimal_string(const Real& v);
std::string to_decimal_string(const Real& v, unsigned digits);

// Parse "3", "-1/12", "24.5" into an exact rational.
Rational parse_rational(const std::string& text);

}  // namespace sturm

#endif
