#include "sturm/real.hpp"

#include <atomic>
#include <sstream>

namespace sturm {

namespace {
// boost 1.74 keeps the mpfr default precision in one process-global slot, so
// the tracked value must be process-global too. Parallel regions in this
// library all run at a single agreed precision set before threads spawn.
std::atomic<unsigned> g_working_bits{128};
}  // namespace

void set_working_precision(unsigned bits) {
  if (bits < 64) bits = 64;
  g_working_bits.store(bits, std::memory_order_relaxed);
  Real::default_precision(digits10_for_bits(bits));
}

unsigned working_precision_bits() {
  return g_working_bits.load(std::memory_order_relaxed);
}

Real real_from(double v) {
  Real r{v};
  return r;
}

Real real_from(long v) {
  Real r{v};
  return r;
}

Real real_from(const Rational& q) {
  Real num{numerator(q)};
  Real den{denominator(q)};
  return num / den;
}

Real real_from_decimal(const std::string& text) {
  Real r{text};
  return r;
}

Real round_to_bits(const Real& v, unsigned bits) {
  Real r{v};
  mpfr_prec_round(r.backend().data(),
                  static_cast<mpfr_prec_t>(backend_bits_for(bits)), MPFR_RNDN);
  return r;
}

std::string to_decimal_string(const Real& v) {
  return v.str(0, std::ios_base::scientific);
}

std::string to_decimal_string(const Real& v, unsigned digits) {
  return v.str(digits, std::ios_base::scientific);
}

Rational parse_rational(const std::string& text) {
  auto slash = text.find('/');
  if (slash != std::string::npos) {
    Rational num{text.substr(0, slash)};
    Rational den{text.substr(slash + 1)};
    return num / den;
  }
  // optional exponent: 1e-10, 2.5E3
  std::string mantissa = text;
  long exponent = 0;
  auto epos = text.find_first_of("eE");
  if (epos != std::string::npos) {
    mantissa = text.substr(0, epos);
    exponent = std::stol(text.substr(epos + 1));
  }
  auto dot = mantissa.find('.');
  Rational value;
  if (dot == std::string::npos) {
    value = Rational{mantissa};
  } else {
    std::string digits = mantissa.substr(0, dot) + mantissa.substr(dot + 1);
    std::size_t frac_len = mantissa.size() - dot - 1;
    BigInt den{1};
    for (std::size_t i = 0; i < frac_len; ++i) den *= 10;
    value = Rational{digits} / Rational{den};
  }
  BigInt pow10{1};
  for (long i = 0; i < (exponent < 0 ? -exponent : exponent); ++i) pow10 *= 10;
  if (exponent > 0) value *= Rational{pow10};
  if (exponent < 0) value /= Rational{pow10};
  return value;
}

}  // namespace sturm
