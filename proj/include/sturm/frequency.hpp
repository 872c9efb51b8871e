#ifndef STURM_FREQUENCY_HPP
#define STURM_FREQUENCY_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sturm/real.hpp"

namespace sturm {

enum class CFKind { Periodic, EventuallyPeriodic, ExplicitList, Formula };

// The frequency alpha, represented by the rule generating its continued
// fraction digits a_1, a_2, ...  Every digit is a positive integer.
class FrequencySpec {
 public:
  static FrequencySpec periodic(std::vector<unsigned> period);
  static FrequencySpec eventually_periodic(std::vector<unsigned> prefix,
                                           std::vector<unsigned> period);
  static FrequencySpec explicit_list(std::vector<unsigned> digits);
  static FrequencySpec formula_identity();  // a_k = k

  // Grammar: "periodic:1,2" | "eventually:2,3|1" | "list:1,2,3" | "formula:k"
  static FrequencySpec parse(const std::string& text);

  CFKind kind() const { return kind_; }

  // 1-based digit access; throws ListExhausted past an explicit list.
  unsigned digit(std::size_t k) const;
  std::vector<unsigned> digits(std::size_t count) const;

  // Number of digits available (ExplicitList only).
  std::optional<std::size_t> max_digits() const;

  bool has_exact_limits() const {
    return kind_ == CFKind::Periodic || kind_ == CFKind::EventuallyPeriodic;
  }
  // prefix/period lengths of the digit rule; period 0 when aperiodic
  std::size_t prefix_length() const {
    return kind_ == CFKind::EventuallyPeriodic ? prefix_.size() : 0;
  }
  std::size_t period_length() const {
    return has_exact_limits() ? period_.size() : 0;
  }
  // True when (a_1...a_k)^{1/k} -> infinity (the a_k = k formula).
  bool geometric_mean_diverges() const { return kind_ == CFKind::Formula; }
  // (prod period digits)^{1/P}; requires has_exact_limits().
  Real exact_digit_growth() const;

  std::string to_string() const;

  // Default-constructed specs are placeholders; use the factories.
  FrequencySpec() = default;

 private:
  CFKind kind_ = CFKind::Periodic;
  std::vector<unsigned> prefix_;
  std::vector<unsigned> period_;  // also the list payload for ExplicitList
};

// Exact integer convergents p_i/q_i, i = -1..n, with the standard seeds
// p_{-1}=1, p_0=0, q_{-1}=0, q_0=1.
struct Convergents {
  std::vector<BigInt> p;  // p[i+1] holds p_i
  std::vector<BigInt> q;

  const BigInt& p_at(long i) const { return p.at(static_cast<std::size_t>(i + 1)); }
  const BigInt& q_at(long i) const { return q.at(static_cast<std::size_t>(i + 1)); }
  // Largest k with q_k stored.
  long order() const { return static_cast<long>(q.size()) - 2; }
};

Convergents convergents(std::span<const unsigned> digits);

// Geometric-mean statistics delta_k = (a_1...a_k)^{1/k} with finite-horizon
// stand-ins for K_* and K^*: min/max of delta over the trailing window.
struct DigitStats {
  std::vector<Real> delta;
  Real k_lo;
  Real k_hi;
  std::optional<Real> exact_limit;
};

DigitStats digit_stats(std::span<const unsigned> digits,
                       std::size_t tail_window = 4);
DigitStats digit_stats(const FrequencySpec& spec, std::size_t count,
                       std::size_t tail_window = 4);

// alpha = [0; a_1, a_2, ...] materialized from convergents at the requested
// precision, using as many digits as needed (capped by max_terms).
Real alpha_value(const FrequencySpec& spec, std::size_t max_terms, unsigned bits);

}  // namespace sturm

#endif
