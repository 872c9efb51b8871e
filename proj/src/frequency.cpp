#include "sturm/frequency.hpp"

#include <algorithm>
#include <sstream>

#include "sturm/errors.hpp"

namespace sturm {

namespace {

std::vector<unsigned> parse_digit_list(const std::string& text) {
  std::vector<unsigned> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) throw ConfigError("empty digit in cf spec: '" + text + "'");
    for (char c : tok) {
      if (c < '0' || c > '9')
        throw ConfigError("bad digit token '" + tok + "' in cf spec");
    }
    unsigned long v = std::stoul(tok);
    if (v == 0) throw ConfigError("continued-fraction digit must be >= 1, got '" + tok + "'");
    out.push_back(static_cast<unsigned>(v));
  }
  if (out.empty()) throw ConfigError("empty digit list in cf spec: '" + text + "'");
  return out;
}

}  // namespace

FrequencySpec FrequencySpec::periodic(std::vector<unsigned> period) {
  if (period.empty()) throw ConfigError("periodic cf spec needs a non-empty period");
  for (unsigned d : period)
    if (d == 0) throw ConfigError("continued-fraction digits must be >= 1");
  FrequencySpec s;
  s.kind_ = CFKind::Periodic;
  s.period_ = std::move(period);
  return s;
}

FrequencySpec FrequencySpec::eventually_periodic(std::vector<unsigned> prefix,
                                                 std::vector<unsigned> period) {
  if (period.empty())
    throw ConfigError("eventually-periodic cf spec needs a non-empty period");
  for (unsigned d : prefix)
    if (d == 0) throw ConfigError("continued-fraction digits must be >= 1");
  for (unsigned d : period)
    if (d == 0) throw ConfigError("continued-fraction digits must be >= 1");
  FrequencySpec s;
  s.kind_ = CFKind::EventuallyPeriodic;
  s.prefix_ = std::move(prefix);
  s.period_ = std::move(period);
  return s;
}

FrequencySpec FrequencySpec::explicit_list(std::vector<unsigned> digits) {
  if (digits.empty()) throw ConfigError("explicit cf list must be non-empty");
  for (unsigned d : digits)
    if (d == 0) throw ConfigError("continued-fraction digits must be >= 1");
  FrequencySpec s;
  s.kind_ = CFKind::ExplicitList;
  s.period_ = std::move(digits);
  return s;
}

FrequencySpec FrequencySpec::formula_identity() {
  FrequencySpec s;
  s.kind_ = CFKind::Formula;
  return s;
}

FrequencySpec FrequencySpec::parse(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos)
    throw ConfigError("cf spec '" + text + "' missing ':' (expected e.g. periodic:1,2)");
  std::string head = text.substr(0, colon);
  std::string body = text.substr(colon + 1);
  if (head == "periodic") return periodic(parse_digit_list(body));
  if (head == "list") return explicit_list(parse_digit_list(body));
  if (head == "formula") {
    if (body != "k") throw ConfigError("unknown formula '" + body + "' (supported: k)");
    return formula_identity();
  }
  if (head == "eventually") {
    auto bar = body.find('|');
    if (bar == std::string::npos)
      throw ConfigError("eventually cf spec needs 'prefix|period', got '" + body + "'");
    return eventually_periodic(parse_digit_list(body.substr(0, bar)),
                               parse_digit_list(body.substr(bar + 1)));
  }
  throw ConfigError("unknown cf spec kind '" + head + "'");
}

unsigned FrequencySpec::digit(std::size_t k) const {
  if (k == 0) throw ConfigError("digit index is 1-based");
  switch (kind_) {
    case CFKind::Periodic:
      return period_[(k - 1) % period_.size()];
    case CFKind::EventuallyPeriodic:
      if (k <= prefix_.size()) return prefix_[k - 1];
      return period_[(k - 1 - prefix_.size()) % period_.size()];
    case CFKind::ExplicitList:
      if (k > period_.size()) {
        throw ListExhausted("explicit cf list has " + std::to_string(period_.size()) +
                            " digits, digit a_" + std::to_string(k) + " requested");
      }
      return period_[k - 1];
    case CFKind::Formula: {
      return static_cast<unsigned>(k);
    }
  }
  throw ConfigError("unreachable cf kind");
}

std::vector<unsigned> FrequencySpec::digits(std::size_t count) const {
  std::vector<unsigned> out;
  out.reserve(count);
  for (std::size_t k = 1; k <= count; ++k) out.push_back(digit(k));
  return out;
}

std::optional<std::size_t> FrequencySpec::max_digits() const {
  if (kind_ == CFKind::ExplicitList) return period_.size();
  return std::nullopt;
}

Real FrequencySpec::exact_digit_growth() const {
  if (!has_exact_limits())
    throw ConfigError("exact digit growth requires a (eventually) periodic spec");
  Real prod = real_from(1L);
  for (unsigned d : period_) prod *= static_cast<long>(d);
  Real exponent = real_from(1L) / static_cast<long>(period_.size());
  return pow(prod, exponent);
}

std::string FrequencySpec::to_string() const {
  auto join = [](const std::vector<unsigned>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(v[i]);
    }
    return s;
  };
  switch (kind_) {
    case CFKind::Periodic: return "periodic:" + join(period_);
    case CFKind::EventuallyPeriodic:
      return "eventually:" + join(prefix_) + "|" + join(period_);
    case CFKind::ExplicitList: return "list:" + join(period_);
    case CFKind::Formula: return "formula:k";
  }
  return "?";
}

Convergents convergents(std::span<const unsigned> digits) {
  Convergents c;
  c.p.reserve(digits.size() + 2);
  c.q.reserve(digits.size() + 2);
  c.p.emplace_back(1);  // p_{-1}
  c.p.emplace_back(0);  // p_0
  c.q.emplace_back(0);  // q_{-1}
  c.q.emplace_back(1);  // q_0
  for (unsigned a : digits) {
    const std::size_t n = c.p.size();
    c.p.push_back(BigInt{a} * c.p[n - 1] + c.p[n - 2]);
    c.q.push_back(BigInt{a} * c.q[n - 1] + c.q[n - 2]);
  }
  return c;
}

DigitStats digit_stats(std::span<const unsigned> digits, std::size_t tail_window) {
  if (digits.empty()) throw ConfigError("digit_stats needs at least one digit");
  DigitStats st;
  st.delta.reserve(digits.size());
  Real log_prod = real_from(0L);
  for (std::size_t k = 1; k <= digits.size(); ++k) {
    log_prod += log(real_from(static_cast<long>(digits[k - 1])));
    st.delta.push_back(exp(log_prod / static_cast<long>(k)));
  }
  std::size_t w = std::min(tail_window, st.delta.size());
  st.k_lo = st.delta.back();
  st.k_hi = st.delta.back();
  for (std::size_t i = st.delta.size() - w; i < st.delta.size(); ++i) {
    if (st.delta[i] < st.k_lo) st.k_lo = st.delta[i];
    if (st.delta[i] > st.k_hi) st.k_hi = st.delta[i];
  }
  return st;
}

DigitStats digit_stats(const FrequencySpec& spec, std::size_t count,
                       std::size_t tail_window) {
  auto ds = spec.digits(count);
  DigitStats st = digit_stats(std::span<const unsigned>(ds), tail_window);
  if (spec.has_exact_limits()) st.exact_limit = spec.exact_digit_growth();
  return st;
}

Real alpha_value(const FrequencySpec& spec, std::size_t max_terms, unsigned bits) {
  PrecisionScope scope(bits + 64);
  // q_k grows at least like Fibonacci, so q_k^2 > 2^bits long before the cap.
  std::vector<unsigned> ds;
  BigInt p0{1}, p1{0}, q0{0}, q1{1};
  BigInt threshold = BigInt{1} << (bits / 2 + 2);
  std::size_t k = 0;
  while (k < max_terms && q1 <= threshold) {
    ++k;
    unsigned a;
    try {
      a = spec.digit(k);
    } catch (const ListExhausted&) {
      break;
    }
    BigInt p2 = BigInt{a} * p1 + p0;
    BigInt q2 = BigInt{a} * q1 + q0;
    p0 = p1; p1 = p2;
    q0 = q1; q1 = q2;
  }
  if (k == 0) throw ConfigError("alpha_value needs at least one digit");
  Real num{p1};
  Real den{q1};
  return num / den;
}

}  // namespace sturm
