#include "sturm/tracecalc.hpp"

#include <cmath>

#include "sturm/errors.hpp"

namespace sturm {

namespace {

unsigned ceil_log2_unsigned(unsigned long long v) {
  unsigned bits = 0;
  unsigned long long x = 1;
  while (x < v) {
    x <<= 1;
    ++bits;
  }
  return bits;
}

void check_finite(const Real& v, const char* where) {
  if (!isfinite(v)) {
    throw PrecisionExhausted(std::string("non-finite value in ") + where);
  }
}

}  // namespace

unsigned PrecisionPolicy::growth_bits(const FrequencySpec& freq, const Real& V,
                                      std::size_t order) {
  const double t2 = 2.0 * (static_cast<double>(V) + 5.0);
  const unsigned log2_t2 = ceil_log2_unsigned(static_cast<unsigned long long>(std::ceil(t2)));
  unsigned long long sum = 0;
  for (std::size_t i = 1; i <= order; ++i) {
    unsigned a;
    try {
      a = freq.digit(i);
    } catch (const ListExhausted&) {
      break;
    }
    sum += static_cast<unsigned long long>(a) * log2_t2 + 3ull * ceil_log2_unsigned(a) + 2ull;
  }
  if (sum > 1u << 24) throw PrecisionExhausted("auto precision growth exceeds 2^24 bits");
  return static_cast<unsigned>(sum);
}

unsigned PrecisionPolicy::effective_bits(const FrequencySpec& freq, const Real& V,
                                         std::size_t order) const {
  unsigned base = bits < 64 ? 64u : bits;
  if (mode == Mode::Fixed) return base;
  return base + growth_bits(freq, V, order);
}

unsigned PrecisionPolicy::internal_bits(const FrequencySpec& freq, const Real& V,
                                        std::size_t order) const {
  unsigned base = bits < 64 ? 64u : bits;
  return base + growth_bits(freq, V, order + 1) + 32;
}

TraceEvaluator::TraceEvaluator(const FrequencySpec& freq, const Real& V,
                               const Real& x, std::size_t k_max,
                               bool want_derivative, unsigned eval_bits)
    : freq_(&freq) {
  PrecisionScope scope(eval_bits);
  V_ = round_to_bits(V, eval_bits);
  x_ = round_to_bits(x, eval_bits);

  digits_.reserve(k_max + 1);
  for (std::size_t i = 1; i <= k_max + 1; ++i) {
    try {
      digits_.push_back(freq.digit(i));
    } catch (const ListExhausted&) {
      if (i <= k_max)
        throw ListExhausted("trace table to order " + std::to_string(k_max) +
                            " needs digit a_" + std::to_string(i));
      break;
    }
  }

  rows_.resize(k_max + 1);
  if (want_derivative) drows_.resize(k_max + 1);
  const Real two = real_from(2L);

  for (std::size_t k = 0; k <= k_max; ++k) {
    const long ext = (k < digits_.size()) ? static_cast<long>(digits_[k]) : 1L;
    auto& row = rows_[k];
    row.reserve(static_cast<std::size_t>(ext) + 2);
    if (k == 0) {
      row.push_back(x_ + V_);  // p = -1
      row.push_back(two);      // p = 0
    } else {
      // T_k[-1] = T_{k-1}[a_k - 1], T_k[0] = tr M_{k-1}
      row.push_back(rows_[k - 1][digits_[k - 1]]);  // index (a_k - 1) + 1
      row.push_back(k == 1 ? x_ : rows_[k - 2][digits_[k - 2] + 1]);
    }
    const Real& uk = (k == 0) ? x_ : rows_[k - 1][digits_[k - 1] + 1];
    for (long p = 0; p < ext; ++p) {
      row.push_back(uk * row[static_cast<std::size_t>(p) + 1] -
                    row[static_cast<std::size_t>(p)]);
    }
    check_finite(row.back(), "trace recursion");

    if (want_derivative) {
      auto& drow = drows_[k];
      drow.reserve(static_cast<std::size_t>(ext) + 2);
      if (k == 0) {
        drow.push_back(real_from(1L));  // d/dx (x+V)
        drow.push_back(real_from(0L));  // d/dx 2
      } else {
        drow.push_back(drows_[k - 1][digits_[k - 1]]);
        drow.push_back(k == 1 ? real_from(1L) : drows_[k - 2][digits_[k - 2] + 1]);
      }
      const Real duk = (k == 0) ? real_from(1L) : drows_[k - 1][digits_[k - 1] + 1];
      for (long p = 0; p < ext; ++p) {
        const auto ip = static_cast<std::size_t>(p);
        drow.push_back(duk * row[ip + 1] + uk * drow[ip + 1] - drow[ip]);
      }
    }
  }
}

std::pair<std::size_t, long> TraceEvaluator::normalize(std::size_t k, long p) const {
  while (true) {
    if (p == -1) {
      if (k == 0) return {0, -1};  // seed x+V
      p = static_cast<long>(digits_[k - 1]) - 1;
      k -= 1;
      continue;
    }
    if (p == 0 && k >= 2) {
      p = static_cast<long>(digits_[k - 2]);
      k -= 2;
      continue;
    }
    return {k, p};
  }
}

const Real& TraceEvaluator::trace(std::size_t k, long p) const {
  auto [nk, np] = normalize(k, p);
  if (nk >= rows_.size() || np > extent(nk)) {
    throw IndexOutOfTable("trace index (" + std::to_string(k) + "," +
                          std::to_string(p) + ") outside table");
  }
  return rows_[nk][static_cast<std::size_t>(np + 1)];
}

const Real& TraceEvaluator::dtrace(std::size_t k, long p) const {
  if (drows_.empty()) throw IndexOutOfTable("table built without derivatives");
  auto [nk, np] = normalize(k, p);
  if (nk >= drows_.size() || np > extent(nk)) {
    throw IndexOutOfTable("trace index (" + std::to_string(k) + "," +
                          std::to_string(p) + ") outside table");
  }
  return drows_[nk][static_cast<std::size_t>(np + 1)];
}

const Real& TraceEvaluator::u(std::size_t k) const {
  if (k == 0) return x_;
  return trace(k - 1, static_cast<long>(digits_.at(k - 1)));
}

const Real& TraceEvaluator::du(std::size_t k) const {
  return dtrace(k - 1, static_cast<long>(digits_.at(k - 1)));
}

const Real& TraceLevelTable::at(std::size_t k, long p) const {
  if (k >= t.size() || p < -1 || p > extent(k))
    throw IndexOutOfTable("table index (" + std::to_string(k) + "," +
                          std::to_string(p) + ")");
  return t[k][static_cast<std::size_t>(p + 1)];
}

const Real& TraceLevelTable::dat(std::size_t k, long p) const {
  if (d.empty()) throw IndexOutOfTable("table has no derivative channel");
  if (k >= d.size() || p < -1 || p > extent(k))
    throw IndexOutOfTable("table index (" + std::to_string(k) + "," +
                          std::to_string(p) + ")");
  return d[k][static_cast<std::size_t>(p + 1)];
}

TraceLevelTable eval_traces(const FrequencySpec& freq, const Real& V,
                            const Real& x, std::size_t k_max,
                            bool want_derivative, PrecisionPolicy prec) {
  const unsigned out_bits = prec.effective_bits(freq, V, k_max);
  const unsigned eval_bits = prec.internal_bits(freq, V, k_max);
  TraceEvaluator ev(freq, V, x, k_max, want_derivative, eval_bits);

  TraceLevelTable table;
  table.x = round_to_bits(x, out_bits);
  table.V = round_to_bits(V, out_bits);
  table.value_bits = out_bits;
  for (std::size_t i = 1; i <= k_max + 1; ++i) {
    try {
      table.digits.push_back(freq.digit(i));
    } catch (const ListExhausted&) {
      break;
    }
  }
  table.t.resize(k_max + 1);
  if (want_derivative) table.d.resize(k_max + 1);
  for (std::size_t k = 0; k <= k_max; ++k) {
    const long ext = ev.extent(k);
    for (long p = -1; p <= ext; ++p) {
      table.t[k].push_back(round_to_bits(ev.trace(k, p), out_bits));
      if (want_derivative)
        table.d[k].push_back(round_to_bits(ev.dtrace(k, p), out_bits));
    }
    if (k == 0 || k <= table.digits.size()) {
      table.u.push_back(round_to_bits(ev.u(k), out_bits));
    }
  }
  return table;
}

Real matrix_oracle(const FrequencySpec& freq, const Real& V, const Real& x,
                   long k, PrecisionPolicy prec) {
  const unsigned out_bits =
      prec.effective_bits(freq, V, k < 0 ? 0 : static_cast<std::size_t>(k));
  if (k == -1) return round_to_bits(real_from(2L), out_bits);
  if (k == 0) return round_to_bits(x, out_bits);

  const auto uk = static_cast<std::size_t>(k);
  std::vector<unsigned> ds = freq.digits(uk);  // throws ListExhausted if short
  Convergents conv = convergents(ds);
  const BigInt& qk = conv.q_at(k);
  if (qk > 1000000) {
    throw DepthTooLarge("q_" + std::to_string(k) + " = " + qk.str() +
                        " exceeds the 10^6 site cap");
  }
  const auto sites = static_cast<unsigned long>(qk);

  // Convergent used for the potential: a few digits past k when available.
  std::size_t m = uk;
  for (std::size_t i = uk + 1; i <= uk + 8; ++i) {
    try {
      ds.push_back(freq.digit(i));
      m = i;
    } catch (const ListExhausted&) {
      break;
    }
  }
  Convergents cm = convergents(ds);
  const BigInt& pm = cm.p_at(static_cast<long>(m));
  const BigInt& qm = cm.q_at(static_cast<long>(m));
  const bool m_odd = (m % 2) == 1;

  const unsigned guard = 64 + 2 * ceil_log2_unsigned(sites + 2) +
                         PrecisionPolicy::growth_bits(freq, V, uk + 1);
  const unsigned eval_bits = out_bits + guard;
  PrecisionScope scope(eval_bits);
  const Real xe = round_to_bits(x, eval_bits);
  const Real Ve = round_to_bits(V, eval_bits);
  const Real x_minus_V = xe - Ve;

  // v_n = V * (floor((n+1) alpha) - floor(n alpha)) with floors taken exactly
  // against p_m/q_m: floor(n alpha) = floor(n p_m / q_m) + corr(n), where
  // corr(n) = -1 when q_m | n, n > 0 and m is odd (alpha below the convergent).
  BigInt r = pm % qm;  // (n * p_m) mod q_m at n = 1
  int corr_prev = (m_odd && r == 0) ? -1 : 0;
  // accumulate P(n) = S(n) P(n-1) for n = 1..q_k, P(0) = I, which gives
  // M_k = S(q_k)...S(1) with S(n) = [[x - v_n, -1], [1, 0]]
  Real a = real_from(1L), b = real_from(0L), c = real_from(0L), d = real_from(1L);
  for (unsigned long n = 1; n <= sites; ++n) {
    // advance r from n p_m mod q_m to (n+1) p_m mod q_m; the carry is the
    // floor increment of n p_m / q_m
    r += pm;
    int carry = 0;
    if (r >= qm) {
      r -= qm;
      carry = 1;
    }
    const int corr_here = (m_odd && r == 0) ? -1 : 0;
    const int vn = carry + corr_here - corr_prev;  // in {0, 1}
    corr_prev = corr_here;

    const Real& t = (vn != 0) ? x_minus_V : xe;
    Real na = t * a - c;
    Real nb = t * b - d;
    c = a;
    d = b;
    a = std::move(na);
    b = std::move(nb);
  }
  Real tr = a + d;
  check_finite(tr, "matrix oracle product");
  return round_to_bits(tr, out_bits);
}

Real chebyshev_S(long p, const Real& t, Real* dS) {
  if (p < 0) throw IndexOutOfTable("chebyshev_S needs p >= 0");
  Real s0 = real_from(0L), s1 = real_from(1L);
  Real d0 = real_from(0L), d1 = real_from(0L);
  if (p == 0) {
    if (dS) *dS = d0;
    return s0;
  }
  for (long i = 1; i < p; ++i) {
    Real s2 = t * s1 - s0;
    if (dS) {
      Real d2 = s1 + t * d1 - d0;
      d0 = std::move(d1);
      d1 = std::move(d2);
    }
    s0 = std::move(s1);
    s1 = std::move(s2);
  }
  if (dS) *dS = d1;
  return s1;
}

Real z_branch(const Real& x, const Real& y, const Real& V, int sign) {
  Real disc = 4 * V * V + (4 - x * x) * (4 - y * y);
  if (disc < 0) {
    throw NegativeDiscriminant("z_branch discriminant negative at x=" +
                               to_decimal_string(x, 12) + " y=" +
                               to_decimal_string(y, 12));
  }
  Real root = sqrt(disc);
  if (sign >= 0) return (x * y + root) / 2;
  return (x * y - root) / 2;
}

Real lambda_residual(const Real& a, const Real& b, const Real& c, const Real& V) {
  Real r = a * a + b * b - 4 - V * V + c * (c - a * b);
  return abs(r);
}

Real fricke_residual(const TraceLevelTable& table, std::size_t k, long p) {
  if (k >= table.u.size())
    throw IndexOutOfTable("fricke_residual: no u_k for k=" + std::to_string(k));
  if (p < -1 || p + 1 > table.extent(k))
    throw IndexOutOfTable("fricke_residual: p=" + std::to_string(p) +
                          " out of row " + std::to_string(k));
  return lambda_residual(table.at(k, p), table.at(k, p + 1), table.u[k], table.V);
}

}  // namespace sturm
