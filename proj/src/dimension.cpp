#include "sturm/dimension.hpp"

#include <algorithm>
#include <limits>

#include "sturm/errors.hpp"

namespace sturm {

namespace {

void require_level(const BandTree& tree, std::size_t k) {
  if (k >= tree.levels.size()) {
    throw DepthUnavailable("level " + std::to_string(k) +
                           " not present (depth " +
                           std::to_string(tree.depth()) + ")");
  }
}

}  // namespace

SumBounds band_sum(const BandTree& tree, std::size_t k, const Real& beta) {
  require_level(tree, k);
  PrecisionScope scope(tree.eval_bits);
  SumBounds out{real_from(0L), real_from(0L)};
  for (const BandNode& node : tree.level(k)) {
    out.lower += pow(node.len_lower(), beta);
    out.upper += pow(node.len_upper(), beta);
  }
  return out;
}

SkResult solve_sk(const BandTree& tree, std::size_t k, const Real& tol) {
  require_level(tree, k);
  PrecisionScope scope(tree.eval_bits);

  SumBounds at_one = band_sum(tree, k, real_from(1L));
  if (at_one.lower >= 1) {
    throw NoRootInUnitInterval("b_{k,1} >= 1 at level " + std::to_string(k) +
                               "; root clamped to 1");
  }

  // beta -> b_{k,beta} is strictly decreasing once every length < 1
  auto solve_on = [&](bool use_upper) -> Real {
    auto value = [&](const Real& beta) {
      SumBounds b = band_sum(tree, k, beta);
      return use_upper ? b.upper : b.lower;
    };
    if (value(real_from(1L)) >= 1) return real_from(1L);  // clamped end
    Real lo = real_from(0L), hi = real_from(1L);
    // value(0) = band count >= 1, value(1) < 1: bisect on b - 1
    for (unsigned iter = 0; iter < 4000; ++iter) {
      Real mid = (lo + hi) / 2;
      Real v = value(mid);
      if (abs(v - 1) < tol) return mid;
      if (v > 1) {
        lo = std::move(mid);
      } else {
        hi = std::move(mid);
      }
      if (hi - lo < tol * tol) break;
    }
    return (lo + hi) / 2;
  };

  SkResult res;
  // inner sums are smaller -> smaller root; outer sums -> larger root
  res.s_lo = solve_on(false);
  res.s_hi = solve_on(true);
  res.clamped = at_one.upper >= 1;
  return res;
}

Real gap_sum(const BandTree& tree, std::size_t k, const Real& s) {
  require_level(tree, k + 1);
  PrecisionScope scope(tree.eval_bits);
  Real total = real_from(0L);
  for (const Gap& g : gaps_of_order(tree, k)) {
    total += pow(g.length(), s);
  }
  return total;
}

// --- growth matrices ---------------------------------------------------------

Mat3 Mat3::zero() {
  Mat3 z;
  for (auto& e : z.m) e = real_from(0L);
  return z;
}

Mat3 Mat3::identity() {
  Mat3 z = zero();
  z.m[0] = z.m[4] = z.m[8] = real_from(1L);
  return z;
}

Mat3 Mat3::operator*(const Mat3& rhs) const {
  Mat3 out = zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Real acc = m[3 * i] * rhs.m[j];
      acc += m[3 * i + 1] * rhs.m[3 + j];
      acc += m[3 * i + 2] * rhs.m[6 + j];
      out.m[3 * i + j] = std::move(acc);
    }
  return out;
}

Real Mat3::max_entry() const {
  Real best = abs(m[0]);
  for (int i = 1; i < 9; ++i) {
    Real a = abs(m[i]);
    if (a > best) best = a;
  }
  return best;
}

Mat3 growth_matrix(unsigned a_n, const Real& x) {
  Mat3 R = Mat3::zero();
  const long a = static_cast<long>(a_n);
  // x^0 = 1 by convention, also at x = 0
  R.m[1] = (a_n == 1) ? real_from(1L) : pow(x, a - 1);
  R.m[3] = (a + 1) * x;
  R.m[5] = a * x;
  R.m[6] = a * x;
  R.m[8] = (a - 1) * x;
  return R;
}

GrowthResult growth_product(const FrequencySpec& freq, const Real& x,
                            std::size_t n, unsigned bits) {
  PrecisionScope scope(bits);
  const Real xe = round_to_bits(x, bits);
  Mat3 S = growth_matrix(freq.digit(1), xe);
  Real log_scale = real_from(0L);
  for (std::size_t i = 2; i <= n; ++i) {
    S = S * growth_matrix(freq.digit(i), xe);
    Real scale = S.max_entry();
    if (scale == 0) {
      GrowthResult r;
      r.zero = true;
      r.log_norm = real_from(0L);
      r.norm_root = real_from(0L);
      return r;
    }
    for (auto& e : S.m) e /= scale;
    log_scale += log(scale);
  }
  GrowthResult r;
  Real norm = S.max_entry();
  if (norm == 0) {
    r.zero = true;
    r.log_norm = real_from(0L);
    r.norm_root = real_from(0L);
    return r;
  }
  r.log_norm = log_scale + log(norm);
  r.norm_root = exp(r.log_norm / static_cast<long>(n));
  return r;
}

Real perron_root(const Mat3& M, unsigned bits) {
  PrecisionScope scope(bits);
  // characteristic polynomial p(z) = z^3 - c2 z^2 + c1 z - c0
  const Real* m = M.m;
  Real c2 = m[0] + m[4] + m[8];
  Real c1 = m[0] * m[4] - m[1] * m[3] + m[0] * m[8] - m[2] * m[6] +
            m[4] * m[8] - m[5] * m[7];
  Real c0 = m[0] * (m[4] * m[8] - m[5] * m[7]) -
            m[1] * (m[3] * m[8] - m[5] * m[6]) +
            m[2] * (m[3] * m[7] - m[4] * m[6]);
  // start above all roots: 1 + max row sum
  Real hi = real_from(0L);
  for (int i = 0; i < 3; ++i) {
    Real row = abs(m[3 * i]) + abs(m[3 * i + 1]) + abs(m[3 * i + 2]);
    if (row > hi) hi = row;
  }
  Real z = hi + 1;
  const Real tol = ldexp(hi + 1, -static_cast<long>(bits) + 8);
  for (unsigned iter = 0; iter < 8 * bits; ++iter) {
    Real p = ((z - c2) * z + c1) * z - c0;
    Real dp = (3 * z - 2 * c2) * z + c1;
    if (dp <= 0) break;  // left of the convex region; z is at the root
    Real step = p / dp;
    z -= step;
    if (abs(step) < tol) break;
  }
  if (z < 0) z = real_from(0L);
  return z;
}

namespace {

// growth rate of the (eventually) periodic product: rho(period matrix)^{1/P}
Real exact_rate(const FrequencySpec& freq, const Real& x, unsigned bits) {
  const std::size_t pre = freq.prefix_length();
  const std::size_t period = freq.period_length();
  if (period == 0) throw ConfigError("exact_rate needs a periodic spec");
  PrecisionScope scope(bits);
  const Real xe = round_to_bits(x, bits);
  Mat3 P = Mat3::identity();
  Real log_scale = real_from(0L);
  for (std::size_t i = pre + 1; i <= pre + period; ++i) {
    P = P * growth_matrix(freq.digit(i), xe);
    Real scale = P.max_entry();
    if (scale == 0) return real_from(0L);
    for (auto& e : P.m) e /= scale;
    log_scale += log(scale);
  }
  Real rho = perron_root(P, bits);
  if (rho <= 0) return real_from(0L);
  // rho(full period product) = rho(P_scaled) * exp(log_scale)
  Real log_rho = log(rho) + log_scale;
  return exp(log_rho / static_cast<long>(period));
}

// digit horizon clamped to an explicit list's length
std::size_t clamp_terms(const FrequencySpec& freq, std::size_t want) {
  if (auto avail = freq.max_digits()) return std::min(*avail, want);
  return want;
}

}  // namespace

PsiPhi psi_phi(const FrequencySpec& freq, const Real& x, std::size_t n_max,
               unsigned bits, std::size_t tail_window) {
  PrecisionScope scope(bits);
  PsiPhi out;
  if (x == 0) {
    out.psi = out.phi = out.ratio_estimate = real_from(0L);
    out.exact = true;
    return out;
  }
  const Real xe = round_to_bits(x, bits);
  Mat3 S = growth_matrix(freq.digit(1), xe);
  Real log_scale = real_from(0L);
  std::vector<Real> log_norms;  // ln||S_n|| for n = 1..n_max
  log_norms.push_back(log(S.max_entry()));
  for (std::size_t i = 2; i <= n_max; ++i) {
    S = S * growth_matrix(freq.digit(i), xe);
    Real scale = S.max_entry();
    if (scale == 0) {
      out.psi = out.phi = out.ratio_estimate = real_from(0L);
      out.exact = true;
      return out;
    }
    for (auto& e : S.m) e /= scale;
    log_scale += log(scale);
    log_norms.push_back(log_scale + log(S.max_entry()));
  }
  const std::size_t w = std::min(tail_window, log_norms.size() - 1);
  bool first = true;
  for (std::size_t n = log_norms.size() - w; n <= log_norms.size(); ++n) {
    Real root = exp(log_norms[n - 1] / static_cast<long>(n));
    if (first || root < out.psi) out.psi = root;
    if (first || root > out.phi) out.phi = root;
    first = false;
  }
  // norm-ratio estimate over the trailing window (sharp for periodic tails)
  out.ratio_estimate = exp(
      (log_norms.back() - log_norms[log_norms.size() - 1 - w]) /
      static_cast<long>(w));
  if (freq.has_exact_limits()) {
    Real e = exact_rate(freq, xe, bits);
    out.psi = e;
    out.phi = e;
    out.ratio_estimate = e;
    out.exact = true;
  }
  return out;
}

FStarResult f_star(const FrequencySpec& freq, Functional which, const Real& tol,
                   std::size_t n_max, unsigned bits) {
  PrecisionScope scope(bits);
  FStarResult res;
  if (freq.geometric_mean_diverges()) {
    res.value = real_from(0L);
    res.minus_log = std::numeric_limits<Real>::infinity();
    res.k_infinite = true;
    return res;
  }
  res.exact_mode = freq.has_exact_limits();
  const std::size_t horizon = clamp_terms(freq, std::max<std::size_t>(n_max, 64));

  // K for the bracket: exact when available, else finite-horizon tail value
  DigitStats stats = digit_stats(freq, horizon);
  Real K = res.exact_mode ? freq.exact_digit_growth()
                          : (which == Functional::Lower ? stats.k_lo : stats.k_hi);

  // rate(x) >= 1 decides the bisection; the K-bracket seeds the interval
  auto rate = [&](const Real& x) -> Real {
    if (res.exact_mode) return exact_rate(freq, x, bits);
    PsiPhi pp = psi_phi(freq, x, clamp_terms(freq, n_max), bits);
    return pp.ratio_estimate;
  };
  Real lo = 1 / (2 * K * K) / 2;
  Real cap = pow(real_from(2L), Real(-1) / 3);
  Real hi = 2 / K;
  if (hi > cap) hi = cap;
  // ensure a valid bracket
  for (int i = 0; i < 60 && rate(lo) >= 1; ++i) lo /= 2;
  for (int i = 0; i < 60 && rate(hi) < 1; ++i) {
    hi *= 2;
    if (hi > 1) {
      hi = real_from(1L);
      break;
    }
  }
  while (hi - lo > tol) {
    Real mid = (lo + hi) / 2;
    if (rate(mid) >= 1) {
      hi = std::move(mid);
    } else {
      lo = std::move(mid);
    }
  }
  res.value = (lo + hi) / 2;
  res.minus_log = -log(res.value);
  return res;
}

// --- sandwich matrices (the 'bulb' verify suite) ------------------------------

namespace {

Mat3 q_matrix(unsigned a_k, const Real& t, const Real& gamma, bool cubic_weight) {
  // entries: [[0, t^{-g(a-1)}, 0], [(a+1) w, 0, a w], [a w, 0, (a-1) w]]
  // with w = (t a)^{-g} or (t a^3)^{-g}
  Mat3 Q = Mat3::zero();
  const long a = static_cast<long>(a_k);
  Q.m[1] = pow(t, -gamma * (a - 1));
  Real base = t * a;
  if (cubic_weight) base *= a * a;
  Real w = pow(base, -gamma);
  Q.m[3] = (a + 1) * w;
  Q.m[5] = a * w;
  Q.m[6] = a * w;
  Q.m[8] = (a - 1) * w;
  return Q;
}

Real bracket_product(const FrequencySpec& freq, const Real& t,
                     const Real& gamma, std::size_t k, bool cubic_weight) {
  // (1,0,1) Q_1...Q_k (1,1,1)^t; k = 0 gives the bare (1,0,1)(1,1,1)^t = 2
  Real v0 = real_from(1L), v1 = real_from(0L), v2 = real_from(1L);
  for (std::size_t i = 1; i <= k; ++i) {
    Mat3 Q = q_matrix(freq.digit(i), t, gamma, cubic_weight);
    Real n0 = v0 * Q.m[0] + v1 * Q.m[3] + v2 * Q.m[6];
    Real n1 = v0 * Q.m[1] + v1 * Q.m[4] + v2 * Q.m[7];
    Real n2 = v0 * Q.m[2] + v1 * Q.m[5] + v2 * Q.m[8];
    v0 = std::move(n0);
    v1 = std::move(n1);
    v2 = std::move(n2);
  }
  return v0 + v1 + v2;
}

}  // namespace

SumBounds matrix_bound_b(const FrequencySpec& freq, const Real& V,
                         const Real& gamma, std::size_t k, unsigned bits) {
  PrecisionScope scope(bits);
  const Real Ve = round_to_bits(V, bits);
  const Real g = round_to_bits(gamma, bits);
  const Real t1 = (Ve - 8) / 3;
  const Real t2 = 2 * (Ve + 5);
  SumBounds out;
  out.upper = pow(real_from(4L), g) * bracket_product(freq, t1, g, k, false);
  out.lower = bracket_product(freq, t2, g, k, true);
  return out;
}

Real matrix_bound_unbounded(const FrequencySpec& freq, const Real& V,
                            const Real& gamma, std::size_t k, unsigned bits) {
  PrecisionScope scope(bits);
  const Real Ve = round_to_bits(V, bits);
  const Real g = round_to_bits(gamma, bits);
  const Real t2 = 2 * (Ve + 5);
  // Qhat: [[0, t2^{-g(a-1)}, 0], [a/4 w, 0, a/4 w], [a/4 w, 0, a/4 w]],
  // w = (t2 a/4)^{-g}
  Real v0 = real_from(1L), v1 = real_from(0L), v2 = real_from(1L);
  for (std::size_t i = 1; i <= k; ++i) {
    const long a = static_cast<long>(freq.digit(i));
    Real quarter = Real(a) / 4;
    Real w = pow(t2 * quarter, -g);
    Real e12v = pow(t2, -g * (a - 1));
    Real qw = quarter * w;
    Real n0 = v1 * qw + v2 * qw;
    Real n1 = v0 * e12v;
    Real n2 = v1 * qw + v2 * qw;
    v0 = std::move(n0);
    v1 = std::move(n1);
    v2 = std::move(n2);
  }
  return v0 + v1 + v2;
}

// --- brackets / asymptotics ---------------------------------------------------

DimBracket dim_bracket_lower(const FrequencySpec& freq, const Real& V,
                             const Real& tol, std::size_t n_max) {
  DimBracket out;
  if (freq.geometric_mean_diverges()) {
    out.lo = out.hi = real_from(1L);
    out.degenerate_one = true;
    return out;
  }
  FStarResult f = f_star(freq, Functional::Lower, tol, n_max);
  DigitStats stats =
      digit_stats(freq, clamp_terms(freq, std::max<std::size_t>(n_max, 64)));
  Real K = freq.has_exact_limits() ? freq.exact_digit_growth() : stats.k_lo;
  const Real t1 = (V - 8) / 3;
  const Real t2 = 2 * (V + 5);
  out.lo = f.minus_log / (6 * log(4 * K * K) + log(t2));
  out.hi = f.minus_log / log(t1);
  return out;
}

DimBracket dim_bracket_upper(const FrequencySpec& freq, const Real& V,
                             const Real& tol, std::size_t n_max) {
  DimBracket out;
  if (freq.geometric_mean_diverges()) {
    out.lo = out.hi = real_from(1L);
    out.degenerate_one = true;
    return out;
  }
  FStarResult f = f_star(freq, Functional::Upper, tol, n_max);
  DigitStats stats =
      digit_stats(freq, clamp_terms(freq, std::max<std::size_t>(n_max, 64)));
  Real K = freq.has_exact_limits() ? freq.exact_digit_growth() : stats.k_hi;
  const Real t1 = (V - 8) / 3;
  const Real t2 = 2 * (V + 5);
  out.lo = f.minus_log / (6 * log(2 * K) + log(t2));
  Real cap = (log(K) + log(real_from(2L)) / 2) / (log(K) + log(t1));
  out.hi = f.minus_log / log(t1);
  if (K > 1 && cap < out.hi) out.hi = cap;
  return out;
}

AsymptoticPrediction asymptotic_prediction(const FrequencySpec& freq,
                                           const Real& tol, std::size_t n_max) {
  AsymptoticPrediction out;
  FStarResult fl = f_star(freq, Functional::Lower, tol, n_max);
  FStarResult fu = f_star(freq, Functional::Upper, tol, n_max);
  out.k_infinite = fl.k_infinite;
  out.minus_log_f_lower = fl.minus_log;
  out.minus_log_f_upper = fu.minus_log;
  return out;
}

Real lipschitz_probe(const FrequencySpec& freq, const Real& V1, const Real& V2,
                     std::size_t k, const Rational& eps,
                     const PrecisionPolicy& prec, const Real& tol) {
  if (V1 == V2) return real_from(0L);
  ExpandOptions opts;
  opts.epsilon = eps;
  opts.prec = prec;
  opts.check_monotone = false;
  BandTree t1 = expand_tree(freq, V1, k, opts);
  BandTree t2 = expand_tree(freq, V2, k, opts);
  Real s1 = solve_sk(t1, k, tol).mid();
  Real s2 = solve_sk(t2, k, tol).mid();
  return abs(s1 - s2) / abs(V1 - V2);
}

Real sk_lower_bound_unbounded(const Real& delta_k, const Real& V) {
  const Real t2 = 2 * (V + 5);
  return (log(delta_k) - log(real_from(8L))) / (log(delta_k) + log(t2 / 4));
}

}  // namespace sturm
