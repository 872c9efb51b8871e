#ifndef STURM_TRACECALC_HPP
#define STURM_TRACECALC_HPP

#include <cstddef>
#include <vector>

#include "sturm/frequency.hpp"
#include "sturm/real.hpp"

namespace sturm {

// Identifies the trace polynomial t_{(k,p)}(x) = tr(M_{k-1} M_k^p).
struct PolyId {
  std::size_t k = 0;
  long p = 0;
  friend bool operator==(const PolyId&, const PolyId&) = default;
};

// Precision policy for trace evaluation. `bits` is the precision of the
// values handed back; evaluation internally carries guard bits sized to the
// recursion depth so outputs are accurate near their own last bit. The Auto
// mode grows the output precision with the order, following the rate at
// which band endpoint separations shrink.
struct PrecisionPolicy {
  enum class Mode { Fixed, Auto };
  Mode mode = Mode::Auto;
  unsigned bits = 64;  // Fixed: output bits; Auto: base bits

  static PrecisionPolicy fixed(unsigned bits) { return {Mode::Fixed, bits}; }
  static PrecisionPolicy auto_grown(unsigned base_bits = 64) {
    return {Mode::Auto, base_bits};
  }

  // Per-order growth: sum_{i<=n} (a_i ceil(log2 t2) + 3 ceil(log2 a_i) + 2),
  // t2 = 2(V+5). Digits past an explicit list contribute nothing.
  static unsigned growth_bits(const FrequencySpec& freq, const Real& V,
                              std::size_t order);

  unsigned effective_bits(const FrequencySpec& freq, const Real& V,
                          std::size_t order) const;
  unsigned internal_bits(const FrequencySpec& freq, const Real& V,
                         std::size_t order) const;
};

// Dense per-level trace table at one evaluation point: row k holds
// T_k[p] = t_{(k,p)}(x) for p in [-1, ext_k], ext_k = a_{k+1} where that
// digit exists (1 otherwise). Rows obey the three-term recursion
// T_k[p+1] = u_k T_k[p] - T_k[p-1] with u_k = tr M_k.
class TraceEvaluator {
 public:
  TraceEvaluator(const FrequencySpec& freq, const Real& V, const Real& x,
                 std::size_t k_max, bool want_derivative, unsigned eval_bits);

  // t_{(k,p)}(x); ids with p in {0,-1} are normalized through the
  // renormalization identities, so k may exceed k_max by up to 2.
  const Real& trace(std::size_t k, long p) const;
  const Real& dtrace(std::size_t k, long p) const;
  Real poly_value(PolyId id) const { return trace(id.k, id.p); }
  Real poly_deriv(PolyId id) const { return dtrace(id.k, id.p); }

  // tr M_k and its x-derivative, k in [0, k_max-1] (k_max if a_{k_max+1} known).
  const Real& u(std::size_t k) const;
  const Real& du(std::size_t k) const;

  std::size_t k_max() const { return rows_.size() - 1; }
  long extent(std::size_t k) const {
    return static_cast<long>(rows_[k].size()) - 2;
  }
  const Real& x() const { return x_; }
  const Real& V() const { return V_; }
  bool has_derivative() const { return !drows_.empty(); }

 private:
  std::pair<std::size_t, long> normalize(std::size_t k, long p) const;
  const FrequencySpec* freq_;
  Real V_, x_;
  std::vector<std::vector<Real>> rows_;   // rows_[k][p+1]
  std::vector<std::vector<Real>> drows_;
  std::vector<unsigned> digits_;          // a_1..a_{k_max+1} (as available)
};

// Materialized snapshot used for dumps and residual checks.
struct TraceLevelTable {
  Real x, V;
  unsigned value_bits = 0;
  std::vector<unsigned> digits;
  std::vector<std::vector<Real>> t;  // t[k][p+1]
  std::vector<std::vector<Real>> d;  // empty when no derivative channel
  std::vector<Real> u;               // u[k] = tr M_k

  long extent(std::size_t k) const { return static_cast<long>(t[k].size()) - 2; }
  const Real& at(std::size_t k, long p) const;
  const Real& dat(std::size_t k, long p) const;
};

TraceLevelTable eval_traces(const FrequencySpec& freq, const Real& V,
                            const Real& x, std::size_t k_max,
                            bool want_derivative, PrecisionPolicy prec);

// Trace of the explicit transfer-matrix product over q_k sites, with the
// Sturmian potential v_n = V when (n alpha mod 1) in [1-alpha, 1). The
// potential is evaluated exactly from a convergent p_m/q_m, so the oracle
// shares no code path with the recursion. k >= -1; q_k capped at 10^6.
Real matrix_oracle(const FrequencySpec& freq, const Real& V, const Real& x,
                   long k, PrecisionPolicy prec);

// Chebyshev polynomials of the second kind scaled per S_0 = 0, S_1 = 1,
// S_{p+1}(t) = t S_p(t) - S_{p-1}(t). Derivative written when dS != nullptr.
Real chebyshev_S(long p, const Real& t, Real* dS = nullptr);

// z on the Fricke surface Lambda(x,y,z) = V^2:
// z = xy/2 + sign * sqrt(4V^2 + (4-x^2)(4-y^2)) / 2.
Real z_branch(const Real& x, const Real& y, const Real& V, int sign);

// |Lambda(a,b,c) - V^2| evaluated in the grouping a^2+b^2-4-V^2 + c(c-ab).
Real lambda_residual(const Real& a, const Real& b, const Real& c, const Real& V);

// |Lambda(t_{(k+1,0)}, t_{(k,p)}, t_{(k,p+1)}) - V^2| on stored table entries.
Real fricke_residual(const TraceLevelTable& table, std::size_t k, long p);

}  // namespace sturm

#endif
