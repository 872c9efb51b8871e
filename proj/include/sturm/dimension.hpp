#ifndef STURM_DIMENSION_HPP
#define STURM_DIMENSION_HPP

#include <optional>
#include <vector>

#include "sturm/bandtree.hpp"
#include "sturm/frequency.hpp"
#include "sturm/real.hpp"

namespace sturm {

// b_{k,beta} = sum over level-k bands of |B|^beta, bracketed by inner/outer
// endpoint enclosures so the truth lies in [lower, upper].
struct SumBounds {
  Real lower, upper;
  Real mid() const { return (lower + upper) / 2; }
};

SumBounds band_sum(const BandTree& tree, std::size_t k, const Real& beta);

// Root of b_{k,s} = 1 in [0,1], bisected to |b-1| < tol on the monotone map.
// The inner/outer sums bracket the true root in [s_lo, s_hi]; clamped marks
// the b_{k,1} > 1 case where the root is pinned at 1.
struct SkResult {
  Real s_lo, s_hi;
  bool clamped = false;
  Real mid() const { return (s_lo + s_hi) / 2; }
};

SkResult solve_sk(const BandTree& tree, std::size_t k, const Real& tol);

// sum over order-k gaps of |J|^s
Real gap_sum(const BandTree& tree, std::size_t k, const Real& s);

// --- section-5 growth matrices ---------------------------------------------

// 3x3 nonnegative matrix on Real with a scale ledger for long products.
struct Mat3 {
  Real m[9];
  static Mat3 zero();
  static Mat3 identity();
  Mat3 operator*(const Mat3& rhs) const;
  Real max_entry() const;  // max-entry norm
};

// R_n(x): row/col order (I, II, III);
// [[0, x^{a_n-1}, 0], [(a_n+1)x, 0, a_n x], [a_n x, 0, (a_n-1)x]].
Mat3 growth_matrix(unsigned a_n, const Real& x);

// ||S_n(x)|| with S_n = R_1...R_n, kept as log to survive long products.
struct GrowthResult {
  bool zero = false;    // product is the zero matrix
  Real log_norm;        // ln ||S_n||
  Real norm_root;       // ||S_n||^{1/n}; 0 when zero
};

GrowthResult growth_product(const FrequencySpec& freq, const Real& x,
                            std::size_t n, unsigned bits = 128);

// psi(x) = liminf ||S_n||^{1/n}, phi(x) = limsup. Finite-horizon estimates
// use tail min/max of ||S_n||^{1/n} over a trailing window; (eventually)
// periodic specs also get the exact value via the period spectral radius.
struct PsiPhi {
  Real psi, phi;
  bool exact = false;
  Real ratio_estimate;  // ||S_n||/||S_{n-w}|| ^(1/w), sharper when convergent
};

PsiPhi psi_phi(const FrequencySpec& freq, const Real& x, std::size_t n_max,
               unsigned bits = 128, std::size_t tail_window = 8);

// Perron root of a nonnegative 3x3 matrix (largest real eigenvalue), by
// Newton from above on the characteristic polynomial.
Real perron_root(const Mat3& M, unsigned bits);

enum class Functional { Lower, Upper };  // f_* resp. f^*

struct FStarResult {
  Real value;        // f_*(alpha) or f^*(alpha)
  Real minus_log;    // -ln f
  bool k_infinite = false;
  bool exact_mode = false;
};

// x where the growth rate crosses 1: exact spectral-radius mode for
// (eventually) periodic specs, finite-n norm-ratio mode otherwise.
FStarResult f_star(const FrequencySpec& freq, Functional which, const Real& tol,
                   std::size_t n_max = 200, unsigned bits = 128);

// --- matrix brackets for the band sums ---------------------------------------

// upper: 4^g (1,0,1) Q_1..Q_k (1,1,1)^t with t1 = (V-8)/3;
// lower: (1,0,1) Qt_1..Qt_k (1,1,1)^t with t2 = 2(V+5), a^3 weights.
SumBounds matrix_bound_b(const FrequencySpec& freq, const Real& V,
                         const Real& gamma, std::size_t k, unsigned bits = 128);

// (1,0,1) Qhat_1..Qhat_k (1,1,1)^t, the truncated lower bound used in the
// unbounded-digit argument; a lower bound for b_{k,gamma}(0) as well.
Real matrix_bound_unbounded(const FrequencySpec& freq, const Real& V,
                            const Real& gamma, std::size_t k,
                            unsigned bits = 128);

// --- dimension brackets and asymptotics --------------------------------------

struct DimBracket {
  Real lo, hi;
  bool degenerate_one = false;  // K = infinity: value pinned at 1
};

// Pre-dimension brackets from the growth functionals: lower from f and the
// digit growth K, upper from -ln f / ln t1. K is exact for (eventually)
// periodic specs, else the finite-horizon tail value is used.
DimBracket dim_bracket_lower(const FrequencySpec& freq, const Real& V,
                             const Real& tol, std::size_t n_max = 200);
DimBracket dim_bracket_upper(const FrequencySpec& freq, const Real& V,
                             const Real& tol, std::size_t n_max = 200);

struct AsymptoticPrediction {
  Real minus_log_f_lower;  // predicted limit of s_*(V) ln V
  Real minus_log_f_upper;  // predicted limit of s^*(V) ln V
  bool k_infinite = false;
};

AsymptoticPrediction asymptotic_prediction(const FrequencySpec& freq,
                                           const Real& tol,
                                           std::size_t n_max = 200);

// |s_k(V1) - s_k(V2)| / |V1 - V2| from two tree builds.
Real lipschitz_probe(const FrequencySpec& freq, const Real& V1, const Real& V2,
                     std::size_t k, const Rational& eps,
                     const PrecisionPolicy& prec, const Real& tol);

// s_k >= (ln delta_k - ln 8) / (ln delta_k + ln t2/4), the unbounded-type
// lower bound; delta_k = (a_1...a_k)^{1/k}.
Real sk_lower_bound_unbounded(const Real& delta_k, const Real& V);

}  // namespace sturm

#endif
