#ifndef STURM_GIBBS_HPP
#define STURM_GIBBS_HPP

#include <array>
#include <map>
#include <span>
#include <vector>

#include "sturm/bandtree.hpp"
#include "sturm/real.hpp"

namespace sturm {

// A_{n,beta}(eps) = sum over (n+1)eps < j < (n+1)(1-eps) of
// (n+1)^{-beta} sin^{2beta}(j pi / (n+1)); A_0 = 0.
Real A_n_beta(unsigned n, const Real& beta, const Rational& eps);

// Finite-order Gibbs approximant mu_{beta,eps,m}: level-m masses
// |B_w|^beta / b_{m,beta}(eps), coarser levels summed up the tree, so
// additivity is exact by construction.
class GibbsApprox {
 public:
  GibbsApprox(const BandTree& tree, const Real& beta, std::size_t m);

  const BandTree& tree() const { return *tree_; }
  std::size_t order() const { return m_; }
  const Real& beta() const { return beta_; }
  const Real& normalization() const { return normalization_; }
  // mass of the band at node `id` (id must have order <= m)
  const Real& mass(std::uint32_t id) const;
  Real level_total(std::size_t k) const;

 private:
  const BandTree* tree_;
  std::size_t m_;
  Real beta_;
  Real normalization_;
  std::vector<Real> mass_;  // indexed by node id, orders 0..m
};

GibbsApprox finite_gibbs(const BandTree& tree, const Real& beta, std::size_t m);

// zeta_n = |B_{w u}| / |B_w| for the canonical witness: the shallowest, then
// leftmost type-I band with next digit n; u = (e12, 1, 1).
struct ZetaResult {
  Real value;
  std::uint32_t witness;
};

ZetaResult zeta_n(const BandTree& tree, unsigned n);

// min/max over other witnesses of zeta-like ratios, relative to zeta_n.
struct ZetaSpread {
  Real min_ratio, max_ratio;
  std::size_t witnesses;
};

ZetaSpread zeta_spread(const BandTree& tree, unsigned n);

// Per-type ratio diagnostics: mass over the type-appropriate reference.
// Two normalizations are reported side by side: the A-form divides by the
// sine sum A_{a,beta}, the pow-form by a^{1-beta}; they are comparable
// since A_{n,beta} ~ n^{1-beta}.
struct TypeRatioStats {
  Real min_a, max_a;      // A_{a,beta} normalization
  Real min_pow, max_pow;  // a^{1-beta} normalization
  std::size_t count = 0;
};

struct GibbsDiagnostics {
  std::size_t level;
  std::map<BandType, TypeRatioStats> per_type;
};

GibbsDiagnostics gibbs_ratio_report(const GibbsApprox& measure,
                                    const BandTree& tree, std::size_t k);

// (|B_{wu}|/|B_w|) / (|B_{wtu}|/|B_{wt}|) for one common suffix u.
Real covariation_probe(const BandTree& tree, std::uint32_t w, std::uint32_t wt,
                       std::span<const Symbol> u);

// max over same-type band pairs at one level and all suffixes of length
// `suffix_len` of the covariation ratio; the empirical eta.
struct CovariationSweep {
  Real max_ratio;
  std::size_t pairs = 0;
};

CovariationSweep covariation_sweep(const BandTree& tree, std::size_t level,
                                   std::size_t suffix_len,
                                   std::size_t max_pairs = 4096);

// b_{k,beta}(eps) split by band type; the three parts sum to the total.
std::array<Real, 3> band_sum_by_type(const BandTree& tree, std::size_t k,
                                     const Real& beta);

}  // namespace sturm

#endif
