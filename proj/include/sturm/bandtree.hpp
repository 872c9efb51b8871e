#ifndef STURM_BANDTREE_HPP
#define STURM_BANDTREE_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sturm/frequency.hpp"
#include "sturm/real.hpp"
#include "sturm/tracecalc.hpp"

namespace sturm {

enum class BandType : std::uint8_t { I, II, III };
enum class EdgeLabel : std::uint8_t { e12, e21, e23, e31, e33 };

const char* to_string(BandType t);
const char* to_string(EdgeLabel e);

BandType edge_source(EdgeLabel e);
BandType edge_target(EdgeLabel e);

// Multiplicities tau_e(n): 1, n+1, n, n, n-1 for e12, e21, e23, e31, e33.
unsigned tau(EdgeLabel e, unsigned n);

struct Symbol {
  EdgeLabel edge = EdgeLabel::e12;
  unsigned tau = 0;
  unsigned l = 0;  // 1..tau, counted left to right among same-type siblings
  friend bool operator==(const Symbol&, const Symbol&) = default;
};

// Truncation rule for Omega_n(eps): e12 symbols always survive, others iff
// (tau+1) eps < l < (tau+1)(1-eps). Requires 0 <= eps < 1/12; the comparison
// is exact in rationals.
bool truncate_keep(const Symbol& sym, const Rational& eps);

// One family of children under a parent band of the given type and order:
// the edge, child type, full multiplicity, and the generating polynomial.
struct ChildFamily {
  EdgeLabel edge;
  BandType child_type;
  unsigned count;
  PolyId poly;
};

// I -> one II-child on t_{(k+2,0)};
// II -> (a+1) I-children on t_{(k+1,1)} and a III-children on t_{(k+2,0)};
// III -> a I-children on t_{(k+1,1)} and (a-1) III-children on t_{(k+2,0)}.
std::vector<ChildFamily> children_spec(BandType parent, unsigned a_next,
                                       std::size_t parent_order);

struct BandNode {
  Symbol sym;                 // symbol leading here; meaningless for roots
  std::int32_t parent = -1;
  std::int32_t first_child = -1;
  std::int32_t child_count = 0;
  std::uint32_t order = 0;
  BandType type = BandType::I;
  bool alias = false;         // interval shared with parent (e12, a_next = 1)
  PolyId poly;
  int orientation = +1;       // sign of the generating polynomial's slope
  // Certified endpoint enclosures: lo in [lo_out, lo_in], hi in [hi_in, hi_out].
  Real lo_out, lo_in, hi_in, hi_out;
  double log2_len_floor = 0;  // running per-symbol length lower bound, base-2 log

  Real len_lower() const { return hi_in - lo_in; }
  Real len_upper() const { return hi_out - lo_out; }
  Real length() const { return ((hi_in + hi_out) - (lo_in + lo_out)) / 2; }
  Real midpoint() const {
    return ((lo_out + lo_in) / 2 + (hi_in + hi_out) / 2) / 2;
  }
};

struct ExpandOptions {
  Rational epsilon{0};
  PrecisionPolicy prec = PrecisionPolicy::auto_grown();
  unsigned threads = 1;
  bool check_monotone = true;    // 33-point interior monotonicity sampling
  unsigned monotone_samples = 33;
};

class BandTree {
 public:
  FrequencySpec freq;
  Real V;
  Rational epsilon{0};
  PrecisionPolicy prec;
  unsigned eval_bits = 0;  // working precision used for certification
  bool below_recommended_V = false;
  std::vector<BandNode> nodes;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> levels;  // [begin,end)

  std::size_t depth() const { return levels.size() - 1; }
  std::span<const BandNode> level(std::size_t n) const {
    return {nodes.data() + levels[n].first,
            static_cast<std::size_t>(levels[n].second - levels[n].first)};
  }
  std::vector<Symbol> word(std::uint32_t id) const;
  std::string word_string(std::uint32_t id) const;
  // Child reached from `id` by the given symbol, if present.
  std::optional<std::uint32_t> child_by_symbol(std::uint32_t id,
                                               const Symbol& sym) const;
};

// Builds the typed band tree to the given depth. Refuses V < 20, flags
// V < 24. Throws ListExhausted when the digit rule runs out.
BandTree expand_tree(const FrequencySpec& freq, const Real& V,
                     std::size_t depth, const ExpandOptions& opts = {});

// A certified interval: both endpoints enclosed by sign-change brackets on
// t -+ 2, plus the slope sign of the generating polynomial across it.
struct CertInterval {
  Real lo_out, lo_in, hi_in, hi_out;
  int orientation;
};

// Grid-based root isolation (the fallback path, also the reference for
// tests): finds `expected` maximal subintervals of [parent_lo, parent_hi]
// where |t_child| <= 2 spans [-2, 2]. Throws CountMismatch after the grid
// refinement cap, TangencySuspected on |t| <= 2 regions without a full span.
std::vector<CertInterval> root_bands(const FrequencySpec& freq, const Real& V,
                                     const Real& parent_lo, const Real& parent_hi,
                                     PolyId child_poly, unsigned expected,
                                     PrecisionPolicy prec, std::size_t k_max,
                                     double log2_width_target);

// --- ladders ---------------------------------------------------------------

struct LadderRung {
  Real lo, hi;           // band (midpoint enclosures are fine here)
  PolyId poly;
  bool inserted = false; // sigma_{(i,p)} band added by the a > 2 rule
  // (p_i, l_i) for the step from this rung to the next; 0 on the last rung.
  unsigned p_i = 0;
  unsigned l_i = 0;
};

struct ModifiedLadder {
  std::vector<LadderRung> rungs;  // B-hat_0 .. B-hat_m
  std::size_t m() const { return rungs.size() - 1; }
  std::size_t initial_length = 0;  // n - k of the initial ladder
  std::size_t digit_sum = 0;       // sum a_{k+1..n}, caps the rung count
};

ModifiedLadder build_modified_ladder(const BandTree& tree, std::uint32_t node);

// --- verification probes -----------------------------------------------------

struct BandBoundReport {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst_lower_slack = 0;  // min log2(len / lower_bound)
  double worst_upper_slack = 0;  // min log2(upper_bound / len)
  std::string first_violation_word;
  bool ok() const { return violations == 0; }
};

// Asserts the per-symbol length bounds and the 4^{1-n/2} cap on every band.
BandBoundReport verify_band_bounds(const BandTree& tree);

struct DerivRatioStats {
  Real min_ratio, max_ratio;
  Real bound_lo, bound_hi;
  bool ok;
};

// |h'_child / h'_parent| at `samples` interior points of the child band,
// checked against the two-sided csc^2 bounds (e12 case: power bounds).
DerivRatioStats verify_derivative_ratio(const BandTree& tree,
                                        std::uint32_t parent, std::uint32_t child,
                                        unsigned samples);

struct TreeRatioReport {
  std::size_t pairs = 0;
  std::size_t violations = 0;
  double max_band_variation = 0;  // max over bands of max|h'|/min|h'| observed
  std::string first_violation_word;
  bool ok() const { return violations == 0; }
};

TreeRatioReport verify_derivative_ratios(const BandTree& tree, unsigned samples);

struct StructureReport {
  std::size_t nodes = 0;
  std::size_t count_mismatches = 0;   // kept-children vs children_spec + filter
  std::size_t disjointness_failures = 0;
  std::size_t nesting_failures = 0;
  std::size_t triple_overlap_failures = 0;
  bool ok() const {
    return count_mismatches + disjointness_failures + nesting_failures +
               triple_overlap_failures ==
           0;
  }
};

// Child counts, sibling disjointness/order, nesting, and the sampled
// triple-emptiness probe (at most two of the three sigma traces <= 2).
StructureReport verify_structure(const BandTree& tree);

struct LadderCheck {
  std::size_t rungs = 0;
  bool count_bounds_ok = true;    // floor((n-k)/2) <= m <= sum a_i
  bool window_ok = true;          // h_i(B_{i+1}) inside I_{p,l} (or mirror)
  bool chebyshev_ok = true;       // |S_{p+1}(h_i)| <= 1/4, |S_p| <= 5/4
  bool branch_ok = true;          // a z-branch matches the rung recursion
  std::vector<int> branch_signs;  // +1 / -1 per rung step
};

LadderCheck verify_ladder(const BandTree& tree, std::uint32_t node,
                          unsigned samples = 5);

// Gaps of order k inside one parent: the c-1 open intervals between its
// consecutive children; the edge strips next to the parent ends are not
// counted.
struct Gap {
  std::uint32_t parent;
  Real lo, hi;
  Real length() const { return hi - lo; }
};

std::vector<Gap> gaps_of_order(const BandTree& tree, std::size_t k);

}  // namespace sturm

#endif
