#include "sturm/gibbs.hpp"

#include <algorithm>

#include "sturm/errors.hpp"

namespace sturm {

namespace {

Real real_pi() {
  Real pi = real_from(0L);
  mpfr_const_pi(pi.backend().data(), MPFR_RNDN);
  return pi;
}

void require_level(const BandTree& tree, std::size_t k, const char* what) {
  if (k >= tree.levels.size()) {
    throw DepthUnavailable(std::string(what) + ": level " + std::to_string(k) +
                           " not present (depth " +
                           std::to_string(tree.depth()) + ")");
  }
}

}  // namespace

Real A_n_beta(unsigned n, const Real& beta, const Rational& eps) {
  if (eps < 0 || eps >= Rational{1, 12}) {
    throw EpsilonOutOfRange("epsilon must lie in [0, 1/12), got " + eps.str());
  }
  if (n == 0) return real_from(0L);
  const Real pi = real_pi();
  const long np1 = static_cast<long>(n) + 1;
  Real total = real_from(0L);
  Real scale = pow(real_from(np1), -beta);
  for (long j = 1; j <= static_cast<long>(n); ++j) {
    // keep j iff (n+1) eps < j < (n+1)(1 - eps), exactly in rationals
    if (!(Rational{np1} * eps < j && Rational{j} < Rational{np1} * (1 - eps)))
      continue;
    Real s = sin(pi * j / np1);
    total += scale * pow(s * s, beta);
  }
  return total;
}

GibbsApprox::GibbsApprox(const BandTree& tree, const Real& beta, std::size_t m)
    : tree_(&tree), m_(m) {
  require_level(tree, m, "finite_gibbs");
  PrecisionScope scope(tree.eval_bits);
  beta_ = round_to_bits(beta, tree.eval_bits);
  const auto [mb, me] = tree.levels[m];
  mass_.resize(me);

  // raw weights |B_w|^beta at level m, then normalize
  Real total = real_from(0L);
  for (std::uint32_t id = mb; id < me; ++id) {
    mass_[id] = pow(tree.nodes[id].length(), beta_);
    total += mass_[id];
  }
  normalization_ = total;
  for (std::uint32_t id = mb; id < me; ++id) mass_[id] /= total;

  // coarser levels by exact summation up the tree
  for (std::size_t lvl = m; lvl-- > 0;) {
    const auto [b, e] = tree.levels[lvl];
    for (std::uint32_t id = b; id < e; ++id) {
      const BandNode& node = tree.nodes[id];
      Real acc = real_from(0L);
      for (std::int32_t c = node.first_child;
           c < node.first_child + node.child_count; ++c) {
        acc += mass_[static_cast<std::uint32_t>(c)];
      }
      mass_[id] = std::move(acc);
    }
  }
}

const Real& GibbsApprox::mass(std::uint32_t id) const {
  if (id >= mass_.size() || tree_->nodes[id].order > m_) {
    throw DepthUnavailable("mass queried past the measure order");
  }
  return mass_[id];
}

Real GibbsApprox::level_total(std::size_t k) const {
  require_level(*tree_, k, "level_total");
  if (k > m_) throw DepthUnavailable("level_total past measure order");
  Real total = real_from(0L);
  const auto [b, e] = tree_->levels[k];
  for (std::uint32_t id = b; id < e; ++id) total += mass_[id];
  return total;
}

GibbsApprox finite_gibbs(const BandTree& tree, const Real& beta, std::size_t m) {
  return GibbsApprox(tree, beta, m);
}

ZetaResult zeta_n(const BandTree& tree, unsigned n) {
  // canonical witness: shallowest, then leftmost type-I band whose next
  // digit equals n and whose e12 child is in the tree
  for (std::size_t lvl = 0; lvl + 1 < tree.levels.size(); ++lvl) {
    if (tree.freq.digit(lvl + 1) != n) continue;
    const auto [b, e] = tree.levels[lvl];
    for (std::uint32_t id = b; id < e; ++id) {
      const BandNode& node = tree.nodes[id];
      if (node.type != BandType::I || node.child_count < 1) continue;
      const BandNode& child = tree.nodes[node.first_child];
      ZetaResult res;
      res.value = child.length() / node.length();
      res.witness = id;
      return res;
    }
  }
  throw NoWitness("no type-I band with next digit " + std::to_string(n) +
                  " in the computed tree");
}

ZetaSpread zeta_spread(const BandTree& tree, unsigned n) {
  ZetaResult canon = zeta_n(tree, n);
  PrecisionScope scope(tree.eval_bits);
  ZetaSpread sp;
  sp.min_ratio = real_from(1L);
  sp.max_ratio = real_from(1L);
  sp.witnesses = 0;
  for (std::size_t lvl = 0; lvl + 1 < tree.levels.size(); ++lvl) {
    if (tree.freq.digit(lvl + 1) != n) continue;
    const auto [b, e] = tree.levels[lvl];
    for (std::uint32_t id = b; id < e; ++id) {
      const BandNode& node = tree.nodes[id];
      if (node.type != BandType::I || node.child_count < 1) continue;
      const BandNode& child = tree.nodes[node.first_child];
      Real zeta = child.length() / node.length();
      Real rel = zeta / canon.value;
      if (sp.witnesses == 0) {
        sp.min_ratio = rel;
        sp.max_ratio = rel;
      } else {
        if (rel < sp.min_ratio) sp.min_ratio = rel;
        if (rel > sp.max_ratio) sp.max_ratio = rel;
      }
      ++sp.witnesses;
    }
  }
  return sp;
}

std::array<Real, 3> band_sum_by_type(const BandTree& tree, std::size_t k,
                                     const Real& beta) {
  require_level(tree, k, "band_sum_by_type");
  PrecisionScope scope(tree.eval_bits);
  std::array<Real, 3> out{real_from(0L), real_from(0L), real_from(0L)};
  for (const BandNode& node : tree.level(k)) {
    out[static_cast<std::size_t>(node.type)] += pow(node.length(), beta);
  }
  return out;
}

GibbsDiagnostics gibbs_ratio_report(const GibbsApprox& measure,
                                    const BandTree& tree, std::size_t k) {
  if (k + 3 > measure.order()) {
    throw DepthUnavailable("gibbs_ratio_report needs m >= k + 3");
  }
  require_level(tree, k, "gibbs_ratio_report");
  PrecisionScope scope(tree.eval_bits);

  const Real& beta = measure.beta();
  // b_{k,beta}(eps) over the same length convention as the masses
  Real b_k = real_from(0L);
  for (const BandNode& node : tree.level(k)) {
    b_k += pow(node.length(), beta);
  }

  // zeta and A values per digit actually used at this level
  auto ref_factor = [&](unsigned digit, bool pow_form) -> Real {
    if (digit == 1) return real_from(1L);  // zeta_1 = 1, A_1 ~ 1
    Real zeta = zeta_n(tree, digit).value;
    Real denom = pow_form
                     ? pow(real_from(static_cast<long>(digit)), 1 - beta)
                     : A_n_beta(digit, beta, tree.epsilon);
    return pow(zeta, beta) / denom;
  };

  GibbsDiagnostics diag;
  diag.level = k;
  for (const BandNode& node : tree.level(k)) {
    const std::uint32_t id =
        static_cast<std::uint32_t>(&node - tree.nodes.data());
    const Real mu = measure.mass(id);
    Real base = pow(node.length(), beta) / b_k;
    const unsigned a_next = tree.freq.digit(node.order + 1);
    Real ref_a = base, ref_pow = base;
    if (node.type == BandType::I) {
      ref_a = base * ref_factor(a_next, false);
      ref_pow = base * ref_factor(a_next, true);
    } else if (node.type == BandType::III && a_next == 1) {
      const unsigned a_next2 = tree.freq.digit(node.order + 2);
      ref_a = base * ref_factor(a_next2, false);
      ref_pow = base * ref_factor(a_next2, true);
    }
    Real ra = mu / ref_a;
    Real rp = mu / ref_pow;
    auto& st = diag.per_type[node.type];
    if (st.count == 0) {
      st.min_a = ra;
      st.max_a = ra;
      st.min_pow = rp;
      st.max_pow = rp;
    } else {
      if (ra < st.min_a) st.min_a = ra;
      if (ra > st.max_a) st.max_a = ra;
      if (rp < st.min_pow) st.min_pow = rp;
      if (rp > st.max_pow) st.max_pow = rp;
    }
    ++st.count;
  }
  return diag;
}

Real covariation_probe(const BandTree& tree, std::uint32_t w, std::uint32_t wt,
                       std::span<const Symbol> u) {
  PrecisionScope scope(tree.eval_bits);
  auto descend = [&](std::uint32_t from) -> std::uint32_t {
    std::uint32_t cur = from;
    for (const Symbol& s : u) {
      auto next = tree.child_by_symbol(cur, s);
      if (!next) {
        throw WordsNotInTree("suffix not present under '" +
                             tree.word_string(from) + "'");
      }
      cur = *next;
    }
    return cur;
  };
  const std::uint32_t wu = descend(w);
  const std::uint32_t wtu = descend(wt);
  Real r1 = tree.nodes[wu].length() / tree.nodes[w].length();
  Real r2 = tree.nodes[wtu].length() / tree.nodes[wt].length();
  return r1 / r2;
}

CovariationSweep covariation_sweep(const BandTree& tree, std::size_t level,
                                   std::size_t suffix_len,
                                   std::size_t max_pairs) {
  require_level(tree, level + suffix_len, "covariation_sweep");
  PrecisionScope scope(tree.eval_bits);

  // collect the suffix words of each band at `level` reaching down suffix_len
  struct Entry {
    std::uint32_t base;
    std::uint32_t leaf;
    std::vector<Symbol> suffix;
  };
  std::vector<Entry> entries;
  const auto [b, e] = tree.levels[level];
  for (std::uint32_t id = b; id < e; ++id) {
    // depth-first enumeration of descendants suffix_len below
    std::vector<std::pair<std::uint32_t, std::size_t>> stack{{id, 0}};
    while (!stack.empty()) {
      auto [cur, d] = stack.back();
      stack.pop_back();
      if (d == suffix_len) {
        Entry en;
        en.base = id;
        en.leaf = cur;
        std::uint32_t walk = cur;
        for (std::size_t i = 0; i < suffix_len; ++i) {
          en.suffix.push_back(tree.nodes[walk].sym);
          walk = static_cast<std::uint32_t>(tree.nodes[walk].parent);
        }
        std::reverse(en.suffix.begin(), en.suffix.end());
        entries.push_back(std::move(en));
        continue;
      }
      const BandNode& node = tree.nodes[cur];
      for (std::int32_t c = node.first_child;
           c < node.first_child + node.child_count; ++c) {
        stack.emplace_back(static_cast<std::uint32_t>(c), d + 1);
      }
    }
  }

  CovariationSweep sweep;
  sweep.max_ratio = real_from(1L);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (std::size_t j = i + 1; j < entries.size(); ++j) {
      if (entries[i].base == entries[j].base) continue;
      if (entries[i].suffix != entries[j].suffix) continue;
      if (sweep.pairs >= max_pairs) return sweep;
      Real r1 = tree.nodes[entries[i].leaf].length() /
                tree.nodes[entries[i].base].length();
      Real r2 = tree.nodes[entries[j].leaf].length() /
                tree.nodes[entries[j].base].length();
      Real ratio = r1 / r2;
      if (ratio < 1) ratio = 1 / ratio;
      if (ratio > sweep.max_ratio) sweep.max_ratio = ratio;
      ++sweep.pairs;
    }
  }
  return sweep;
}

}  // namespace sturm
