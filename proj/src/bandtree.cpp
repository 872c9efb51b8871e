#include "sturm/bandtree.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "sturm/errors.hpp"

namespace sturm {

namespace {

Real real_pi() {
  Real pi = real_from(0L);
  mpfr_const_pi(pi.backend().data(), MPFR_RNDN);
  return pi;
}

int sign_of(const Real& v) { return v >= 0 ? 1 : -1; }

double log2_double(const Real& v) {
  if (v <= 0) return -1e300;
  return static_cast<double>(log2(v));
}

// One trace evaluation t_{(k,p)}(x); builds a fresh per-x table.
Real eval_poly(const FrequencySpec& freq, const Real& V, const Real& x,
               PolyId id, std::size_t k_max, unsigned bits,
               Real* deriv = nullptr) {
  TraceEvaluator ev(freq, V, x, k_max, deriv != nullptr, bits);
  if (deriv) *deriv = ev.poly_deriv(id);
  return ev.poly_value(id);
}

}  // namespace

const char* to_string(BandType t) {
  switch (t) {
    case BandType::I: return "I";
    case BandType::II: return "II";
    case BandType::III: return "III";
  }
  return "?";
}

const char* to_string(EdgeLabel e) {
  switch (e) {
    case EdgeLabel::e12: return "e12";
    case EdgeLabel::e21: return "e21";
    case EdgeLabel::e23: return "e23";
    case EdgeLabel::e31: return "e31";
    case EdgeLabel::e33: return "e33";
  }
  return "?";
}

BandType edge_source(EdgeLabel e) {
  switch (e) {
    case EdgeLabel::e12: return BandType::I;
    case EdgeLabel::e21:
    case EdgeLabel::e23: return BandType::II;
    case EdgeLabel::e31:
    case EdgeLabel::e33: return BandType::III;
  }
  return BandType::I;
}

BandType edge_target(EdgeLabel e) {
  switch (e) {
    case EdgeLabel::e12: return BandType::II;
    case EdgeLabel::e21:
    case EdgeLabel::e31: return BandType::I;
    case EdgeLabel::e23:
    case EdgeLabel::e33: return BandType::III;
  }
  return BandType::I;
}

unsigned tau(EdgeLabel e, unsigned n) {
  switch (e) {
    case EdgeLabel::e12: return 1;
    case EdgeLabel::e21: return n + 1;
    case EdgeLabel::e23: return n;
    case EdgeLabel::e31: return n;
    case EdgeLabel::e33: return n - 1;
  }
  return 0;
}

bool truncate_keep(const Symbol& sym, const Rational& eps) {
  // the boundary 1/12 itself is admitted here so the rule can be evaluated
  // on it; tree expansion enforces the strict range
  if (eps < 0 || eps > Rational{1, 12}) {
    throw EpsilonOutOfRange("epsilon must lie in [0, 1/12], got " +
                            eps.str());
  }
  if (sym.edge == EdgeLabel::e12) return true;
  // (tau+1) eps < l < (tau+1)(1-eps), exactly in rationals
  const Rational q{sym.tau + 1};
  const Rational l{sym.l};
  return q * eps < l && l < q * (1 - eps);
}

std::vector<ChildFamily> children_spec(BandType parent, unsigned a_next,
                                       std::size_t parent_order) {
  const std::size_t k = parent_order;
  std::vector<ChildFamily> fams;
  switch (parent) {
    case BandType::I:
      fams.push_back({EdgeLabel::e12, BandType::II, 1, PolyId{k + 2, 0}});
      break;
    case BandType::II:
      fams.push_back({EdgeLabel::e21, BandType::I, a_next + 1, PolyId{k + 1, 1}});
      fams.push_back({EdgeLabel::e23, BandType::III, a_next, PolyId{k + 2, 0}});
      break;
    case BandType::III:
      fams.push_back({EdgeLabel::e31, BandType::I, a_next, PolyId{k + 1, 1}});
      fams.push_back({EdgeLabel::e33, BandType::III, a_next - 1, PolyId{k + 2, 0}});
      break;
  }
  return fams;
}

namespace {

struct EvalCtx {
  const FrequencySpec* freq;
  Real V;
  std::size_t k_max;
  unsigned bits;

  Real operator()(PolyId id, const Real& x, Real* deriv = nullptr) const {
    return eval_poly(*freq, V, x, id, k_max, bits, deriv);
  }
};

// Bisection on t(x) - level with certified opposite signs at the ends.
// Returns the final bracket [lo, hi] of width <= width_target.
std::pair<Real, Real> bisect_level(const EvalCtx& ctx, PolyId id, Real lo,
                                   Real hi, const Real& level, int sign_lo,
                                   const Real& width_target) {
  for (unsigned iter = 0; iter < 8000; ++iter) {
    if (hi - lo <= width_target) break;
    Real mid = (lo + hi) / 2;
    Real v = ctx(id, mid) - level;
    if (sign_of(v) == sign_lo) {
      lo = std::move(mid);
    } else {
      hi = std::move(mid);
    }
  }
  return {lo, hi};
}

// Monotone inversion of h on [lo, hi]: the x with h(x) = target.
Real invert_monotone(const EvalCtx& ctx, PolyId id, Real lo, Real hi,
                     const Real& target, int orientation,
                     const Real& width_target) {
  // h(lo) - target has sign -orientation when target is interior.
  auto [a, b] = bisect_level(ctx, id, std::move(lo), std::move(hi), target,
                             -orientation, width_target);
  return (a + b) / 2;
}

// From a sign-change bracket of t on [lo, hi], walk to an interior point
// with |t| <= 1.
Real find_interior(const EvalCtx& ctx, PolyId id, Real lo, Real hi,
                   int sign_lo) {
  for (unsigned iter = 0; iter < 8000; ++iter) {
    Real mid = (lo + hi) / 2;
    Real v = ctx(id, mid);
    if (abs(v) <= 1) return mid;
    if (sign_of(v) == sign_lo) {
      lo = std::move(mid);
    } else {
      hi = std::move(mid);
    }
  }
  throw TangencySuspected("no interior point with |t| <= 1 found");
}

struct BandCert {
  CertInterval iv;
  Real x_interior;
};

// Certify one band around the interior point x_in: t spans from -s*2 to s*2
// where s is the sign of t at x_right (both |t| > 2 outside).
BandCert certify_band(const EvalCtx& ctx, PolyId id, const Real& x_left,
                      const Real& x_in, const Real& x_right, int s_right,
                      const Real& width_target) {
  const Real two = real_from(2L);
  CertInterval iv;
  iv.orientation = s_right;
  {
    Real level = s_right > 0 ? two : -two;
    // t(x_in) - level has sign -s_right, t(x_right) - level has sign s_right
    auto [a, b] = bisect_level(ctx, id, x_in, x_right, level, -s_right,
                               width_target);
    iv.hi_in = std::move(a);
    iv.hi_out = std::move(b);
  }
  {
    Real level = s_right > 0 ? -two : two;
    // t(x_left) - level: sign s_right... at x_left t has sign -s_right and
    // |t| > 2, so t - (-2 s_right) has sign -s_right; at x_in it has sign s_right.
    auto [a, b] = bisect_level(ctx, id, x_left, x_in, level, -s_right,
                               width_target);
    iv.lo_out = std::move(a);
    iv.lo_in = std::move(b);
  }
  BandCert out;
  out.iv = std::move(iv);
  out.x_interior = x_in;
  return out;
}

void check_monotone_samples(const EvalCtx& ctx, PolyId id, const CertInterval& iv,
                            unsigned samples, const std::string& where) {
  if (samples < 2) return;
  Real lo = iv.lo_in, hi = iv.hi_in;
  Real step = (hi - lo) / static_cast<long>(samples + 1);
  Real prev;
  bool have_prev = false;
  for (unsigned i = 1; i <= samples; ++i) {
    Real x = lo + step * static_cast<long>(i);
    Real v = ctx(id, x);
    if (abs(v) > 2) {
      throw TangencySuspected("interior sample exceeds |t| = 2 in " + where);
    }
    if (have_prev) {
      bool increasing = v > prev;
      if ((iv.orientation > 0) != increasing) {
        throw TangencySuspected("non-monotone interior samples in " + where);
      }
    }
    prev = std::move(v);
    have_prev = true;
  }
}

// Chebyshev-window isolation of one family: the full multiplicity is
// `total`; only indices in `wanted` (x-order, 1-based) are solved.
// parent_orientation flips the map between x-order and window order.
std::vector<std::pair<unsigned, CertInterval>> isolate_family_windows(
    const EvalCtx& ctx, PolyId parent_poly, PolyId child_poly,
    const Real& parent_lo, const Real& parent_hi, int parent_orientation,
    unsigned total, const std::vector<unsigned>& wanted,
    const Real& width_target, unsigned monotone_samples,
    const std::string& where) {
  const unsigned q = total + 1;
  const Real pi = real_pi();
  const Real two = real_from(2L);
  const Real parent_len = parent_hi - parent_lo;
  const Real boundary_target = ldexp(parent_len, -48);

  // Window boundaries b_j at theta = (j + 1/2) pi / q, j = 0..total; window w
  // (1-based, theta order) covers (b_{w-1}, b_w) and holds exactly one band.
  std::vector<Real> bx(total + 1);
  std::vector<Real> bval(total + 1);
  for (unsigned j = 0; j <= total; ++j) {
    Real theta = pi * (2 * static_cast<long>(j) + 1) / (2 * static_cast<long>(q));
    Real y = 2 * cos(theta);
    bx[j] = invert_monotone(ctx, parent_poly, parent_lo, parent_hi, y,
                            parent_orientation, boundary_target);
    bval[j] = ctx(child_poly, bx[j]);
    if (abs(bval[j]) <= two) {
      throw TangencySuspected("window boundary lies inside a child band at " +
                              where);
    }
    if (j > 0 && sign_of(bval[j]) == sign_of(bval[j - 1])) {
      throw CountMismatch("window boundary signs do not alternate at " + where);
    }
  }

  std::vector<std::pair<unsigned, CertInterval>> out;
  out.reserve(wanted.size());
  for (unsigned l : wanted) {
    const unsigned w = parent_orientation > 0 ? total + 1 - l : l;  // theta idx
    const Real& xa_t = bx[w - 1];  // theta-order ends of the window
    const Real& xb_t = bx[w];
    const bool flip = xa_t > xb_t;
    const Real& x_left = flip ? xb_t : xa_t;
    const Real& x_right = flip ? xa_t : xb_t;
    const int s_left = sign_of(flip ? bval[w] : bval[w - 1]);
    const int s_right = -s_left;
    Real x_in = find_interior(ctx, child_poly, x_left, x_right, s_left);
    BandCert cert = certify_band(ctx, child_poly, x_left, x_in, x_right,
                                 s_right, width_target);
    if (monotone_samples > 0) {
      check_monotone_samples(ctx, child_poly, cert.iv, monotone_samples, where);
    }
    out.emplace_back(l, std::move(cert.iv));
  }
  return out;
}

std::vector<CertInterval> isolate_family_grid(
    const EvalCtx& ctx, PolyId child_poly, const Real& parent_lo,
    const Real& parent_hi, unsigned expected, const Real& width_target,
    unsigned monotone_samples, const std::string& where) {
  std::vector<CertInterval> out;
  if (expected == 0) return out;
  const Real two = real_from(2L);

  unsigned n_samples = 8 * (expected + 1);
  std::vector<Real> xs, vs;
  for (unsigned doubling = 0; doubling <= 20; ++doubling) {
    xs.clear();
    vs.clear();
    Real step = (parent_hi - parent_lo) / static_cast<long>(n_samples);
    for (unsigned i = 0; i <= n_samples; ++i) {
      Real x = parent_lo + step * static_cast<long>(i);
      vs.push_back(ctx(child_poly, x));
      xs.push_back(std::move(x));
    }
    std::vector<std::size_t> change_at;
    for (std::size_t i = 0; i + 1 < vs.size(); ++i) {
      if (sign_of(vs[i]) != sign_of(vs[i + 1])) change_at.push_back(i);
    }
    if (change_at.size() > expected) {
      throw CountMismatch("found " + std::to_string(change_at.size()) +
                          " sign changes, expected " + std::to_string(expected) +
                          " at " + where);
    }
    if (change_at.size() == expected) {
      // interior points, left to right
      std::vector<Real> interior;
      for (std::size_t i : change_at) {
        interior.push_back(
            find_interior(ctx, child_poly, xs[i], xs[i + 1], sign_of(vs[i])));
      }
      // outside points with |t| > 2 between consecutive bands
      std::vector<Real> outside(expected + 1);
      std::vector<int> outsign(expected + 1);
      auto find_outside = [&](const Real& a, const Real& b, Real& px,
                              int& psign) {
        // scan grid points inside (a, b), then a finer local sweep
        for (std::size_t i = 0; i < xs.size(); ++i) {
          if (xs[i] > a && xs[i] < b && abs(vs[i]) > two) {
            px = xs[i];
            psign = sign_of(vs[i]);
            return;
          }
        }
        const unsigned fine = 128;
        Real step = (b - a) / static_cast<long>(fine + 1);
        for (unsigned i = 1; i <= fine; ++i) {
          Real x = a + step * static_cast<long>(i);
          Real v = ctx(child_poly, x);
          if (abs(v) > two) {
            px = std::move(x);
            psign = sign_of(v);
            return;
          }
        }
        throw TangencySuspected("no |t| > 2 separator found at " + where);
      };
      for (unsigned g = 0; g <= expected; ++g) {
        const Real& a = (g == 0) ? parent_lo : interior[g - 1];
        const Real& b = (g == expected) ? parent_hi : interior[g];
        if (g == 0) {
          Real v = ctx(child_poly, parent_lo);
          if (abs(v) > two) {
            outside[g] = parent_lo;
            outsign[g] = sign_of(v);
            continue;
          }
        }
        if (g == expected) {
          Real v = ctx(child_poly, parent_hi);
          if (abs(v) > two) {
            outside[g] = parent_hi;
            outsign[g] = sign_of(v);
            continue;
          }
        }
        find_outside(a, b, outside[g], outsign[g]);
      }
      for (unsigned b = 0; b < expected; ++b) {
        if (outsign[b] == outsign[b + 1]) {
          throw TangencySuspected("separator signs do not alternate at " +
                                  where);
        }
        BandCert cert = certify_band(ctx, child_poly, outside[b], interior[b],
                                     outside[b + 1], outsign[b + 1],
                                     width_target);
        if (monotone_samples > 0) {
          check_monotone_samples(ctx, child_poly, cert.iv, monotone_samples,
                                 where);
        }
        out.push_back(std::move(cert.iv));
      }
      return out;
    }
    n_samples *= 2;
  }
  throw CountMismatch("grid refinement cap hit with fewer sign changes than " +
                      std::to_string(expected) + " at " + where);
}

}  // namespace

std::vector<CertInterval> root_bands(const FrequencySpec& freq, const Real& V,
                                     const Real& parent_lo, const Real& parent_hi,
                                     PolyId child_poly, unsigned expected,
                                     PrecisionPolicy prec, std::size_t k_max,
                                     double log2_width_target) {
  EvalCtx ctx{&freq, V, k_max, prec.internal_bits(freq, V, k_max)};
  PrecisionScope scope(ctx.bits);
  ctx.V = round_to_bits(V, ctx.bits);
  Real width_target = ldexp(real_from(1L), static_cast<long>(log2_width_target));
  return isolate_family_grid(ctx, child_poly, parent_lo, parent_hi, expected,
                             width_target, 33, "root_bands");
}

namespace {

struct IsolationJob {
  std::uint32_t parent;
  ChildFamily fam;
  std::vector<unsigned> kept;  // x-order l indices to solve
  double log2_child_floor;
};

struct JobResult {
  std::vector<std::pair<unsigned, CertInterval>> bands;  // (l, interval)
};

double symbol_log2_floor(EdgeLabel edge, unsigned a, double log2_t2) {
  if (edge == EdgeLabel::e12) return -(static_cast<double>(a) - 1.0) * log2_t2;
  return -(log2_t2 + 3.0 * std::log2(static_cast<double>(a)));
}

JobResult run_job(const BandTree& tree, const EvalCtx& ctx,
                  const IsolationJob& job, unsigned monotone_samples) {
  const BandNode& parent = tree.nodes[job.parent];
  JobResult res;
  const long target_exp = static_cast<long>(job.log2_child_floor) - 48;
  Real width_target = ldexp(real_from(1L), target_exp);
  const std::string where = "order " + std::to_string(parent.order + 1) +
                            " edge " + to_string(job.fam.edge) + " under '" +
                            tree.word_string(job.parent) + "'";
  try {
    res.bands = isolate_family_windows(
        ctx, parent.poly, job.fam.poly, parent.lo_out, parent.hi_out,
        parent.orientation, job.fam.count, job.kept, width_target,
        monotone_samples, where);
  } catch (const TangencySuspected&) {
    res.bands.clear();
  } catch (const CountMismatch&) {
    res.bands.clear();
  }
  if (res.bands.empty() && !job.kept.empty()) {
    // window certification failed; fall back to the full grid
    auto all = isolate_family_grid(ctx, job.fam.poly, parent.lo_out,
                                   parent.hi_out, job.fam.count, width_target,
                                   monotone_samples, where);
    for (unsigned l : job.kept) {
      res.bands.emplace_back(l, all.at(l - 1));
    }
  }
  return res;
}

}  // namespace

BandTree expand_tree(const FrequencySpec& freq, const Real& V,
                     std::size_t depth, const ExpandOptions& opts) {
  if (V < 20) {
    throw ConfigError("expand_tree requires V >= 20 (structure theorems), got " +
                      to_decimal_string(V, 8));
  }
  if (opts.epsilon < 0 || opts.epsilon >= Rational{1, 12}) {
    throw EpsilonOutOfRange("epsilon must lie in [0, 1/12), got " +
                            opts.epsilon.str());
  }
  // depth 0 is allowed and yields just the two roots

  BandTree tree;
  tree.freq = freq;
  tree.epsilon = opts.epsilon;
  tree.prec = opts.prec;
  tree.below_recommended_V = V < 24;
  tree.eval_bits = opts.prec.internal_bits(freq, V, depth + 1);
  PrecisionScope scope(tree.eval_bits);
  tree.V = round_to_bits(V, tree.eval_bits);
  const double log2_t2 = std::log2(2.0 * (static_cast<double>(tree.V) + 5.0));

  // order-0 roots: B_III = [-2, 2] on t_{(1,0)} = x, B_I = [V-2, V+2] on x - V
  {
    BandNode b3;
    b3.order = 0;
    b3.type = BandType::III;
    b3.poly = PolyId{1, 0};
    b3.lo_out = b3.lo_in = real_from(-2L);
    b3.hi_in = b3.hi_out = real_from(2L);
    b3.orientation = +1;
    b3.log2_len_floor = 0.0;
    tree.nodes.push_back(std::move(b3));
    BandNode b1;
    b1.order = 0;
    b1.type = BandType::I;
    b1.poly = PolyId{0, 1};
    b1.lo_out = b1.lo_in = tree.V - 2;
    b1.hi_in = b1.hi_out = tree.V + 2;
    b1.orientation = +1;
    b1.log2_len_floor = 0.0;
    tree.nodes.push_back(std::move(b1));
    tree.levels.emplace_back(0, 2);
  }

  for (std::size_t n = 0; n < depth; ++n) {
    const unsigned a_next = freq.digit(n + 1);
    EvalCtx ctx{&tree.freq, tree.V, n + 1, tree.eval_bits};

    // collect jobs and alias children
    std::vector<IsolationJob> jobs;
    struct AliasChild {
      std::uint32_t parent;
      PolyId poly;
    };
    std::vector<AliasChild> aliases;  // keyed implicitly by parent order
    const auto [lvl_begin, lvl_end] = tree.levels[n];
    for (std::uint32_t id = lvl_begin; id < lvl_end; ++id) {
      const BandNode& node = tree.nodes[id];
      for (const ChildFamily& fam : children_spec(node.type, a_next, n)) {
        if (fam.count == 0) continue;
        if (fam.edge == EdgeLabel::e12 && a_next == 1) {
          aliases.push_back({id, fam.poly});
          continue;
        }
        IsolationJob job;
        job.parent = id;
        job.fam = fam;
        for (unsigned l = 1; l <= fam.count; ++l) {
          if (truncate_keep({fam.edge, fam.count, l}, opts.epsilon)) {
            job.kept.push_back(l);
          }
        }
        job.log2_child_floor =
            node.log2_len_floor + symbol_log2_floor(fam.edge, a_next, log2_t2);
        if (!job.kept.empty()) jobs.push_back(std::move(job));
      }
    }

    std::vector<JobResult> results(jobs.size());
    const unsigned n_threads =
        std::max(1u, std::min<unsigned>(opts.threads,
                                        std::thread::hardware_concurrency()));
    if (n_threads <= 1 || jobs.size() < 2) {
      for (std::size_t j = 0; j < jobs.size(); ++j) {
        results[j] = run_job(tree, ctx, jobs[j],
                             opts.check_monotone ? opts.monotone_samples : 0);
      }
    } else {
      // the working precision is process-global: it was pinned to eval_bits
      // by the enclosing scope and must not be touched while workers run
      std::vector<std::thread> workers;
      std::atomic<std::size_t> next{0};
      auto body = [&]() {
        while (true) {
          std::size_t j = next.fetch_add(1);
          if (j >= jobs.size()) break;
          results[j] = run_job(tree, ctx, jobs[j],
                               opts.check_monotone ? opts.monotone_samples : 0);
        }
      };
      for (unsigned t = 0; t < n_threads; ++t) workers.emplace_back(body);
      for (auto& w : workers) w.join();
    }

    // assemble level n+1, children of each parent sorted left to right
    const auto level_start = static_cast<std::uint32_t>(tree.nodes.size());
    std::vector<std::vector<std::size_t>> jobs_of(lvl_end - lvl_begin);
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      jobs_of[jobs[j].parent - lvl_begin].push_back(j);
    }
    std::vector<std::size_t> alias_of(lvl_end - lvl_begin, SIZE_MAX);
    for (std::size_t ai = 0; ai < aliases.size(); ++ai) {
      alias_of[aliases[ai].parent - lvl_begin] = ai;
    }
    for (std::uint32_t id = lvl_begin; id < lvl_end; ++id) {
      struct PendingChild {
        Symbol sym;
        PolyId poly;
        bool alias;
        CertInterval iv;
        double floor;
      };
      std::vector<PendingChild> pending;
      if (alias_of[id - lvl_begin] != SIZE_MAX) {
        const AliasChild& al = aliases[alias_of[id - lvl_begin]];
        const BandNode& p = tree.nodes[id];
        PendingChild pc;
        pc.sym = Symbol{EdgeLabel::e12, 1, 1};
        pc.poly = al.poly;
        pc.alias = true;
        pc.iv = CertInterval{p.lo_out, p.lo_in, p.hi_in, p.hi_out, p.orientation};
        pc.floor = p.log2_len_floor;  // e12 factor t2^{a-1} = 1 at a = 1
        pending.push_back(std::move(pc));
      }
      for (std::size_t j : jobs_of[id - lvl_begin]) {
        for (auto& [l, iv] : results[j].bands) {
          PendingChild pc;
          pc.sym = Symbol{jobs[j].fam.edge, jobs[j].fam.count, l};
          pc.poly = jobs[j].fam.poly;
          pc.alias = false;
          pc.iv = iv;
          pc.floor = jobs[j].log2_child_floor;
          pending.push_back(std::move(pc));
        }
      }
      std::sort(pending.begin(), pending.end(),
                [](const PendingChild& a, const PendingChild& b) {
                  return a.iv.lo_out < b.iv.lo_out;
                });
      tree.nodes[id].first_child = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes[id].child_count = static_cast<std::int32_t>(pending.size());
      for (auto& pc : pending) {
        BandNode child;
        child.sym = pc.sym;
        child.parent = static_cast<std::int32_t>(id);
        child.order = static_cast<std::uint32_t>(n + 1);
        child.type = edge_target(pc.sym.edge);
        child.alias = pc.alias;
        child.poly = pc.poly;
        child.orientation = pc.iv.orientation;
        child.lo_out = std::move(pc.iv.lo_out);
        child.lo_in = std::move(pc.iv.lo_in);
        child.hi_in = std::move(pc.iv.hi_in);
        child.hi_out = std::move(pc.iv.hi_out);
        child.log2_len_floor = pc.floor;
        tree.nodes.push_back(std::move(child));
      }
    }
    tree.levels.emplace_back(level_start,
                             static_cast<std::uint32_t>(tree.nodes.size()));
  }
  return tree;
}

std::vector<Symbol> BandTree::word(std::uint32_t id) const {
  std::vector<Symbol> w;
  for (std::int32_t cur = static_cast<std::int32_t>(id);
       nodes[cur].parent >= 0; cur = nodes[cur].parent) {
    w.push_back(nodes[cur].sym);
  }
  std::reverse(w.begin(), w.end());
  return w;
}

std::string BandTree::word_string(std::uint32_t id) const {
  if (nodes[id].parent < 0) {
    return nodes[id].type == BandType::I ? "B_I" : "B_III";
  }
  const Symbol& s = nodes[id].sym;
  return word_string(static_cast<std::uint32_t>(nodes[id].parent)) + "/" +
         to_string(s.edge) + ":" + std::to_string(s.tau) + ":" +
         std::to_string(s.l);
}

std::optional<std::uint32_t> BandTree::child_by_symbol(std::uint32_t id,
                                                       const Symbol& sym) const {
  const BandNode& node = nodes[id];
  for (std::int32_t c = node.first_child;
       c < node.first_child + node.child_count; ++c) {
    if (nodes[c].sym == sym) return static_cast<std::uint32_t>(c);
  }
  return std::nullopt;
}

ModifiedLadder build_modified_ladder(const BandTree& tree, std::uint32_t node) {
  // initial ladder: path from the order-0 ancestor down to `node`
  std::vector<std::uint32_t> path;
  for (std::int32_t cur = static_cast<std::int32_t>(node); cur >= 0;
       cur = tree.nodes[cur].parent) {
    path.push_back(static_cast<std::uint32_t>(cur));
  }
  std::reverse(path.begin(), path.end());
  const std::size_t n = path.size() - 1;

  PrecisionScope scope(tree.eval_bits);
  EvalCtx ctx{&tree.freq, tree.V, tree.nodes[node].order, tree.eval_bits};

  ModifiedLadder lad;
  lad.initial_length = n;
  for (std::size_t i = 1; i <= n; ++i) lad.digit_sum += tree.freq.digit(i);

  std::vector<std::size_t> rung_path_index;  // SIZE_MAX for inserted rungs
  auto push_tree_rung = [&](std::size_t path_idx) {
    const BandNode& b = tree.nodes[path[path_idx]];
    LadderRung r;
    r.lo = b.lo_out;
    r.hi = b.hi_out;
    r.poly = b.poly;
    lad.rungs.push_back(std::move(r));
    rung_path_index.push_back(path_idx);
  };

  push_tree_rung(0);
  for (std::size_t i = 0; i < n; ++i) {
    const BandNode& bi = tree.nodes[path[i]];
    const unsigned a_next = tree.freq.digit(i + 1);
    if (bi.type == BandType::I && a_next == 1) continue;  // B_{i+1} = B_i
    if (bi.type == BandType::I && a_next > 2) {
      // insert B_{(i,p)}, p = 2..a_next-1, each the unique band of
      // sigma_{(i,p)} inside the previous rung
      Real prev_lo = lad.rungs.back().lo;
      Real prev_hi = lad.rungs.back().hi;
      PolyId prev_poly = lad.rungs.back().poly;
      for (unsigned p = 2; p + 1 <= a_next; ++p) {
        PolyId ins{i, static_cast<long>(p)};
        Real d;
        Real mid = (prev_lo + prev_hi) / 2;
        ctx(prev_poly, mid, &d);
        Real width_target = ldexp(prev_hi - prev_lo, -64);
        auto bands = isolate_family_windows(
            ctx, prev_poly, ins, prev_lo, prev_hi, sign_of(d), 1, {1},
            width_target, 0, "ladder insertion");
        const CertInterval& iv = bands.at(0).second;
        LadderRung r;
        r.lo = iv.lo_out;
        r.hi = iv.hi_out;
        r.poly = ins;
        r.inserted = true;
        prev_lo = r.lo;
        prev_hi = r.hi;
        prev_poly = ins;
        lad.rungs.push_back(std::move(r));
        rung_path_index.push_back(SIZE_MAX);
      }
    }
    push_tree_rung(i + 1);
  }

  // (p_i, l_i): a step between tree rungs carries the word symbol of the
  // arriving band. A path gap of two means the middle rung was deleted; the
  // deleted band equals its parent as an interval, so the pair still is the
  // consecutive initial pair (B_{j-1}, B_j). Steps touching inserted rungs
  // get (1, 1).
  for (std::size_t r = 0; r + 1 < lad.rungs.size(); ++r) {
    lad.rungs[r].p_i = 1;
    lad.rungs[r].l_i = 1;
    if (rung_path_index[r] != SIZE_MAX && rung_path_index[r + 1] != SIZE_MAX) {
      const std::size_t gap = rung_path_index[r + 1] - rung_path_index[r];
      if (gap == 1 || gap == 2) {
        const BandNode& arriving = tree.nodes[path[rung_path_index[r + 1]]];
        lad.rungs[r].p_i = arriving.sym.tau;
        lad.rungs[r].l_i = arriving.sym.l;
      }
    }
  }
  return lad;
}

BandBoundReport verify_band_bounds(const BandTree& tree) {
  PrecisionScope scope(tree.eval_bits);
  BandBoundReport rep;
  rep.worst_lower_slack = 1e300;
  rep.worst_upper_slack = 1e300;
  const Real t1 = (tree.V - 8) / 3;
  const Real t2 = 2 * (tree.V + 5);

  for (std::uint32_t id = 0; id < tree.nodes.size(); ++id) {
    const BandNode& node = tree.nodes[id];
    // accumulate the per-symbol length bounds along the word
    Real lower = real_from(1L);
    Real upper = real_from(4L);
    for (std::int32_t cur = static_cast<std::int32_t>(id);
         tree.nodes[cur].parent >= 0; cur = tree.nodes[cur].parent) {
      const Symbol& sym = tree.nodes[cur].sym;
      const unsigned a = tree.freq.digit(tree.nodes[cur].order);
      if (sym.edge == EdgeLabel::e12) {
        if (a > 1) {
          lower /= pow(t2, static_cast<long>(a - 1));
          upper /= pow(t1, static_cast<long>(a - 1));
        }
      } else {
        lower /= t2 * static_cast<long>(a) * static_cast<long>(a) *
                 static_cast<long>(a);
        upper /= t1 * static_cast<long>(a);
      }
    }
    ++rep.checked;
    const Real len_min = node.len_lower();
    const Real len_max = node.len_upper();
    // 4^{1-n/2}; an alias band equals its parent, so it inherits the
    // parent's cap (the n = 1 alias has length 4, above the literal bound)
    const long cap_exp =
        2 - static_cast<long>(node.order) + (node.alias ? 1 : 0);
    const Real cap = ldexp(real_from(1L), cap_exp);
    bool bad = false;
    if (len_max < lower) bad = true;
    if (len_min > upper) bad = true;
    if (len_max > cap) bad = true;
    if (bad) {
      ++rep.violations;
      if (rep.first_violation_word.empty())
        rep.first_violation_word = tree.word_string(id);
      continue;
    }
    rep.worst_lower_slack = std::min(
        rep.worst_lower_slack, log2_double(len_max) - log2_double(lower));
    rep.worst_upper_slack = std::min(
        rep.worst_upper_slack, log2_double(upper) - log2_double(len_min));
  }
  return rep;
}

DerivRatioStats verify_derivative_ratio(const BandTree& tree,
                                        std::uint32_t parent, std::uint32_t child,
                                        unsigned samples) {
  if (tree.nodes[child].parent != static_cast<std::int32_t>(parent)) {
    throw WordsNotInTree("verify_derivative_ratio: not a parent/child pair");
  }
  PrecisionScope scope(tree.eval_bits);
  const BandNode& pn = tree.nodes[parent];
  const BandNode& cn = tree.nodes[child];
  EvalCtx ctx{&tree.freq, tree.V, cn.order, tree.eval_bits};

  DerivRatioStats st;
  const Real& V = tree.V;
  const unsigned a = tree.freq.digit(cn.order);
  if (cn.sym.edge == EdgeLabel::e12) {
    st.bound_lo = pow(2 * (V - 8) / 3, static_cast<long>(a - 1));
    st.bound_hi = pow(2 * (V + 5), static_cast<long>(a - 1));
  } else {
    const Real pi = real_pi();
    const unsigned q = cn.sym.tau + 1;
    Real s = sin(pi * static_cast<long>(cn.sym.l) / static_cast<long>(q));
    Real csc2 = 1 / (s * s);
    st.bound_lo = (V - 8) / 3 * static_cast<long>(q) * csc2;
    st.bound_hi = (V + 5) * static_cast<long>(q) * csc2;
  }

  Real lo = cn.lo_in, hi = cn.hi_in;
  Real step = (hi - lo) / static_cast<long>(samples + 1);
  bool first = true;
  for (unsigned i = 1; i <= samples; ++i) {
    Real x = lo + step * static_cast<long>(i);
    Real dc, dp;
    ctx(cn.poly, x, &dc);
    ctx(pn.poly, x, &dp);
    Real ratio = abs(dc / dp);
    if (first || ratio < st.min_ratio) st.min_ratio = ratio;
    if (first || ratio > st.max_ratio) st.max_ratio = ratio;
    first = false;
  }
  st.ok = st.min_ratio >= st.bound_lo && st.max_ratio <= st.bound_hi;
  return st;
}

TreeRatioReport verify_derivative_ratios(const BandTree& tree, unsigned samples) {
  TreeRatioReport rep;
  for (std::uint32_t id = 0; id < tree.nodes.size(); ++id) {
    const BandNode& node = tree.nodes[id];
    if (node.parent < 0) continue;
    ++rep.pairs;
    auto st = verify_derivative_ratio(
        tree, static_cast<std::uint32_t>(node.parent), id, samples);
    if (!st.ok) {
      ++rep.violations;
      if (rep.first_violation_word.empty())
        rep.first_violation_word = tree.word_string(id);
    }
    double var = log2_double(st.max_ratio) - log2_double(st.min_ratio);
    rep.max_band_variation = std::max(rep.max_band_variation, var);
  }
  return rep;
}

StructureReport verify_structure(const BandTree& tree) {
  PrecisionScope scope(tree.eval_bits);
  StructureReport rep;
  rep.nodes = tree.nodes.size();

  for (std::size_t n = 0; n + 1 < tree.levels.size(); ++n) {
    const unsigned a_next = tree.freq.digit(n + 1);
    const auto [b, e] = tree.levels[n];
    for (std::uint32_t id = b; id < e; ++id) {
      const BandNode& node = tree.nodes[id];
      // expected kept children
      std::size_t expected = 0;
      for (const ChildFamily& fam : children_spec(node.type, a_next, n)) {
        for (unsigned l = 1; l <= fam.count; ++l) {
          if (truncate_keep({fam.edge, fam.count, l}, tree.epsilon)) ++expected;
        }
      }
      if (expected != static_cast<std::size_t>(node.child_count)) {
        ++rep.count_mismatches;
      }
      // nesting + sibling order
      for (std::int32_t c = node.first_child;
           c < node.first_child + node.child_count; ++c) {
        const BandNode& ch = tree.nodes[c];
        if (ch.lo_out < node.lo_out || ch.hi_out > node.hi_out) {
          ++rep.nesting_failures;
        }
        if (c + 1 < node.first_child + node.child_count) {
          const BandNode& nx = tree.nodes[c + 1];
          if (!(ch.hi_out <= nx.lo_out)) ++rep.disjointness_failures;
        }
      }
    }
  }

  // sampled triple-emptiness: for type-I bands (poly (k,1)),
  // |t_{(k+1,0)}| <= 2 and |t_{(k,0)}| <= 2 cannot both hold inside
  for (std::uint32_t id = 0; id < tree.nodes.size(); ++id) {
    const BandNode& node = tree.nodes[id];
    if (node.parent < 0 || node.poly.p < 1) continue;
    for (int i = 1; i <= 3; ++i) {
      Real x = node.lo_in + (node.hi_in - node.lo_in) * i / 4;
      TraceEvaluator ev(tree.freq, tree.V, x, node.poly.k, false,
                        tree.eval_bits);
      Real own = abs(ev.trace(node.poly.k, node.poly.p));
      Real up = abs(ev.trace(node.poly.k + 1, 0));
      Real down = abs(ev.trace(node.poly.k, node.poly.p - 1));
      int inside = (own <= 2 ? 1 : 0) + (up <= 2 ? 1 : 0) + (down <= 2 ? 1 : 0);
      if (inside > 2) ++rep.triple_overlap_failures;
    }
  }
  return rep;
}

LadderCheck verify_ladder(const BandTree& tree, std::uint32_t node,
                          unsigned samples) {
  PrecisionScope scope(tree.eval_bits);
  ModifiedLadder lad = build_modified_ladder(tree, node);
  EvalCtx ctx{&tree.freq, tree.V, tree.nodes[node].order, tree.eval_bits};
  const Real pi = real_pi();

  LadderCheck chk;
  chk.rungs = lad.rungs.size();
  const std::size_t m = lad.m();
  const std::size_t span = lad.initial_length;
  // floor((n-k)/2) <= m <= sum a_i; the floor is attained by odd-length
  // golden words whose final rung is a deleted alias
  if (!(span <= 2 * m + 1 && m <= lad.digit_sum)) chk.count_bounds_ok = false;

  for (std::size_t i = 0; i + 1 < lad.rungs.size(); ++i) {
    const LadderRung& cur = lad.rungs[i];
    const LadderRung& nxt = lad.rungs[i + 1];
    const unsigned p = cur.p_i, l = cur.l_i;
    const unsigned q = p + 1;
    int matched_sign = 0;
    for (unsigned s = 1; s <= samples; ++s) {
      Real x = nxt.lo + (nxt.hi - nxt.lo) * static_cast<long>(s) /
                            static_cast<long>(samples + 1);
      Real h_i = ctx(cur.poly, x);
      Real s_next = chebyshev_S(static_cast<long>(p + 1), h_i);
      Real s_cur = chebyshev_S(static_cast<long>(p), h_i);
      if (abs(s_next) > Real(1) / 4 + ldexp(real_from(1L), -30))
        chk.chebyshev_ok = false;
      if (abs(s_cur) > Real(5) / 4 + ldexp(real_from(1L), -30))
        chk.chebyshev_ok = false;
      // window membership: theta q / pi within l +- 1/10 or its mirror
      Real h_clamped = h_i;
      if (h_clamped > 2) h_clamped = real_from(2L);
      if (h_clamped < -2) h_clamped = real_from(-2L);
      Real theta = acos(h_clamped / 2);
      Real idx = theta * static_cast<long>(q) / pi;
      Real d1 = abs(idx - static_cast<long>(l));
      Real d2 = abs(idx - static_cast<long>(q - l));
      Real tol = Real(1) / 10 + ldexp(real_from(1L), -20);
      if (d1 > tol && d2 > tol) chk.window_ok = false;
      // branch: h_{i+1} = z_pm(h_i, h_{i-1}) S_{p+1}(h_i) - h_{i-1} S_p(h_i)
      if (i >= 1) {
        const LadderRung& prv = lad.rungs[i - 1];
        Real h_prev = ctx(prv.poly, x);
        Real h_next = ctx(nxt.poly, x);
        Real tol2 = ldexp(abs(h_next) + 1, -static_cast<long>(tree.eval_bits) / 4);
        int got = 0;
        for (int sgn : {+1, -1}) {
          Real z = z_branch(h_i, h_prev, tree.V, sgn);
          Real rhs = z * s_next - h_prev * s_cur;
          if (abs(rhs - h_next) <= tol2) {
            got = sgn;
            break;
          }
        }
        if (got == 0) {
          chk.branch_ok = false;
        } else if (matched_sign == 0) {
          matched_sign = got;
        }
      }
    }
    chk.branch_signs.push_back(matched_sign);
  }
  return chk;
}

std::vector<Gap> gaps_of_order(const BandTree& tree, std::size_t k) {
  if (k + 1 >= tree.levels.size()) {
    throw DepthUnavailable("gaps of order " + std::to_string(k) +
                           " need depth " + std::to_string(k + 1));
  }
  std::vector<Gap> gaps;
  const auto [b, e] = tree.levels[k];
  for (std::uint32_t id = b; id < e; ++id) {
    const BandNode& node = tree.nodes[id];
    for (std::int32_t c = node.first_child;
         c + 1 < node.first_child + node.child_count; ++c) {
      Gap g;
      g.parent = id;
      g.lo = (tree.nodes[c].hi_in + tree.nodes[c].hi_out) / 2;
      g.hi = (tree.nodes[c + 1].lo_out + tree.nodes[c + 1].lo_in) / 2;
      gaps.push_back(std::move(g));
    }
  }
  return gaps;
}

}  // namespace sturm
