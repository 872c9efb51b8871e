// sturmlab: spectral band trees, pre-dimensions and growth functionals for
// Sturm Hamiltonians from the continued-fraction data of the frequency.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "sturm/dimension.hpp"
#include "sturm/errors.hpp"
#include "sturm/gibbs.hpp"
#include "sturm/io.hpp"

using namespace sturm;

namespace {

constexpr const char* kVersion = "sturmlab 0.1.0";

struct RunConfig {
  std::string cf = "periodic:1";
  std::string V = "24";
  std::size_t depth = 6;
  std::string epsilon = "0";
  std::string precision = "auto";
  unsigned threads = 1;
  std::string out;
  std::string format = "json";
  std::string gaps_out;
  std::vector<double> beta{0.5};
  std::string tol = "1e-10";
  std::size_t n_max = 200;
  std::size_t level = 3;
  long m = -1;
  std::string suite = "all";
  double gamma = 0.5;

  std::string echo(const std::string& cmd) const {
    std::ostringstream os;
    os << cmd << " --cf " << cf << " --V " << V << " --depth " << depth
       << " --epsilon " << epsilon << " --precision " << precision
       << " --threads " << threads;
    if (!out.empty()) os << " --out " << out;
    os << " --format " << format;
    return os.str();
  }
};

PrecisionPolicy parse_precision(const std::string& text) {
  if (text == "auto") return PrecisionPolicy::auto_grown();
  for (char c : text) {
    if (c < '0' || c > '9')
      throw ConfigError("precision must be 'auto' or a bit count, got '" +
                        text + "'");
  }
  return PrecisionPolicy::fixed(static_cast<unsigned>(std::stoul(text)));
}

struct Parsed {
  FrequencySpec freq = FrequencySpec::periodic({1});
  Real V;
  Rational eps;
  PrecisionPolicy prec;
};

Parsed parse_common(const RunConfig& cfg) {
  Parsed p;
  p.freq = FrequencySpec::parse(cfg.cf);
  Rational vq = parse_rational(cfg.V);
  p.eps = parse_rational(cfg.epsilon);
  const char* env = std::getenv("STURM_PRECISION");
  p.prec = parse_precision(cfg.precision == "auto" && env ? env : cfg.precision);
  set_working_precision(256);
  p.V = real_from(vq);
  if (p.eps < 0 || p.eps >= Rational{1, 12}) {
    throw EpsilonOutOfRange("epsilon must lie in [0, 1/12), got " + p.eps.str());
  }
  return p;
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw ConfigError("cannot open output file '" + path + "'");
  return file;
}

BandTree build_tree(const Parsed& p, const RunConfig& cfg) {
  ExpandOptions opts;
  opts.epsilon = p.eps;
  opts.prec = p.prec;
  opts.threads = cfg.threads;
  return expand_tree(p.freq, p.V, cfg.depth, opts);
}

int cmd_spectrum(const RunConfig& cfg) {
  Parsed p = parse_common(cfg);
  BandTree tree = build_tree(p, cfg);
  OutputHeader header{cfg.echo("spectrum"), tree.eval_bits, kVersion};

  std::ofstream file;
  std::ostream& os = open_out(cfg.out, file);
  if (cfg.format == "csv") {
    write_bands_csv(os, tree, tree.depth(), header);
  } else {
    write_bands_json(os, tree, tree.depth(), header);
  }
  if (!cfg.gaps_out.empty() && tree.depth() >= 1) {
    std::ofstream gf(cfg.gaps_out);
    if (!gf) throw ConfigError("cannot open gaps file '" + cfg.gaps_out + "'");
    if (cfg.format == "csv") {
      write_gaps_csv(gf, tree, tree.depth() - 1, header);
    } else {
      write_gaps_json(gf, tree, tree.depth() - 1, header);
    }
  }
  std::cerr << "levels:";
  for (std::size_t k = 0; k <= tree.depth(); ++k)
    std::cerr << " " << tree.level(k).size();
  std::cerr << "\n";
  return 0;
}

int cmd_predim(const RunConfig& cfg) {
  Parsed p = parse_common(cfg);
  Real tol = real_from(parse_rational(cfg.tol));

  DimBracket lower = dim_bracket_lower(p.freq, p.V, tol, cfg.n_max);
  auto rows_for = [&](const Rational& eps) {
    Parsed pe = p;
    pe.eps = eps;
    BandTree tree = build_tree(pe, cfg);
    std::vector<PredimRow> rows;
    for (std::size_t k = 1; k <= tree.depth(); ++k) {
      PredimRow row;
      row.k = k;
      row.eps = eps.str();
      row.b_mid = band_sum(tree, k, real_from(1L)).mid();
      try {
        SkResult s = solve_sk(tree, k, tol);
        row.s_lo = s.s_lo;
        row.s_hi = s.s_hi;
        row.clamped = s.clamped;
      } catch (const NoRootInUnitInterval& e) {
        std::cerr << "warning: " << e.what() << "\n";
        row.s_lo = row.s_hi = real_from(1L);
        row.clamped = true;
      }
      row.gap_sum = (k < tree.depth()) ? gap_sum(tree, k, row.s_hi)
                                       : real_from(0L);
      row.bracket_lo = lower.lo;
      row.bracket_hi = lower.hi;
      rows.push_back(std::move(row));
    }
    return rows;
  };

  std::vector<PredimRow> rows = rows_for(Rational{0});
  if (p.eps != 0) {
    auto extra = rows_for(p.eps);
    rows.insert(rows.end(), extra.begin(), extra.end());
  }

  OutputHeader header{cfg.echo("predim"),
                      p.prec.effective_bits(p.freq, p.V, cfg.depth), kVersion};
  std::ofstream file;
  std::ostream& os = open_out(cfg.out, file);
  if (cfg.format == "csv") {
    write_predim_csv(os, rows, header);
  } else {
    write_predim_json(os, rows, header);
  }
  return 0;
}

int cmd_fstar(const RunConfig& cfg) {
  Parsed p = parse_common(cfg);
  Real tol = real_from(parse_rational(cfg.tol));
  FStarResult fl = f_star(p.freq, Functional::Lower, tol, cfg.n_max);
  FStarResult fu = f_star(p.freq, Functional::Upper, tol, cfg.n_max);

  std::ofstream file;
  std::ostream& os = open_out(cfg.out, file);
  os << "# config: " << cfg.echo("fstar") << "\n";
  os << "# version: " << kVersion << "\n";
  if (fl.k_infinite) {
    os << "K_star = infinity; f_lower = 0, f_upper = 0\n";
    os << "s_* = s^* = 1 for V >= 24\n";
    return 0;
  }
  os << "f_lower = " << to_decimal_string(fl.value, 20)
     << (fl.exact_mode ? "  (exact period mode)" : "  (finite-n mode)") << "\n";
  os << "f_upper = " << to_decimal_string(fu.value, 20) << "\n";
  os << "-ln f_lower = " << to_decimal_string(fl.minus_log, 20) << "\n";
  os << "-ln f_upper = " << to_decimal_string(fu.minus_log, 20) << "\n";
  return 0;
}

int cmd_verify(const RunConfig& cfg) {
  Parsed p = parse_common(cfg);
  BandTree tree = build_tree(p, cfg);
  bool all = cfg.suite == "all";
  bool failed = false;
  auto line = [&](const char* name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name;
    if (!detail.empty()) std::cout << "  [" << detail << "]";
    std::cout << "\n";
    if (!ok) failed = true;
  };

  if (all || cfg.suite == "structure") {
    auto rep = verify_structure(tree);
    line("structure(counts,disjoint,nesting,triples)", rep.ok(),
         std::to_string(rep.nodes) + " nodes");
  }
  if (all || cfg.suite == "bounds") {
    auto rep = verify_band_bounds(tree);
    std::ostringstream d;
    d << "lower slack 2^" << rep.worst_lower_slack << ", upper slack 2^"
      << rep.worst_upper_slack;
    if (!rep.ok()) d << ", first violation " << rep.first_violation_word;
    line("band-length bounds (per-symbol product, 4^{1-n/2})", rep.ok(), d.str());
  }
  if (all || cfg.suite == "ratios") {
    auto rep = verify_derivative_ratios(tree, 9);
    std::ostringstream d;
    d << rep.pairs << " pairs, max in-band |h'| variation 2^"
      << rep.max_band_variation;
    if (!rep.ok()) d << ", first violation " << rep.first_violation_word;
    line("derivative-ratio bounds", rep.ok(), d.str());
  }
  if (all || cfg.suite == "ladders") {
    const auto [b, e] = tree.levels[tree.depth()];
    std::size_t step = (e - b) / 8 + 1;
    bool ok = true;
    std::size_t checked = 0;
    for (std::uint32_t id = b; id < e; id += step) {
      LadderCheck chk = verify_ladder(tree, id, 3);
      ok = ok && chk.count_bounds_ok && chk.window_ok && chk.chebyshev_ok &&
           chk.branch_ok;
      ++checked;
    }
    line("modified ladders (counts, windows, branches)", ok,
         std::to_string(checked) + " ladders sampled");
  }
  if (all || cfg.suite == "fricke") {
    PrecisionScope scope(tree.eval_bits);
    bool ok = true;
    const auto [b, e] = tree.levels[tree.depth()];
    std::size_t step = (e - b) / 6 + 1;
    auto policy = PrecisionPolicy::fixed(256);
    for (std::uint32_t id = b; id < e; id += step) {
      Real x = tree.nodes[id].midpoint();
      auto table = eval_traces(tree.freq, tree.V, x,
                               std::min(tree.depth(), std::size_t(10)), false,
                               policy);
      Real max_t = real_from(0L);
      for (std::size_t k = 0; k < table.t.size(); ++k)
        for (long q = -1; q <= table.extent(k); ++q) {
          Real aq = abs(table.at(k, q));
          if (aq > max_t) max_t = aq;
        }
      Real tol = ldexp((1 + max_t) * (1 + max_t), -128);
      for (std::size_t k = 0; k < table.t.size(); ++k)
        for (long q = -1; q < table.extent(k); ++q)
          if (fricke_residual(table, k, q) >= tol) ok = false;
    }
    line("fricke invariant residuals", ok, "");
  }
  if (all || cfg.suite == "bulb") {
    PrecisionScope scope(tree.eval_bits);
    Real g = real_from(cfg.gamma);
    Real slack = ldexp(real_from(1L), -60);
    bool ok = true;
    std::ostringstream margins;
    margins << "upper/lower margins per k:";
    for (std::size_t k = 0; k <= tree.depth(); ++k) {
      SumBounds bounds = matrix_bound_b(tree.freq, tree.V, g, k);
      SumBounds b = band_sum(tree, k, g);
      if (b.upper > bounds.upper * (1 + slack) ||
          b.lower < bounds.lower * (1 - slack))
        ok = false;
      margins << " " << to_decimal_string(bounds.upper / b.upper, 4) << "/"
              << to_decimal_string(b.lower / bounds.lower, 4);
    }
    line("bulb sandwich (matrix brackets)", ok, margins.str());
  }
  if (all || cfg.suite == "gibbs") {
    bool ok = true;
    std::ostringstream d;
    if (tree.depth() >= 5) {
      GibbsApprox mu =
          finite_gibbs(tree, real_from(cfg.beta.front()), tree.depth());
      std::size_t k = std::min<std::size_t>(cfg.level, tree.depth() - 3);
      GibbsDiagnostics diag = gibbs_ratio_report(mu, tree, k);
      PrecisionScope scope(tree.eval_bits);
      for (const auto& [type, st] : diag.per_type) {
        Real spread = st.max_a / st.min_a;
        d << to_string(type) << " spread " << to_decimal_string(spread, 5)
          << " ";
        if (spread > 100) ok = false;
      }
    } else {
      d << "skipped (needs depth >= 5)";
    }
    line("gibbs per-type ratio spreads", ok, d.str());
  }
  if (all || cfg.suite == "cov") {
    std::size_t lvl = std::min<std::size_t>(3, tree.depth() - 1);
    std::size_t suf = std::min<std::size_t>(3, tree.depth() - lvl);
    CovariationSweep sweep = covariation_sweep(tree, lvl, suf);
    PrecisionScope scope(tree.eval_bits);
    bool ok = sweep.max_ratio < 100;
    line("covariation sweep", ok,
         std::to_string(sweep.pairs) + " pairs, max ratio " +
             to_decimal_string(sweep.max_ratio, 5));
  }
  return failed ? 2 : 0;
}

int cmd_gibbs(const RunConfig& cfg) {
  Parsed p = parse_common(cfg);
  BandTree tree = build_tree(p, cfg);
  std::size_t m = cfg.m < 0 ? tree.depth() : static_cast<std::size_t>(cfg.m);
  OutputHeader header{cfg.echo("gibbs"), tree.eval_bits, kVersion};

  GibbsApprox mu = finite_gibbs(tree, real_from(cfg.beta.front()), m);
  std::ofstream file;
  std::ostream& os = open_out(cfg.out, file);
  write_measure_json(os, mu, header);

  if (m >= cfg.level + 3) {
    std::vector<GibbsDiagnostics> diags;
    diags.push_back(gibbs_ratio_report(mu, tree, cfg.level));
    std::string diag_path = cfg.out.empty() ? "" : cfg.out + ".diag.csv";
    if (!diag_path.empty()) {
      std::ofstream df(diag_path);
      write_gibbs_diag_csv(df, diags, header);
    } else {
      write_gibbs_diag_csv(std::cout, diags, header);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(kVersion) +
               " - spectra of Sturm Hamiltonians via trace-map recursions"};
  app.require_subcommand(1);

  RunConfig cfg;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--cf", cfg.cf,
                    "frequency: periodic:1,2 | eventually:2,3|1 | list:1,2,3 "
                    "| formula:k");
    sub->add_option("--V", cfg.V, "coupling (exact decimal or rational)");
    sub->add_option("--depth", cfg.depth, "tree depth");
    sub->add_option("--epsilon", cfg.epsilon, "truncation epsilon, e.g. 1/24");
    sub->add_option("--precision", cfg.precision, "bits or 'auto'");
    sub->add_option("--threads", cfg.threads, "worker threads");
    sub->add_option("--out", cfg.out, "output path (default stdout)");
    sub->add_option("--format", cfg.format, "json|csv")
        ->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--tol", cfg.tol, "root/bisection tolerance");
  };

  auto* spectrum = app.add_subcommand(
      "spectrum", "expand the band tree and dump the deepest level");
  add_common(spectrum);
  spectrum->add_option("--gaps-out", cfg.gaps_out, "also dump gaps here");

  auto* predim =
      app.add_subcommand("predim", "pre-dimension report s_k with brackets");
  add_common(predim);
  predim->add_option("--nmax", cfg.n_max, "growth horizon for f brackets");

  auto* fstar =
      app.add_subcommand("fstar", "growth functionals f_*, f^*, -ln f");
  add_common(fstar);
  fstar->add_option("--nmax", cfg.n_max, "growth horizon (finite-n mode)");

  auto* verify =
      app.add_subcommand("verify", "run the inequality suite on a tree");
  add_common(verify);
  verify->add_option("--suite", cfg.suite,
                     "all|structure|bounds|ratios|ladders|fricke|bulb|gibbs|cov");
  verify->add_option("--gamma", cfg.gamma, "exponent for the bulb suite");
  verify->add_option("--beta", cfg.beta, "beta grid (gibbs suite)");
  verify->add_option("--level", cfg.level, "diagnostics level k");

  auto* gibbs = app.add_subcommand(
      "gibbs", "finite-order gibbs measure dump and diagnostics");
  add_common(gibbs);
  gibbs->add_option("--beta", cfg.beta, "beta grid (first is dumped)");
  gibbs->add_option("--m", cfg.m, "measure order (default depth)");
  gibbs->add_option("--level", cfg.level, "diagnostics level k");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 4;
  }

  try {
    if (spectrum->parsed()) return cmd_spectrum(cfg);
    if (predim->parsed()) return cmd_predim(cfg);
    if (fstar->parsed()) return cmd_fstar(cfg);
    if (verify->parsed()) return cmd_verify(cfg);
    if (gibbs->parsed()) return cmd_gibbs(cfg);
  } catch (const PrecisionExhausted& e) {
    std::cerr << "precision exhausted: " << e.what() << "\n";
    return 3;
  } catch (const BoundViolated& e) {
    std::cerr << "bound violated: " << e.what() << "\n";
    return 2;
  } catch (const CountMismatch& e) {
    std::cerr << "count mismatch: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 4;
}
