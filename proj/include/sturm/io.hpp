#ifndef STURM_IO_HPP
#define STURM_IO_HPP

#include <ostream>
#include <string>
#include <vector>

#include "sturm/bandtree.hpp"
#include "sturm/gibbs.hpp"
#include "sturm/real.hpp"

namespace sturm {

// Reproducibility header carried verbatim in every output file.
struct OutputHeader {
  std::string config;   // the exact CLI/config line
  unsigned precision_bits = 0;
  std::string version;
};

// Band dump: array of {word, order, type, lo, hi, len} with values as
// decimal strings; a global precision field in the header.
void write_bands_json(std::ostream& os, const BandTree& tree, std::size_t level,
                      const OutputHeader& header);
void write_bands_csv(std::ostream& os, const BandTree& tree, std::size_t level,
                     const OutputHeader& header);

void write_gaps_json(std::ostream& os, const BandTree& tree, std::size_t order,
                     const OutputHeader& header);
void write_gaps_csv(std::ostream& os, const BandTree& tree, std::size_t order,
                    const OutputHeader& header);

// Debug dump of a trace table.
void write_trace_table_json(std::ostream& os, const TraceLevelTable& table,
                            const OutputHeader& header);

// Measure dump {beta, epsilon, m, entries: [{word, mass}]}.
void write_measure_json(std::ostream& os, const GibbsApprox& measure,
                        const OutputHeader& header);

// Pre-dimension report rows.
struct PredimRow {
  std::size_t k;
  std::string eps;
  Real b_mid;
  Real s_lo, s_hi;
  Real gap_sum;
  Real bracket_lo, bracket_hi;
  bool clamped = false;
};

void write_predim_csv(std::ostream& os, const std::vector<PredimRow>& rows,
                      const OutputHeader& header);
void write_predim_json(std::ostream& os, const std::vector<PredimRow>& rows,
                       const OutputHeader& header);

// Gibbs diagnostics CSV: per (type, k) min/max ratios.
void write_gibbs_diag_csv(std::ostream& os,
                          const std::vector<GibbsDiagnostics>& diags,
                          const OutputHeader& header);

std::string word_compact(const BandTree& tree, std::uint32_t id);

}  // namespace sturm

#endif
