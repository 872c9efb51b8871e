#include "sturm/io.hpp"

#include <json.hpp>

#include "sturm/dimension.hpp"
#include "sturm/errors.hpp"

namespace sturm {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

unsigned out_digits(unsigned bits) { return digits10_for_bits(bits); }

std::string dec(const Real& v, unsigned bits) {
  return to_decimal_string(v, out_digits(bits));
}

ordered_json header_json(const OutputHeader& h) {
  ordered_json j;
  j["config"] = h.config;
  j["precision_bits"] = h.precision_bits;
  j["version"] = h.version;
  return j;
}

void write_csv_header(std::ostream& os, const OutputHeader& h) {
  os << "# config: " << h.config << "\n";
  os << "# precision_bits: " << h.precision_bits << "\n";
  os << "# version: " << h.version << "\n";
}

ordered_json word_json(const BandTree& tree, std::uint32_t id) {
  ordered_json w = ordered_json::array();
  for (const Symbol& s : tree.word(id)) {
    w.push_back({to_string(s.edge), s.tau, s.l});
  }
  return w;
}

}  // namespace

std::string word_compact(const BandTree& tree, std::uint32_t id) {
  std::string out;
  for (const Symbol& s : tree.word(id)) {
    if (!out.empty()) out += '|';
    out += to_string(s.edge);
    out += ':';
    out += std::to_string(s.tau);
    out += ':';
    out += std::to_string(s.l);
  }
  if (out.empty()) {
    out = tree.nodes[id].type == BandType::I ? "B_I" : "B_III";
  }
  return out;
}

void write_bands_json(std::ostream& os, const BandTree& tree, std::size_t level,
                      const OutputHeader& header) {
  const unsigned bits = tree.eval_bits;
  ordered_json j;
  j["header"] = header_json(header);
  j["level"] = level;
  ordered_json bands = ordered_json::array();
  for (const BandNode& node : tree.level(level)) {
    const auto id = static_cast<std::uint32_t>(&node - tree.nodes.data());
    ordered_json b;
    b["word"] = word_json(tree, id);
    b["order"] = node.order;
    b["type"] = to_string(node.type);
    b["lo"] = dec((node.lo_out + node.lo_in) / 2, bits);
    b["hi"] = dec((node.hi_in + node.hi_out) / 2, bits);
    b["len"] = dec(node.length(), bits);
    bands.push_back(std::move(b));
  }
  j["bands"] = std::move(bands);
  os << j.dump(1) << "\n";
}

void write_bands_csv(std::ostream& os, const BandTree& tree, std::size_t level,
                     const OutputHeader& header) {
  const unsigned bits = tree.eval_bits;
  write_csv_header(os, header);
  os << "word,order,type,lo,hi,len\n";
  for (const BandNode& node : tree.level(level)) {
    const auto id = static_cast<std::uint32_t>(&node - tree.nodes.data());
    os << word_compact(tree, id) << "," << node.order << ","
       << to_string(node.type) << "," << dec((node.lo_out + node.lo_in) / 2, bits)
       << "," << dec((node.hi_in + node.hi_out) / 2, bits) << ","
       << dec(node.length(), bits) << "\n";
  }
}

void write_gaps_json(std::ostream& os, const BandTree& tree, std::size_t order,
                     const OutputHeader& header) {
  const unsigned bits = tree.eval_bits;
  ordered_json j;
  j["header"] = header_json(header);
  j["order"] = order;
  ordered_json gaps = ordered_json::array();
  for (const Gap& g : gaps_of_order(tree, order)) {
    ordered_json e;
    e["word"] = word_json(tree, g.parent);
    e["order"] = order;
    e["type"] = to_string(tree.nodes[g.parent].type);
    e["lo"] = dec(g.lo, bits);
    e["hi"] = dec(g.hi, bits);
    e["len"] = dec(g.length(), bits);
    gaps.push_back(std::move(e));
  }
  j["gaps"] = std::move(gaps);
  os << j.dump(1) << "\n";
}

void write_gaps_csv(std::ostream& os, const BandTree& tree, std::size_t order,
                    const OutputHeader& header) {
  const unsigned bits = tree.eval_bits;
  write_csv_header(os, header);
  os << "word,order,type,lo,hi,len\n";
  for (const Gap& g : gaps_of_order(tree, order)) {
    os << word_compact(tree, g.parent) << "," << order << ","
       << to_string(tree.nodes[g.parent].type) << "," << dec(g.lo, bits) << ","
       << dec(g.hi, bits) << "," << dec(g.length(), bits) << "\n";
  }
}

void write_trace_table_json(std::ostream& os, const TraceLevelTable& table,
                            const OutputHeader& header) {
  const unsigned bits = table.value_bits;
  ordered_json j;
  j["header"] = header_json(header);
  j["x"] = dec(table.x, bits);
  j["V"] = dec(table.V, bits);
  j["precision_bits"] = bits;
  ordered_json rows = ordered_json::array();
  for (std::size_t k = 0; k < table.t.size(); ++k) {
    ordered_json row;
    row["k"] = k;
    ordered_json vals = ordered_json::array();
    for (long p = -1; p <= table.extent(k); ++p) {
      vals.push_back(dec(table.at(k, p), bits));
    }
    row["p_from"] = -1;
    row["t"] = std::move(vals);
    if (!table.d.empty()) {
      ordered_json dvals = ordered_json::array();
      for (long p = -1; p <= table.extent(k); ++p) {
        dvals.push_back(dec(table.dat(k, p), bits));
      }
      row["dt"] = std::move(dvals);
    }
    rows.push_back(std::move(row));
  }
  j["levels"] = std::move(rows);
  os << j.dump(1) << "\n";
}

void write_measure_json(std::ostream& os, const GibbsApprox& measure,
                        const OutputHeader& header) {
  const BandTree& tree = measure.tree();
  const unsigned bits = tree.eval_bits;
  ordered_json j;
  j["header"] = header_json(header);
  j["beta"] = dec(measure.beta(), bits);
  j["epsilon"] = tree.epsilon.str();
  j["m"] = measure.order();
  ordered_json entries = ordered_json::array();
  const auto [b, e] = tree.levels[measure.order()];
  for (std::uint32_t id = b; id < e; ++id) {
    ordered_json en;
    en["word"] = word_json(tree, id);
    en["mass"] = dec(measure.mass(id), bits);
    entries.push_back(std::move(en));
  }
  j["entries"] = std::move(entries);
  os << j.dump(1) << "\n";
}

void write_predim_csv(std::ostream& os, const std::vector<PredimRow>& rows,
                      const OutputHeader& header) {
  write_csv_header(os, header);
  os << "k,eps,b,s_lo,s_hi,gap_sum,bracket_lo,bracket_hi,clamped\n";
  for (const PredimRow& r : rows) {
    os << r.k << "," << r.eps << "," << to_decimal_string(r.b_mid, 20) << ","
       << to_decimal_string(r.s_lo, 20) << "," << to_decimal_string(r.s_hi, 20)
       << "," << to_decimal_string(r.gap_sum, 20) << ","
       << to_decimal_string(r.bracket_lo, 20) << ","
       << to_decimal_string(r.bracket_hi, 20) << "," << (r.clamped ? 1 : 0)
       << "\n";
  }
}

void write_predim_json(std::ostream& os, const std::vector<PredimRow>& rows,
                       const OutputHeader& header) {
  ordered_json j;
  j["header"] = header_json(header);
  ordered_json arr = ordered_json::array();
  for (const PredimRow& r : rows) {
    ordered_json e;
    e["k"] = r.k;
    e["eps"] = r.eps;
    e["b"] = to_decimal_string(r.b_mid, 20);
    e["s_lo"] = to_decimal_string(r.s_lo, 20);
    e["s_hi"] = to_decimal_string(r.s_hi, 20);
    e["gap_sum"] = to_decimal_string(r.gap_sum, 20);
    e["bracket_lo"] = to_decimal_string(r.bracket_lo, 20);
    e["bracket_hi"] = to_decimal_string(r.bracket_hi, 20);
    e["clamped"] = r.clamped;
    arr.push_back(std::move(e));
  }
  j["rows"] = std::move(arr);
  os << j.dump(1) << "\n";
}

void write_gibbs_diag_csv(std::ostream& os,
                          const std::vector<GibbsDiagnostics>& diags,
                          const OutputHeader& header) {
  write_csv_header(os, header);
  os << "k,type,count,min_ratio_A,max_ratio_A,min_ratio_pow,max_ratio_pow\n";
  for (const GibbsDiagnostics& d : diags) {
    for (const auto& [type, st] : d.per_type) {
      os << d.level << "," << to_string(type) << "," << st.count << ","
         << to_decimal_string(st.min_a, 16) << ","
         << to_decimal_string(st.max_a, 16) << ","
         << to_decimal_string(st.min_pow, 16) << ","
         << to_decimal_string(st.max_pow, 16) << "\n";
    }
  }
}

}  // namespace sturm
