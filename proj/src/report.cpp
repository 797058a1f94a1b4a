#include "bmslab/report.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "bmslab/error.hpp"

namespace bmslab {

Format parse_format(const std::string& name) {
  if (name == "csv") return Format::kCsv;
  if (name == "md" || name == "markdown") return Format::kMarkdown;
  throw ConfigError(fmt::format("format must be 'csv' or 'md' (got '{}')", name));
}

namespace {

using Row = std::vector<std::string>;

void write_markdown(std::ostream& os, const std::vector<Row>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    width.resize(std::max(width.size(), r.size()), 3);
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  const auto line = [&](const Row& r) {
    os << '|';
    for (std::size_t c = 0; c < width.size(); ++c)
      os << ' ' << fmt::format("{:>{}}", c < r.size() ? r[c] : "", width[c]) << " |";
    os << '\n';
  };
  line(rows.front());
  os << '|';
  for (auto w : width) os << std::string(w + 1, '-') << ":|";
  os << '\n';
  for (std::size_t i = 1; i < rows.size(); ++i) line(rows[i]);
}

void write_csv(std::ostream& os, const std::vector<Row>& rows) {
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << r[c];
    os << '\n';
  }
}

void write_rows(std::ostream& os, const std::vector<Row>& rows, Format format) {
  if (format == Format::kCsv)
    write_csv(os, rows);
  else
    write_markdown(os, rows);
}

}  // namespace

void write_table(std::ostream& os, const RelativityTable& table, const TableMeta& meta,
                 Format format) {
  const bool csv = format == Format::kCsv;
  std::vector<Row> rows{{"level", "relativity", "stationary_prob"}};
  for (std::size_t l = 0; l < table.relativity.size(); ++l) {
    const auto& r = table.relativity[l];
    const double p = table.level_prob[l];
    rows.push_back({std::to_string(l),
                    r ? (csv ? fmt::format("{:.12g}", *r) : fmt::format("{:.3f}", *r)) : "NA",
                    csv ? fmt::format("{:.12g}", p) : fmt::format("{:.3f}", p)});
  }
  write_rows(os, rows, format);
  const std::string footer =
      fmt::format("hmse={:.12g},rule={},z={},model={},nodes={},fingerprint={}", table.hmse,
                  table.rule.label(), table.rule.z, to_string(table.model), meta.nodes,
                  meta.fingerprint);
  if (csv)
    os << "# " << footer << '\n';
  else
    os << '\n' << "HMSE: " << fmt::format("{:.5f}", table.hmse) << "  (" << footer << ")\n";
}

void write_trace(std::ostream& os, const Trajectory& trajectory, Format format) {
  Row t{"t"}, n{"N(t+1)"}, l{"L(t)"}, p{"pen*(t)"}, a{"L*(t)"};
  for (std::size_t i = 0; i < trajectory.levels.size(); ++i) {
    t.push_back(std::to_string(i));
    n.push_back(i < trajectory.claims.size() ? std::to_string(trajectory.claims[i]) : "");
    l.push_back(std::to_string(trajectory.levels[i]));
    p.push_back(std::to_string(trajectory.penalties[i]));
    a.push_back(to_string(trajectory.augmented[i]));
  }
  write_rows(os, {t, n, l, p, a}, format);
}

void write_simulation(std::ostream& os, const std::vector<CellCheck>& cells,
                      const Estimate& empirical_hmse, double analytic_hmse, double hmse_se_k,
                      Format format) {
  std::vector<Row> rows{{"level", "empirical_prob", "analytic_prob", "se", "z_score", "status"}};
  bool all = true;
  for (const auto& c : cells) {
    all = all && c.pass;
    rows.push_back({std::to_string(c.level), fmt::format("{:.6f}", c.empirical),
                    fmt::format("{:.6f}", c.analytic), fmt::format("{:.6f}", c.se),
                    fmt::format("{:.2f}", (c.empirical - c.analytic) / c.se),
                    c.pass ? "PASS" : "FAIL"});
  }
  const double z = empirical_hmse.se > 0.0
                       ? (empirical_hmse.value - analytic_hmse) / empirical_hmse.se
                       : (empirical_hmse.value == analytic_hmse ? 0.0 : INFINITY);
  const bool hmse_pass = std::abs(z) <= hmse_se_k;
  rows.push_back({"hmse", fmt::format("{:.8g}", empirical_hmse.value),
                  fmt::format("{:.8g}", analytic_hmse), fmt::format("{:.4g}", empirical_hmse.se),
                  fmt::format("{:.2f}", z), hmse_pass ? "PASS" : "FAIL"});
  write_rows(os, rows, format);
  const std::string summary = fmt::format("{}: {} of {} cells pass", all && hmse_pass ? "PASS" : "FAIL",
                                          std::count_if(cells.begin(), cells.end(),
                                                        [](const CellCheck& c) { return c.pass; }) +
                                              (hmse_pass ? 1 : 0),
                                          cells.size() + 1);
  os << (format == Format::kCsv ? "# " : "\n") << summary << '\n';
}

}  // namespace bmslab
