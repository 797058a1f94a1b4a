#include "bmslab/golden.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "bmslab/config.hpp"
#include "bmslab/error.hpp"

namespace bmslab {

using nlohmann::json;

const std::vector<std::string>& golden_ids() {
  static const std::vector<std::string> ids{"1a", "1b", "1c", "2a", "2b",
                                            "2c", "7a", "7b", "8a", "8b"};
  return ids;
}

GoldenTable load_golden(const std::filesystem::path& dir, const std::string& id) {
  const auto& ids = golden_ids();
  if (std::find(ids.begin(), ids.end(), id) == ids.end())
    throw UsageError(fmt::format("unknown table id '{}' (expected one of 1a,1b,1c,2a,2b,2c,"
                                 "7a,7b,8a,8b)",
                                 id));
  const auto path = dir / (id + ".json");
  const json doc = read_json(path);
  GoldenTable g;
  try {
    g.id = doc.at("id").get<std::string>();
    g.title = doc.at("title").get<std::string>();
    g.cell_checks = doc.at("check").get<std::string>() == "cells";
    if (doc.contains("companion")) g.companion = doc.at("companion").get<std::string>();
    g.config = doc.at("config");
    g.pens = doc.at("pens").get<std::vector<int>>();
    g.relativity = doc.at("relativity").get<std::vector<std::vector<double>>>();
    g.prob = doc.at("prob").get<std::vector<std::vector<double>>>();
    g.hmse = doc.at("hmse").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("'{}': {}", path.string(), e.what()));
  }
  const auto z = g.config.at("rule").at("z").get<std::size_t>();
  const auto ok = [&](const auto& m) {
    return m.size() == g.pens.size() &&
           std::all_of(m.begin(), m.end(), [&](const auto& v) { return v.size() == z + 1; });
  };
  if (g.id != id || !ok(g.relativity) || !ok(g.prob) || g.hmse.size() != g.pens.size())
    throw ConfigError(fmt::format("'{}' has inconsistent dimensions", path.string()));
  return g;
}

Tolerance tolerance_for(const std::string& id) {
  Tolerance t;
  if (id == "1a" || id == "1b")
    t.hmse_abs = 2e-5;
  else if (id == "1c")
    t.hmse_rel = 0.002;
  else if (id[0] == '2')
    t.hmse_rel = 1e-3;
  return t;
}

bool Reproduction::pass() const {
  return std::all_of(cells.begin(), cells.end(), [](const CellDiff& c) { return c.pass; }) &&
         std::all_of(checks.begin(), checks.end(),
                     [](const QualitativeCheck& c) { return c.pass; });
}

std::vector<RelativityTable> compute_columns(const GoldenTable& golden, const Numerics& numerics) {
  std::vector<RelativityTable> out;
  for (int pen : golden.pens) {
    json doc = golden.config;
    doc["rule"]["pen"] = pen;
    RunConfig cfg = parse_config(doc);
    out.push_back(optimal_relativities(cfg.rule, cfg.portfolio, cfg.effect, numerics));
  }
  return out;
}

namespace {

double spread(const RelativityTable& t) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& r : t.relativity)
    if (r) {
      lo = std::min(lo, *r);
      hi = std::max(hi, *r);
    }
  return hi - lo;
}

}  // namespace

std::vector<QualitativeCheck> qualitative_checks(const std::vector<RelativityTable>& columns,
                                                 const std::vector<RelativityTable>* companion) {
  std::vector<QualitativeCheck> out;
  if (columns.empty()) return out;
  const std::size_t levels = columns.front().relativity.size();
  const std::size_t z = levels - 1;

  QualitativeCheck mono{"relativity non-increasing in pen at every level", true, ""};
  for (std::size_t l = 0; l < levels && mono.pass; ++l)
    for (std::size_t p = 1; p < columns.size(); ++p) {
      const auto& a = columns[p - 1].relativity[l];
      const auto& b = columns[p].relativity[l];
      if (a && b && *b > *a) {
        mono.pass = false;
        mono.detail = fmt::format("level {}: {:.6f} at pen {} -> {:.6f} at pen {}", l, *a,
                                  columns[p - 1].rule.pen, *b, columns[p].rule.pen);
        break;
      }
    }
  out.push_back(mono);

  QualitativeCheck top{"P(L=z) non-decreasing in pen", true, ""};
  QualitativeCheck bottom{"P(L=0) non-increasing in pen", true, ""};
  for (std::size_t p = 1; p < columns.size(); ++p) {
    const auto& a = columns[p - 1];
    const auto& b = columns[p];
    if (top.pass && b.level_prob[z] < a.level_prob[z]) {
      top.pass = false;
      top.detail = fmt::format("{:.6f} at pen {} -> {:.6f} at pen {}", a.level_prob[z],
                               a.rule.pen, b.level_prob[z], b.rule.pen);
    }
    if (bottom.pass && b.level_prob[0] > a.level_prob[0]) {
      bottom.pass = false;
      bottom.detail = fmt::format("{:.6f} at pen {} -> {:.6f} at pen {}", a.level_prob[0],
                                  a.rule.pen, b.level_prob[0], b.rule.pen);
    }
  }
  out.push_back(top);
  out.push_back(bottom);

  if (!companion) return out;

  QualitativeCheck less{"spread (max - min) below the companion table's at every pen", true, ""};
  if (companion->size() != columns.size()) {
    less.pass = false;
    less.detail = "companion has a different number of pen columns";
  }
  for (std::size_t p = 0; p < columns.size() && less.pass; ++p) {
    const double mine = spread(columns[p]), theirs = spread((*companion)[p]);
    if (!(mine < theirs)) {
      less.pass = false;
      less.detail =
          fmt::format("pen {}: spread {:.6f} vs companion {:.6f}", columns[p].rule.pen, mine, theirs);
    }
  }
  out.push_back(less);

  QualitativeCheck below{"every relativity below 1", true, ""};
  for (const auto& c : columns) {
    for (std::size_t l = 0; l < levels; ++l) {
      const auto& r = c.relativity[l];
      if (r && !(*r < 1.0)) {
        if (below.pass) below.detail = fmt::format("pen {} level {}: {:.6f}", c.rule.pen, l, *r);
        below.pass = false;
      }
    }
  }
  out.push_back(below);
  return out;
}

Reproduction reproduce(const GoldenTable& golden, const Numerics& numerics,
                       const std::vector<RelativityTable>* companion) {
  Reproduction r;
  r.golden = golden;
  r.computed = compute_columns(golden, numerics);
  if (!golden.cell_checks) {
    if (golden.companion && !companion)
      throw ConfigError(fmt::format("table {} needs its companion {}", golden.id, *golden.companion));
    r.checks = qualitative_checks(r.computed, golden.companion ? companion : nullptr);
    return r;
  }
  const Tolerance tol = tolerance_for(golden.id);
  for (std::size_t p = 0; p < golden.pens.size(); ++p) {
    const RelativityTable& t = r.computed[p];
    const int pen = golden.pens[p];
    for (std::size_t l = 0; l < t.relativity.size(); ++l) {
      const double ref = golden.relativity[p][l];
      const double got = t.relativity[l].value_or(std::numeric_limits<double>::quiet_NaN());
      const double bound = ref > 1.0 ? tol.relativity_rel_above_one * ref : tol.relativity_abs;
      r.cells.push_back({pen, static_cast<int>(l), "relativity", got, ref, bound,
                         std::abs(got - ref) <= bound});
    }
    for (std::size_t l = 0; l < t.level_prob.size(); ++l) {
      const double ref = golden.prob[p][l];
      const double got = t.level_prob[l];
      r.cells.push_back({pen, static_cast<int>(l), "prob", got, ref, tol.prob_abs,
                         std::abs(got - ref) <= tol.prob_abs});
    }
    const double ref = golden.hmse[p];
    const double bound = tol.hmse_abs ? *tol.hmse_abs : tol.hmse_rel.value_or(0.0) * ref;
    r.cells.push_back({pen, -1, "hmse", t.hmse, ref, bound, std::abs(t.hmse - ref) <= bound});
  }
  return r;
}

void write_reproduction(std::ostream& os, const Reproduction& r, Format format) {
  const bool csv = format == Format::kCsv;
  const auto& g = r.golden;
  if (csv)
    os << "# table=" << g.id << ",title=" << g.title << '\n';
  else
    os << "## " << g.id << ": " << g.title << "\n\n";

  if (g.cell_checks) {
    if (csv) {
      os << "pen,level,quantity,computed,reference,abs_diff,tolerance,status\n";
      for (const auto& c : r.cells)
        os << fmt::format("{},{},{},{:.10g},{},{:.3g},{:.3g},{}\n", c.pen,
                          c.level < 0 ? std::string("NA") : std::to_string(c.level), c.quantity,
                          c.computed, c.golden, std::abs(c.computed - c.golden), c.tolerance,
                          c.pass ? "PASS" : "FAIL");
    } else {
      for (std::size_t p = 0; p < g.pens.size(); ++p) {
        os << "pen = " << g.pens[p] << "\n\n";
        os << "| level | relativity | reference | diff | P(L=l) | reference | diff | status |\n"
              "|------:|-----------:|----------:|-----:|-------:|----------:|-----:|:------:|\n";
        const std::size_t levels = g.relativity[p].size();
        const std::size_t base = p * (2 * levels + 1);
        for (std::size_t l = levels; l-- > 0;) {
          const auto& a = r.cells[base + l];
          const auto& b = r.cells[base + levels + l];
          os << fmt::format("| {:>5} | {:>10.3f} | {:>9.3f} | {:>+.4f} | {:>6.3f} | {:>9.3f} | "
                            "{:>+.4f} | {} |\n",
                            l, a.computed, a.golden, a.computed - a.golden, b.computed, b.golden,
                            b.computed - b.golden, a.pass && b.pass ? "PASS" : "FAIL");
        }
        const auto& h = r.cells[base + 2 * levels];
        os << fmt::format("\nHMSE {:.6g} vs {:.6g} (diff {:+.3g}, tolerance {:.3g}): {}\n\n",
                          h.computed, h.golden, h.computed - h.golden, h.tolerance,
                          h.pass ? "PASS" : "FAIL");
      }
    }
    const auto passed =
        std::count_if(r.cells.begin(), r.cells.end(), [](const CellDiff& c) { return c.pass; });
    os << (csv ? "# " : "") << (r.pass() ? "PASS" : "FAIL") << ": " << passed << " of "
       << r.cells.size() << " cells within tolerance\n";
    return;
  }

  if (csv) {
    os << "pen,level,relativity,stationary_prob,reference_relativity,reference_prob\n";
    for (std::size_t p = 0; p < r.computed.size(); ++p)
      for (std::size_t l = 0; l < r.computed[p].relativity.size(); ++l)
        os << fmt::format("{},{},{:.10g},{:.10g},{},{}\n", g.pens[p], l,
                          r.computed[p].relativity[l].value_or(NAN), r.computed[p].level_prob[l],
                          g.relativity[p][l], g.prob[p][l]);
    for (std::size_t p = 0; p < r.computed.size(); ++p)
      os << fmt::format("# pen={},hmse={:.10g},reference_hmse={}\n", g.pens[p],
                        r.computed[p].hmse, g.hmse[p]);
  } else {
    os << "| level |";
    for (int pen : g.pens) os << fmt::format(" zeta pen={} | P pen={} |", pen, pen);
    os << "\n|------:|";
    for (std::size_t p = 0; p < g.pens.size(); ++p) os << "-----------:|--------:|";
    os << '\n';
    const std::size_t levels = r.computed.front().relativity.size();
    for (std::size_t l = levels; l-- > 0;) {
      os << fmt::format("| {:>5} |", l);
      for (const auto& c : r.computed)
        os << fmt::format(" {:>10.3f} | {:>7.3f} |", c.relativity[l].value_or(NAN),
                          c.level_prob[l]);
      os << '\n';
    }
    os << "\nHMSE:";
    for (const auto& c : r.computed) os << fmt::format(" {:.6g}", c.hmse);
    os << "\n\n";
  }
  for (const auto& c : r.checks)
    os << (csv ? "# " : "- ") << (c.pass ? "PASS" : "FAIL") << ": " << c.name
       << (c.detail.empty() ? "" : " (" + c.detail + ")") << '\n';
  os << (csv ? "# " : "\n") << (r.pass() ? "PASS" : "FAIL") << ": qualitative checks\n";
}

}  // namespace bmslab
