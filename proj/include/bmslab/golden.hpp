#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmslab/relativity.hpp"
#include "bmslab/report.hpp"

namespace bmslab {

/// Identifiers of the shipped reference tables.
const std::vector<std::string>& golden_ids();

/// Reference values for one multi-pen table. Vectors are indexed
/// [pen position][level], levels ascending.
struct GoldenTable {
  std::string id;
  std::string title;
  /// Cell-by-cell comparison, or qualitative checks only.
  bool cell_checks = true;
  /// Table whose relativities the qualitative spread check compares against.
  std::optional<std::string> companion;
  /// Configuration document without the pen, which each column overrides.
  nlohmann::json config;
  std::vector<int> pens;
  std::vector<std::vector<double>> relativity;
  std::vector<std::vector<double>> prob;
  std::vector<double> hmse;
};

/// Loads `<dir>/<id>.json`. Throws UsageError for an unknown id and
/// ConfigError for a malformed file.
GoldenTable load_golden(const std::filesystem::path& dir, const std::string& id);

/// Cell tolerances.
struct Tolerance {
  double relativity_abs = 0.0015;
  /// Applied instead of the absolute bound when the reference exceeds 1.
  double relativity_rel_above_one = 0.002;
  double prob_abs = 0.0015;
  std::optional<double> hmse_abs;
  std::optional<double> hmse_rel;
};

Tolerance tolerance_for(const std::string& id);

struct CellDiff {
  int pen = 0;
  /// -1 for the HMSE row.
  int level = 0;
  std::string quantity;
  double computed = 0.0;
  double golden = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct QualitativeCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct Reproduction {
  GoldenTable golden;
  std::vector<RelativityTable> computed;
  std::vector<CellDiff> cells;
  std::vector<QualitativeCheck> checks;

  bool pass() const;
};

/// Computes every pen column of the table.
std::vector<RelativityTable> compute_columns(const GoldenTable& golden, const Numerics& numerics);

/// Compares against the reference. `companion` supplies the computed
/// columns of the companion table when the golden table names one.
Reproduction reproduce(const GoldenTable& golden, const Numerics& numerics,
                       const std::vector<RelativityTable>* companion = nullptr);

/// Qualitative checks on multi-pen columns: relativities non-increasing in
/// pen at each level; P(L = z) non-decreasing and P(L = 0) non-increasing in
/// pen. With `companion`: spread (max - min) below the companion's at every
/// pen, and every relativity below 1.
std::vector<QualitativeCheck> qualitative_checks(
    const std::vector<RelativityTable>& columns,
    const std::vector<RelativityTable>* companion);

void write_reproduction(std::ostream& os, const Reproduction& r, Format format);

}  // namespace bmslab
