#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "bmslab/relativity.hpp"
#include "bmslab/simulator.hpp"
#include "bmslab/state_space.hpp"

namespace bmslab {

enum class Format { kCsv, kMarkdown };

Format parse_format(const std::string& name);

/// Provenance carried in the table footer.
struct TableMeta {
  int nodes = kDefaultNodes;
  std::string fingerprint;
};

/// CSV "level,relativity,stationary_prob" in ascending level order, "NA"
/// for undefined relativities, followed by a "# hmse=..." footer line.
/// Markdown renders the same rows at 3 decimals.
void write_table(std::ostream& os, const RelativityTable& table, const TableMeta& meta,
                 Format format);

/// Rows t, N(t+1), L(t), pen*(t), L*(t), one column per time point.
void write_trace(std::ostream& os, const Trajectory& trajectory, Format format);

/// Empirical vs analytic level probabilities with a PASS/FAIL column.
void write_simulation(std::ostream& os, const std::vector<CellCheck>& cells,
                      const Estimate& empirical_hmse, double analytic_hmse, double hmse_se_k,
                      Format format);

}  // namespace bmslab
