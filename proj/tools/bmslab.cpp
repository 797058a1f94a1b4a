// bmslab: optimal relativities for -1/+h/pen bonus-malus systems.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "bmslab/config.hpp"
#include "bmslab/error.hpp"
#include "bmslab/golden.hpp"
#include "bmslab/markov.hpp"
#include "bmslab/relativity.hpp"
#include "bmslab/report.hpp"
#include "bmslab/simulator.hpp"
#include "bmslab/state_space.hpp"

#ifndef BMSLAB_DATA_DIR
#define BMSLAB_DATA_DIR "data"
#endif

namespace {

using namespace bmslab;
using nlohmann::json;

struct RuleFlags {
  std::optional<int> z, h, pen, l0;
  std::optional<std::string> system;

  void add(CLI::App* cmd) {
    cmd->add_option("--z", z, "Highest level");
    cmd->add_option("--h", h, "Levels added per claim");
    cmd->add_option("--pen", pen, "Penalty period");
    cmd->add_option("--l0", l0, "Starting level");
    cmd->add_option("--system", system, "Rule as -1/+h or -1/+h/pen");
  }

  void apply(json& rule) const {
    if (system) {
      const auto [hh, pp] = parse_system(*system);
      rule["h"] = hh;
      if (pp) rule["pen"] = *pp;
    }
    if (z) rule["z"] = *z;
    if (h) rule["h"] = *h;
    if (pen) rule["pen"] = *pen;
    if (l0) rule["l0"] = *l0;
  }
};

struct Common {
  std::string config;
  std::string format = "csv";
  std::string out;
  std::optional<int> nodes;
  RuleFlags rule;
};

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> out;
  std::string item;
  std::istringstream in(text);
  if (text.find_first_not_of(" \t") == std::string::npos) return out;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw UsageError(fmt::format("empty entry in {} '{}'", what, text));
    int v = 0;
    const char* first = item.data() + b;
    const char* last = item.data() + e + 1;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || v < 0)
      throw UsageError(fmt::format("{} must be non-negative integers separated by commas (bad "
                                   "entry '{}')",
                                   what, item));
    out.push_back(v);
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw UsageError(fmt::format("bad relativity entry '{}'", item));
    }
  }
  return out;
}

RunConfig resolve(const Common& c) {
  json doc = read_json(c.config);
  if (!doc.is_object()) throw ConfigError("configuration document must be a JSON object");
  if (!doc.contains("rule") || !doc["rule"].is_object()) throw ConfigError("missing key 'rule'");
  c.rule.apply(doc["rule"]);
  if (c.nodes) doc["numerics"]["quadrature_nodes"] = *c.nodes;
  return parse_config(doc);
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw ConfigError(fmt::format("cannot write '{}'", c.out));
  f << text;
}

void warn(const Portfolio& p) {
  for (const auto& w : p.warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_tabulate(const Common& c) {
  const Format format = parse_format(c.format);
  const RunConfig cfg = resolve(c);
  warn(cfg.portfolio);
  const RelativityTable t =
      optimal_relativities(cfg.rule, cfg.portfolio, cfg.effect, cfg.numerics);
  std::ostringstream os;
  write_table(os, t, {cfg.numerics.nodes, fingerprint(cfg.document)}, format);
  emit(c, os.str());
  return 0;
}

int cmd_trace(const Common& c, const std::string& claims_text) {
  const Format format = parse_format(c.format);
  json rule = {{"z", 20}, {"h", 2}, {"pen", 2}, {"l0", 10}};
  if (!c.config.empty()) {
    const json doc = read_json(c.config);
    if (!doc.contains("rule")) throw ConfigError("missing key 'rule'");
    rule = doc.at("rule");
  }
  c.rule.apply(rule);
  const BmsRule r = parse_config({{"rule", rule},
                                  {"model", {{"type", "frequency"}, {"sigma2", 0.0}}},
                                  {"portfolio", {{"classes", {{{"lambda1", 1.0}, {"weight", 1.0}}}}}}})
                        .rule;
  const std::vector<int> claims = parse_int_list(claims_text, "claims");
  std::ostringstream os;
  write_trace(os, replay_raw(claims, r), format);
  emit(c, os.str());
  return 0;
}

struct SimFlags {
  std::optional<std::uint64_t> seed, policyholders;
  std::optional<int> burn_in, measured_years;
  std::optional<std::string> relativities;
  unsigned threads = 0;
};

int cmd_simulate(const Common& c, const SimFlags& s) {
  const Format format = parse_format(c.format);
  RunConfig cfg = resolve(c);
  if (s.seed) cfg.simulation.seed = *s.seed;
  if (s.policyholders) cfg.simulation.policyholders = *s.policyholders;
  if (s.burn_in) cfg.simulation.burn_in = *s.burn_in;
  if (s.measured_years) cfg.simulation.measured_years = *s.measured_years;
  SimConfig sim = cfg.sim_config();
  sim.threads = s.threads;
  sim.validate();
  warn(cfg.portfolio);

  const MixingSummary summary = summarize(cfg.rule, cfg.portfolio, cfg.effect, cfg.numerics);
  const RelativityTable table = optimal_relativities(summary);
  std::vector<double> zeta = dense_relativities(table);
  if (s.relativities) {
    zeta = parse_double_list(*s.relativities);
    if (zeta.size() != static_cast<std::size_t>(cfg.rule.z) + 1)
      throw UsageError(fmt::format("--relativities has {} entries, expected z + 1 = {}",
                                   zeta.size(), cfg.rule.z + 1));
  }
  const double analytic = hmse(summary, zeta);

  const SimReport report = simulate(sim);
  const auto cells = compare_levels(report, table.level_prob, cfg.simulation.tolerance_se);
  const Estimate est = empirical_hmse(report, cfg.portfolio, cfg.effect, zeta);

  std::ostringstream os;
  if (format == Format::kCsv)
    os << fmt::format("# policyholders={},burn_in={},measured_years={},seed={},fingerprint={}\n",
                      sim.policyholders, sim.burn_in, sim.measured_years, sim.seed,
                      fingerprint(cfg.document));
  write_simulation(os, cells, est, analytic, 3.0, format);
  emit(c, os.str());
  return 0;
}

int cmd_reproduce(const Common& c, const std::string& id, const std::string& data_dir) {
  const Format format = parse_format(c.format);
  const std::filesystem::path dir = std::filesystem::path(data_dir) / "golden";
  const GoldenTable g = load_golden(dir, id);
  Numerics numerics;
  if (c.nodes) numerics.nodes = *c.nodes;
  if (numerics.nodes < 2) throw ConfigError("--nodes must be >= 2");

  std::optional<std::vector<RelativityTable>> companion;
  if (g.companion) companion = compute_columns(load_golden(dir, *g.companion), numerics);
  if (!g.cell_checks)
    std::cerr << "warning: joint class weights approximated by the product of marginal "
                 "proportions\n";
  const Reproduction r = reproduce(g, numerics, companion ? &*companion : nullptr);
  std::ostringstream os;
  write_reproduction(os, r, format);
  emit(c, os.str());
  return 0;
}

int cmd_inspect(const Common& c, std::optional<double> mean, bool matrix) {
  const RunConfig cfg = resolve(c);
  warn(cfg.portfolio);
  auto space = std::make_shared<const StateSpace>(cfg.rule);
  std::ostringstream os;
  os << fmt::format("rule: {} z={} l0={}\n", cfg.rule.label(), cfg.rule.z, cfg.rule.l0);
  os << fmt::format("model: {}\n", to_string(cfg.model()));
  os << fmt::format("fingerprint: {}\n", fingerprint(cfg.document));
  os << fmt::format("states ({}):", space->size());
  for (const auto& s : space->states()) os << ' ' << to_string(s);
  os << '\n';
  os << fmt::format("classes ({}):\n", cfg.portfolio.size());
  os << "label,lambda1,lambda2,weight\n";
  for (const auto& k : cfg.portfolio.classes)
    os << fmt::format("{},{:.10g},{:.10g},{:.10g}\n", k.label, k.lambda1, k.lambda2, k.weight);
  if (matrix) {
    const double m = mean.value_or(cfg.portfolio.classes.front().lambda1);
    os << fmt::format("transition matrix at mean {}:\n", m);
    build_matrix(space, ClaimCountDistribution{m}).write_csv(os);
  }
  emit(c, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal relativities for -1/+h/pen bonus-malus systems"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);

  Common common;
  const auto add_common = [&](CLI::App* cmd, bool config_required) {
    auto* opt = cmd->add_option("--config", common.config, "JSON configuration file");
    if (config_required) opt->required();
    cmd->add_option("--format", common.format, "csv or md")->capture_default_str();
    cmd->add_option("--out", common.out, "Write output to this file");
    common.rule.add(cmd);
  };

  auto* tabulate = app.add_subcommand("tabulate", "Optimal relativities and level distribution");
  add_common(tabulate, true);
  tabulate->add_option("--nodes", common.nodes, "Quadrature nodes");

  auto* trace = app.add_subcommand("trace", "Replay a claim history");
  add_common(trace, false);
  std::string claims;
  trace->add_option("--claims", claims, "Comma-separated claim counts")->required();

  auto* simulate_cmd = app.add_subcommand("simulate", "Monte-Carlo cross-check");
  add_common(simulate_cmd, true);
  simulate_cmd->add_option("--nodes", common.nodes, "Quadrature nodes");
  SimFlags sim;
  simulate_cmd->add_option("--seed", sim.seed, "Master seed");
  simulate_cmd->add_option("--policyholders", sim.policyholders, "Policyholder count");
  simulate_cmd->add_option("--burn-in", sim.burn_in, "Burn-in years");
  simulate_cmd->add_option("--measured-years", sim.measured_years, "Measured years");
  simulate_cmd->add_option("--relativities", sim.relativities,
                           "Comma-separated relativities (default: optimal)");
  simulate_cmd->add_option("--threads", sim.threads, "Worker threads (0 = all)");

  auto* reproduce_cmd = app.add_subcommand("reproduce", "Compare against a reference table");
  std::string table_id;
  std::string data_dir = BMSLAB_DATA_DIR;
  reproduce_cmd->add_option("table", table_id, "1a,1b,1c,2a,2b,2c,7a,7b,8a,8b")->required();
  reproduce_cmd->add_option("--nodes", common.nodes, "Quadrature nodes");
  reproduce_cmd->add_option("--format", common.format, "csv or md")->capture_default_str();
  reproduce_cmd->add_option("--out", common.out, "Write output to this file");
  reproduce_cmd->add_option("--data-dir", data_dir, "Directory holding golden/")
      ->capture_default_str();

  auto* inspect = app.add_subcommand("inspect", "Validated configuration summary");
  add_common(inspect, true);
  std::optional<double> mean;
  bool matrix = false;
  inspect->add_option("--mean", mean, "Claim frequency for --matrix (default: first class)");
  inspect->add_flag("--matrix", matrix, "Print the transition matrix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  try {
    if (*tabulate) return cmd_tabulate(common);
    if (*trace) return cmd_trace(common, claims);
    if (*simulate_cmd) return cmd_simulate(common, sim);
    if (*reproduce_cmd) return cmd_reproduce(common, table_id, data_dir);
    if (*inspect) return cmd_inspect(common, mean, matrix);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kNumeric);
  }
  return 0;
}
