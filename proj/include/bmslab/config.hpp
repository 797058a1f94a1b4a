#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "bmslab/portfolio.hpp"
#include "bmslab/random_effects.hpp"
#include "bmslab/relativity.hpp"
#include "bmslab/simulator.hpp"
#include "bmslab/state_space.hpp"

namespace bmslab {

struct SimulationSettings {
  std::uint64_t policyholders = 100000;
  int burn_in = 500;
  int measured_years = 1;
  std::uint64_t seed = 20240601;
  /// Cell tolerance in standard errors for simulate's PASS/FAIL column.
  double tolerance_se = 4.0;
};

/// A fully validated configuration document.
struct RunConfig {
  BmsRule rule;
  RandomEffect effect = LognormalEffect{};
  /// 1/psi2; parsed but unused by the computations.
  std::optional<double> severity_shape;
  Portfolio portfolio;
  Numerics numerics;
  SimulationSettings simulation;
  /// The effective document after overrides.
  nlohmann::json document;

  ModelKind model() const { return model_kind(effect); }
  SimConfig sim_config() const;
};

/// Parses and validates `doc`. Every error is a ConfigError naming the key.
///
/// Schema:
///   rule       {z, h, pen, l0}
///   model      {type: frequency, sigma2}
///            | {type: frequency_severity, sigma1_2, sigma2_2, rho, inv_psi2?}
///   portfolio  {classes: [{label?, lambda1 | log_lambda1, lambda2? | log_lambda2?, weight}]}
///            | {glm: {factors: [{name, levels, proportions?}], frequency: {coef},
///                     severity?: {coef}, joint_weights?: {label: w}}}
///   numerics?  {quadrature_nodes?, integration?: reduced|tensor, inner_nodes?,
///               tolerances?: {simulation_se?}}
///   simulation? {policyholders?, burn_in?, measured_years?, seed?}
RunConfig parse_config(const nlohmann::json& doc);

/// Reads a JSON document; ConfigError if unreadable or malformed.
nlohmann::json read_json(const std::filesystem::path& path);

RunConfig load_config(const std::filesystem::path& path);

/// 16 hex digits of FNV-1a over the canonical (key-sorted) dump of `doc`.
std::string fingerprint(const nlohmann::json& doc);

/// Parses "-1/+h" or "-1/+h/pen". Returns {h, pen}; pen is empty when omitted.
std::pair<int, std::optional<int>> parse_system(const std::string& text);

}  // namespace bmslab
