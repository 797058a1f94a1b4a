#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bmslab {

/// One a-priori risk class. lambda2 is ignored by the frequency-only model.
struct RiskClass {
  std::string label;
  double lambda1 = 0.0;
  double lambda2 = 1.0;
  double weight = 0.0;
};

/// Risk classes with weights normalised to sum to one.
struct Portfolio {
  std::vector<RiskClass> classes;
  /// Non-fatal notes produced while building (e.g. approximated weights).
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return classes.size(); }
  double total_weight() const;
};

/// A categorical covariate. The first level is the baseline and carries no
/// coefficient; other levels map to the coefficient "<name>=<level>".
struct CategoricalFactor {
  std::string name;
  std::vector<std::string> levels;
  /// Marginal population proportions, one per level.
  std::vector<double> proportions;
};

/// Name of the intercept coefficient.
inline constexpr const char* kIntercept = "(Intercept)";

/// Log-link coefficient sets for frequency and (optionally) severity.
struct GlmCoefficients {
  std::vector<CategoricalFactor> factors;
  std::map<std::string, double> frequency;
  std::map<std::string, double> severity;
  /// Gamma shape 1/psi2 of individual severities. Carried for completeness;
  /// relativities and HMSE do not depend on it.
  std::optional<double> severity_shape;
  /// Joint class weights keyed by class label; product of marginals if empty.
  std::map<std::string, double> joint_weights;
};

/// exp(intercept + sum of the named indicator coefficients). Throws
/// ConfigError naming any coefficient missing from `coefficients`.
double class_mean(const std::map<std::string, double>& coefficients,
                  std::span<const std::string> indicators);

/// Builds a portfolio from explicit classes: rejects an empty list, negative
/// weights and non-positive means, then renormalises the weights.
Portfolio build_portfolio(std::vector<RiskClass> classes);

/// Expands every combination of factor levels into a class. Uses
/// `joint_weights` verbatim when present; otherwise multiplies marginal
/// proportions and records a warning. Severity means default to 1 when no
/// severity coefficients are given.
Portfolio build_portfolio(const GlmCoefficients& glm);

/// "Type=School;Coverage=2" style label for one level combination.
std::string class_label(const std::vector<CategoricalFactor>& factors,
                        std::span<const std::size_t> level_index);

}  // namespace bmslab
