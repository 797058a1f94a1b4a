#include "bmslab/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "bmslab/error.hpp"

namespace bmslab {

double Portfolio::total_weight() const {
  double s = 0.0;
  for (const auto& c : classes) s += c.weight;
  return s;
}

double class_mean(const std::map<std::string, double>& coefficients,
                  std::span<const std::string> indicators) {
  const auto lookup = [&](const std::string& name) {
    const auto it = coefficients.find(name);
    if (it == coefficients.end())
      throw ConfigError(fmt::format("missing coefficient '{}'", name));
    return it->second;
  };
  double eta = lookup(kIntercept);
  for (const auto& name : indicators) eta += lookup(name);
  const double mean = std::exp(eta);
  if (!std::isfinite(mean) || !(mean > 0.0))
    throw ConfigError(fmt::format("linear predictor {} gives a non-finite mean", eta));
  return mean;
}

Portfolio build_portfolio(std::vector<RiskClass> classes) {
  if (classes.empty()) throw ConfigError("portfolio has no risk classes");
  double total = 0.0;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const auto& c = classes[k];
    if (!std::isfinite(c.weight) || c.weight < 0.0)
      throw ConfigError(fmt::format("portfolio.classes[{}].weight must be >= 0 (got {})", k,
                                    c.weight));
    if (!std::isfinite(c.lambda1) || !(c.lambda1 > 0.0))
      throw ConfigError(fmt::format("portfolio.classes[{}].lambda1 must be > 0 (got {})", k,
                                    c.lambda1));
    if (!std::isfinite(c.lambda2) || !(c.lambda2 > 0.0))
      throw ConfigError(fmt::format("portfolio.classes[{}].lambda2 must be > 0 (got {})", k,
                                    c.lambda2));
    total += c.weight;
  }
  if (!(total > 0.0)) throw ConfigError("portfolio weights sum to zero");
  Portfolio p;
  p.classes = std::move(classes);
  for (auto& c : p.classes) c.weight /= total;
  return p;
}

std::string class_label(const std::vector<CategoricalFactor>& factors,
                        std::span<const std::size_t> level_index) {
  std::string out;
  for (std::size_t f = 0; f < factors.size(); ++f) {
    if (f) out += ';';
    out += factors[f].name + "=" + factors[f].levels[level_index[f]];
  }
  return out;
}

Portfolio build_portfolio(const GlmCoefficients& glm) {
  if (glm.factors.empty()) throw ConfigError("portfolio.glm.factors is empty");
  for (const auto& f : glm.factors) {
    if (f.levels.empty())
      throw ConfigError(fmt::format("portfolio.glm factor '{}' has no levels", f.name));
    if (glm.joint_weights.empty()) {
      if (f.proportions.size() != f.levels.size())
        throw ConfigError(fmt::format(
            "portfolio.glm factor '{}' needs one proportion per level ({} vs {})", f.name,
            f.proportions.size(), f.levels.size()));
      const double sum = std::accumulate(f.proportions.begin(), f.proportions.end(), 0.0);
      if (std::abs(sum - 1.0) > 0.01)
        throw ConfigError(fmt::format(
            "portfolio.glm factor '{}' proportions sum to {} (expected ~1)", f.name, sum));
    }
  }

  std::vector<RiskClass> classes;
  std::vector<std::size_t> idx(glm.factors.size(), 0);
  for (;;) {
    RiskClass c;
    c.label = class_label(glm.factors, idx);
    std::vector<std::string> indicators;
    double weight = 1.0;
    for (std::size_t f = 0; f < glm.factors.size(); ++f) {
      const auto& factor = glm.factors[f];
      if (idx[f] > 0) indicators.push_back(factor.name + "=" + factor.levels[idx[f]]);
      if (glm.joint_weights.empty()) weight *= factor.proportions[idx[f]];
    }
    if (!glm.joint_weights.empty()) {
      const auto it = glm.joint_weights.find(c.label);
      weight = it == glm.joint_weights.end() ? 0.0 : it->second;
    }
    c.weight = weight;
    c.lambda1 = class_mean(glm.frequency, indicators);
    c.lambda2 = glm.severity.empty() ? 1.0 : class_mean(glm.severity, indicators);
    classes.push_back(std::move(c));

    std::size_t f = 0;
    while (f < idx.size() && ++idx[f] == glm.factors[f].levels.size()) idx[f++] = 0;
    if (f == idx.size()) break;
  }

  if (!glm.joint_weights.empty()) {
    for (const auto& [label, w] : glm.joint_weights) {
      const bool known = std::any_of(classes.begin(), classes.end(),
                                     [&](const RiskClass& c) { return c.label == label; });
      if (!known)
        throw ConfigError(fmt::format("portfolio.glm.joint_weights has unknown class '{}'", label));
    }
  }

  Portfolio p = build_portfolio(std::move(classes));
  if (glm.joint_weights.empty())
    p.warnings.push_back(
        "joint class weights approximated by the product of marginal proportions");
  return p;
}

}  // namespace bmslab
