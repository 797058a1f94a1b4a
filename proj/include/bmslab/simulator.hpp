#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bmslab/portfolio.hpp"
#include "bmslab/random_effects.hpp"
#include "bmslab/state_space.hpp"

namespace bmslab {

struct SimConfig {
  BmsRule rule;
  Portfolio portfolio;
  RandomEffect effect = LognormalEffect{};
  std::uint64_t policyholders = 100000;
  int burn_in = 500;
  int measured_years = 1;
  std::uint64_t seed = 20240601;
  /// Worker threads; 0 picks the hardware concurrency. Results do not
  /// depend on this value.
  unsigned threads = 0;

  /// Throws ConfigError on an invalid rule, portfolio, effect or size.
  void validate() const;
};

/// One post-burn-in observation of one policyholder.
struct SimObservation {
  std::uint32_t risk_class = 0;
  double theta1 = 1.0;
  double theta2 = 1.0;
  int level = 0;
};

struct SimReport {
  std::uint64_t observations = 0;
  std::vector<std::uint64_t> level_counts;
  /// Counts per augmented state, in StateSpace order.
  std::vector<std::uint64_t> state_counts;
  std::vector<double> level_prob;
  std::vector<double> state_prob;
  /// Binomial standard error of each level_prob cell.
  std::vector<double> level_se;
  /// Observations grouped by policyholder, `measured_years` each.
  std::vector<SimObservation> samples;
  int measured_years = 1;
};

/// Simulates every policyholder under the raw history-dependent rule and,
/// in lockstep, under the augmented Markov rule. Throws ConsistencyError the
/// first time the two level paths differ.
SimReport simulate(const SimConfig& config);

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

/// Estimate of E[(c Theta1 Theta2 - c zeta(L))^2] from the measured
/// observations, c = lambda1 (frequency model) or lambda1 lambda2. Uses the
/// regression (control-variate) estimator on c^2 T^2 and c^2 T, T = Theta1
/// Theta2, whose population means are known; consistent with O(1/n) bias.
/// The standard error treats each policyholder's measured years as one
/// cluster.
Estimate empirical_hmse(const SimReport& report, const Portfolio& portfolio,
                        const RandomEffect& effect, std::span<const double> relativities);

Estimate empirical_hmse(const SimConfig& config, std::span<const double> relativities);

/// Per-level comparison of empirical and analytic probabilities.
struct CellCheck {
  int level = 0;
  double empirical = 0.0;
  double analytic = 0.0;
  double se = 0.0;
  bool pass = false;
};

/// Passes a cell when |p_hat - p| <= k se with se = sqrt(max(p(1-p), 1/n) / n)
/// evaluated at the analytic p; the floor keeps near-empty cells testable.
std::vector<CellCheck> compare_levels(const SimReport& report, std::span<const double> analytic,
                                      double k = 4.0);

}  // namespace bmslab
