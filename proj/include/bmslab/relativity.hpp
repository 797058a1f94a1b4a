#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bmslab/portfolio.hpp"
#include "bmslab/random_effects.hpp"
#include "bmslab/state_space.hpp"

namespace bmslab {

enum class ModelKind { kFrequency, kFrequencySeverity };

std::string to_string(ModelKind kind);

ModelKind model_kind(const RandomEffect& effect);

/// How the severity effect is integrated out in the frequency-severity model.
enum class Integration {
  /// Closed-form conditional moments of Theta2 given Theta1.
  kReduced,
  /// Tensor-product quadrature over (Theta1, Theta2).
  kTensor,
};

struct Numerics {
  int nodes = kDefaultNodes;
  Integration integration = Integration::kReduced;
  /// Inner rule size for Integration::kTensor.
  int inner_nodes = 64;
};

/// Stationary law of the augmented level mixed over risk classes and Theta.
struct MixedStationary {
  std::shared_ptr<const StateSpace> space;
  /// P(L* = (l)_a), in state-space order.
  Eigen::VectorXd state_prob;
  /// P(L = l) = sum_a P(L* = (l)_a), l = 0..z.
  std::vector<double> level_prob;
};

/// Per-state mixing integrals, accumulated in one pass over all (class, node)
/// stationary solves. With c_k = lambda1_k lambda2_k (lambda2_k = 1 and
/// Theta2 = 1 for the frequency model):
///   prob(s)   = sum_k w_k E[pi_s]
///   first(s)  = sum_k w_k c_k^2 E[Theta1 Theta2 pi_s]
///   weight(s) = sum_k w_k c_k^2 E[pi_s]
///   second(s) = sum_k w_k c_k^2 E[(Theta1 Theta2)^2 pi_s]
/// where pi_s is evaluated at expected frequency lambda1_k Theta1.
struct MixingSummary {
  std::shared_ptr<const StateSpace> space;
  ModelKind model = ModelKind::kFrequency;
  Eigen::VectorXd prob;
  Eigen::VectorXd first;
  Eigen::VectorXd weight;
  Eigen::VectorXd second;

  MixedStationary mixed() const;
};

MixingSummary summarize(const BmsRule& rule, const Portfolio& portfolio,
                        const RandomEffect& effect, const Numerics& numerics = {});

/// Same as above on a caller-supplied grid for Theta (Theta1 for the
/// frequency-severity model).
MixingSummary summarize(const BmsRule& rule, const Portfolio& portfolio,
                        const RandomEffect& effect, const QuadratureGrid& grid,
                        const Numerics& numerics = {});

MixedStationary mixed_stationary(const BmsRule& rule, const Portfolio& portfolio,
                                 const LognormalEffect& effect, const QuadratureGrid& grid);

/// Optimal relativities with the level probabilities and the HMSE they attain.
struct RelativityTable {
  BmsRule rule;
  ModelKind model = ModelKind::kFrequency;
  /// zeta(l), l = 0..z; empty where the level is unreachable.
  std::vector<std::optional<double>> relativity;
  std::vector<double> level_prob;
  double hmse = 0.0;
};

/// Pools the per-state integrals of each level into its optimal relativity.
RelativityTable optimal_relativities(const MixingSummary& summary);

RelativityTable optimal_relativities_model1(const BmsRule& rule, const Portfolio& portfolio,
                                            const LognormalEffect& effect,
                                            const QuadratureGrid& grid);

RelativityTable optimal_relativities_model2(const BmsRule& rule, const Portfolio& portfolio,
                                            const BivariateEffect& effect,
                                            const QuadratureGrid& grid,
                                            const Numerics& numerics = {});

/// Dispatches on the effect type and builds the grid from `numerics`.
RelativityTable optimal_relativities(const BmsRule& rule, const Portfolio& portfolio,
                                     const RandomEffect& effect, const Numerics& numerics = {});

/// HMSE of an arbitrary relativity vector (length z + 1). Unreachable levels
/// carry no probability and contribute nothing whatever their relativity.
double hmse(const MixingSummary& summary, std::span<const double> relativities);

double hmse(const BmsRule& rule, const Portfolio& portfolio, const RandomEffect& effect,
            std::span<const double> relativities, const Numerics& numerics = {});

/// Derivative of the HMSE with respect to zeta(l), divided by the pooled
/// weight of level l; zero at the optimum. Unreachable levels report 0.
std::vector<double> first_order_residuals(const MixingSummary& summary,
                                          std::span<const double> relativities);

/// Replaces undefined relativities by `fill` (they carry no weight).
std::vector<double> dense_relativities(const RelativityTable& table, double fill = 1.0);

/// Classical -1/+h optimal relativities computed on the unaugmented
/// (z + 1)-state chain; defined for any pen through `rule.z` and `rule.h`
/// only. Agrees with the augmented result when pen = 0.
RelativityTable classical_relativities(const BmsRule& rule, const Portfolio& portfolio,
                                       const RandomEffect& effect, const QuadratureGrid& grid);

/// (z + 1)-state -1/+h transition matrix.
Eigen::MatrixXd classical_matrix(int z, int h, double mean);

}  // namespace bmslab
