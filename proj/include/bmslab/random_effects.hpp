#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <variant>
#include <vector>

namespace bmslab {

/// Node count used when a configuration does not specify one.
inline constexpr int kDefaultNodes = 200;

/// Theta ~ Lognormal(-sigma2/2, sigma2), so E[Theta] = 1.
/// sigma2 == 0 is accepted and means Theta == 1.
struct LognormalEffect {
  double sigma2 = 0.0;

  void validate() const;
  double sigma() const;
  /// Theta as a function of a standard normal variate.
  double at(double standard_normal) const;
  /// E[Theta^k] = exp(k(k-1) sigma2 / 2).
  double moment(int k) const;
};

/// (Theta1, Theta2) with lognormal mean-one marginals joined by a Gaussian
/// copula, i.e. (ln Theta1, ln Theta2) bivariate normal with correlation rho.
struct BivariateEffect {
  double sigma1_2 = 0.0;
  double sigma2_2 = 0.0;
  double rho = 0.0;

  void validate() const;
  LognormalEffect frequency() const { return {sigma1_2}; }
  LognormalEffect severity() const { return {sigma2_2}; }
  /// E[Theta1 Theta2] = exp(rho sigma1 sigma2).
  double cross_moment() const;
};

using RandomEffect = std::variant<LognormalEffect, BivariateEffect>;

/// Probabilists' Gauss-Hermite rule, weights normalised to sum to one:
/// sum_j w_j f(x_j) ~ E[f(Z)] for Z ~ N(0, 1).
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussHermite gauss_hermite(int m);

/// Discretisation of a mean-one lognormal effect.
struct QuadratureGrid {
  /// Standard normal abscissae the nodes were mapped from.
  std::vector<double> standard_nodes;
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }
  /// sum_j w_j theta_j^k.
  double moment(int k) const;
};

/// Gauss-Hermite grid after theta = exp(sigma x - sigma^2/2). Throws
/// NumericError when m is too small for the first moment to be reproduced
/// to 1e-8. A degenerate effect (sigma2 == 0) yields the one-node grid.
QuadratureGrid grid(const LognormalEffect& effect, int m = kDefaultNodes);

/// E[Theta2 | Theta1 = theta1].
double conditional_severity_mean(const BivariateEffect& effect, double theta1);
/// E[Theta2^2 | Theta1 = theta1].
double conditional_severity_second_moment(const BivariateEffect& effect, double theta1);

/// Same two moments as functions of the standard normal x1 behind theta1.
double conditional_severity_mean_z(const BivariateEffect& effect, double x1);
double conditional_severity_second_moment_z(const BivariateEffect& effect, double x1);

/// Inner-quadrature versions of the conditional moments: integrates
/// theta2 and theta2^2 over the conditional law of the severity effect on an
/// m-node rule. Used as the tensor-product validation path.
std::pair<double, double> conditional_severity_moments_tensor(const BivariateEffect& effect,
                                                              double x1,
                                                              const GaussHermite& inner);

/// Engine for all Monte-Carlo draws.
using Rng = std::mt19937_64;

/// Independent stream `stream` derived from `master_seed`.
Rng make_stream(std::uint64_t master_seed, std::uint64_t stream);

double draw(const LognormalEffect& effect, Rng& rng);
std::pair<double, double> draw(const BivariateEffect& effect, Rng& rng);

std::vector<double> sample_effects(const LognormalEffect& effect, std::size_t count,
                                   std::uint64_t seed);
std::vector<std::pair<double, double>> sample_effects(const BivariateEffect& effect,
                                                      std::size_t count, std::uint64_t seed);

}  // namespace bmslab
