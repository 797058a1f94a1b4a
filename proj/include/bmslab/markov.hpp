#pragma once

#include <cstddef>
#include <memory>
#include <ostream>

#include <Eigen/Dense>

#include "bmslab/state_space.hpp"

namespace bmslab {

enum class CountFamily { kPoisson };

/// Per-period claim count law given the policyholder's expected frequency.
struct ClaimCountDistribution {
  double mean = 0.0;
  CountFamily family = CountFamily::kPoisson;
  /// Housed for other count families; Poisson ignores it.
  double dispersion = 1.0;

  double pmf(int n) const;
  /// P(N >= k), computed without cancellation for small means.
  double tail(int k) const;
};

/// Bounds on p_0 outside of which the stationary solve is rejected.
inline constexpr double kDegenerateP0 = 1e-300;

/// Row-stochastic matrix over an ordered augmented state space.
class TransitionMatrix {
 public:
  TransitionMatrix(std::shared_ptr<const StateSpace> space, Eigen::MatrixXd p,
                   double p0);

  const StateSpace& space() const noexcept { return *space_; }
  std::shared_ptr<const StateSpace> space_ptr() const noexcept { return space_; }
  const Eigen::MatrixXd& matrix() const noexcept { return p_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(p_.rows()); }
  double operator()(std::size_t from, std::size_t to) const {
    return p_(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to));
  }
  /// Probability of a claim-free year used to build the matrix.
  double p0() const noexcept { return p0_; }

  /// Row-major CSV: header "state,<labels...>", then one row per state.
  void write_csv(std::ostream& os) const;

 private:
  std::shared_ptr<const StateSpace> space_;
  Eigen::MatrixXd p_;
  double p0_;
};

TransitionMatrix build_matrix(std::shared_ptr<const StateSpace> space,
                              const ClaimCountDistribution& dist);
TransitionMatrix build_matrix(const BmsRule& rule, const ClaimCountDistribution& dist);

/// Solves pi = pi P, pi e = 1 by LU with one balance equation replaced by
/// the normalisation row. Throws NumericError if the system is singular or
/// the result is not a probability vector.
Eigen::VectorXd stationary(const Eigen::MatrixXd& p);

/// As above; additionally rejects p_0 outside (kDegenerateP0, 1 - kDegenerateP0).
Eigen::VectorXd stationary(const TransitionMatrix& p);

/// Stationary law of the augmented chain at expected frequency `dist.mean`.
///
/// When p_0 underflows (or rounds to 1) the chain has a single absorbing
/// state, (z)_pen (respectively (0)_0), and the point mass there is returned
/// instead of attempting the ill-conditioned solve.
Eigen::VectorXd stationary_at(std::shared_ptr<const StateSpace> space,
                              const ClaimCountDistribution& dist);

/// max_s |(pi - pi P)_s|.
double fixed_point_residual(const Eigen::MatrixXd& p, const Eigen::VectorXd& pi);

struct PowerIterationResult {
  Eigen::VectorXd pi;
  long iterations = 0;
  double residual = 0.0;
};

/// pi_{k+1} = pi_k P from the uniform vector until the fixed-point residual
/// drops below `tol` or `max_iter` iterations have run.
PowerIterationResult power_iteration(const Eigen::MatrixXd& p, long max_iter,
                                     double tol);

}  // namespace bmslab
