#include "bmslab/markov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "bmslab/error.hpp"

namespace bmslab {

namespace {

void check_mean(const ClaimCountDistribution& dist) {
  if (!std::isfinite(dist.mean) || dist.mean < 0.0)
    throw NumericError(fmt::format("claim frequency mean must be finite and >= 0 (got {})",
                                   dist.mean));
}

}  // namespace

double ClaimCountDistribution::pmf(int n) const {
  check_mean(*this);
  if (n < 0) return 0.0;
  if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
  if (n == 0) return std::exp(-mean);
  return std::exp(-mean + n * std::log(mean) - std::lgamma(n + 1.0));
}

double ClaimCountDistribution::tail(int k) const {
  check_mean(*this);
  if (k <= 0) return 1.0;
  if (mean == 0.0) return 0.0;
  if (k == 1) return -std::expm1(-mean);
  if (mean >= k) {
    double head = 0.0;
    for (int n = 0; n < k; ++n) head += pmf(n);
    return std::max(0.0, 1.0 - head);
  }
  // Terms decay at least geometrically (ratio mean / n < 1) past n = k.
  double term = pmf(k);
  double sum = 0.0;
  for (int n = k; term > 0.0; ++n) {
    sum += term;
    if (term <= sum * std::numeric_limits<double>::epsilon() * 0.25) break;
    term *= mean / (n + 1);
  }
  return sum;
}

TransitionMatrix::TransitionMatrix(std::shared_ptr<const StateSpace> space,
                                   Eigen::MatrixXd p, double p0)
    : space_(std::move(space)), p_(std::move(p)), p0_(p0) {}

void TransitionMatrix::write_csv(std::ostream& os) const {
  os << "state";
  for (const auto& s : space_->states()) os << ',' << to_string(s);
  os << '\n';
  for (Eigen::Index i = 0; i < p_.rows(); ++i) {
    os << to_string((*space_)[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < p_.cols(); ++j) os << fmt::format(",{:.17g}", p_(i, j));
    os << '\n';
  }
}

TransitionMatrix build_matrix(std::shared_ptr<const StateSpace> space,
                              const ClaimCountDistribution& dist) {
  const BmsRule& rule = space->rule();
  const auto n = static_cast<Eigen::Index>(space->size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);

  // pmf values are shared by every row; at most z distinct claim counts matter.
  std::vector<double> pmf(static_cast<std::size_t>(rule.z) + 1);
  for (int k = 0; k <= rule.z; ++k) pmf[static_cast<std::size_t>(k)] = dist.pmf(k);
  for (double v : pmf)
    if (!std::isfinite(v))
      throw NumericError(fmt::format("non-finite claim probability at mean {}", dist.mean));

  for (Eigen::Index i = 0; i < n; ++i) {
    const AugmentedState& from = (*space)[static_cast<std::size_t>(i)];
    const auto col = [&](const AugmentedState& to) {
      return static_cast<Eigen::Index>(space->index_of(to));
    };
    p(i, col(step_augmented(from, 0, rule))) += pmf[0];
    // Smallest claim count reaching the top level; everything from there on
    // lands in (z)_pen and is pooled as one tail mass.
    const int cap = std::max(1, (rule.z - from.level + rule.h - 1) / rule.h);
    for (int k = 1; k < cap; ++k)
      p(i, col(step_augmented(from, k, rule))) += pmf[static_cast<std::size_t>(k)];
    p(i, col(step_augmented(from, cap, rule))) += dist.tail(cap);
  }
  return TransitionMatrix(std::move(space), std::move(p), pmf[0]);
}

TransitionMatrix build_matrix(const BmsRule& rule, const ClaimCountDistribution& dist) {
  return build_matrix(std::make_shared<const StateSpace>(rule), dist);
}

Eigen::VectorXd stationary(const Eigen::MatrixXd& p) {
  const Eigen::Index n = p.rows();
  if (n == 0 || p.cols() != n)
    throw NumericError("stationary solve needs a non-empty square matrix");

  Eigen::MatrixXd a = p.transpose() - Eigen::MatrixXd::Identity(n, n);
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible())
    throw NumericError(fmt::format(
        "stationary system is singular (rank {} of {}); chain is not irreducible", lu.rank(), n));
  Eigen::VectorXd pi = lu.solve(b);

  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(pi(i)))
      throw NumericError("stationary solve produced a non-finite probability");
    if (pi(i) < 0.0) {
      if (pi(i) < -1e-12)
        throw NumericError(fmt::format(
            "stationary solve produced a negative probability {:.3e}; ill-conditioned chain",
            pi(i)));
      pi(i) = 0.0;
    }
  }
  pi /= pi.sum();
  return pi;
}

Eigen::VectorXd stationary(const TransitionMatrix& p) {
  if (!(p.p0() > kDegenerateP0 && p.p0() < 1.0 - kDegenerateP0))
    throw NumericError(fmt::format(
        "degenerate chain: p_0 = {:.17g} is outside (0, 1); stationary law is not "
        "identifiable from an irreducible chain",
        p.p0()));
  return stationary(p.matrix());
}

Eigen::VectorXd stationary_at(std::shared_ptr<const StateSpace> space,
                              const ClaimCountDistribution& dist) {
  const double p0 = dist.pmf(0);
  const auto n = static_cast<Eigen::Index>(space->size());
  if (p0 <= kDegenerateP0) {
    Eigen::VectorXd pi = Eigen::VectorXd::Zero(n);
    pi(static_cast<Eigen::Index>(space->index_of({space->rule().z, space->rule().pen}))) = 1.0;
    return pi;
  }
  if (p0 >= 1.0 - kDegenerateP0) {
    Eigen::VectorXd pi = Eigen::VectorXd::Zero(n);
    pi(0) = 1.0;
    return pi;
  }
  return stationary(build_matrix(std::move(space), dist));
}

double fixed_point_residual(const Eigen::MatrixXd& p, const Eigen::VectorXd& pi) {
  const Eigen::VectorXd next = p.transpose() * pi;
  return (next - pi).cwiseAbs().maxCoeff();
}

PowerIterationResult power_iteration(const Eigen::MatrixXd& p, long max_iter, double tol) {
  const Eigen::Index n = p.rows();
  PowerIterationResult out;
  out.pi = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd pt = p.transpose();
  Eigen::VectorXd next(n);
  out.residual = std::numeric_limits<double>::infinity();
  while (out.iterations < max_iter) {
    next.noalias() = pt * out.pi;
    out.residual = (next - out.pi).cwiseAbs().maxCoeff();
    out.pi.swap(next);
    ++out.iterations;
    if (out.residual <= tol) break;
  }
  return out;
}

}  // namespace bmslab
