#include "bmslab/random_effects.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "bmslab/error.hpp"

namespace bmslab {

void LognormalEffect::validate() const {
  if (!std::isfinite(sigma2) || sigma2 < 0.0)
    throw ConfigError(fmt::format("sigma2 must be finite and >= 0 (got {})", sigma2));
}

double LognormalEffect::sigma() const { return std::sqrt(sigma2); }

double LognormalEffect::at(double standard_normal) const {
  return std::exp(sigma() * standard_normal - 0.5 * sigma2);
}

double LognormalEffect::moment(int k) const {
  return std::exp(0.5 * k * (k - 1) * sigma2);
}

void BivariateEffect::validate() const {
  if (!std::isfinite(sigma1_2) || sigma1_2 < 0.0)
    throw ConfigError(fmt::format("sigma1_2 must be finite and >= 0 (got {})", sigma1_2));
  if (!std::isfinite(sigma2_2) || sigma2_2 < 0.0)
    throw ConfigError(fmt::format("sigma2_2 must be finite and >= 0 (got {})", sigma2_2));
  if (!(rho > -1.0 && rho < 1.0))
    throw ConfigError(fmt::format("rho must lie in (-1, 1) (got {})", rho));
}

double BivariateEffect::cross_moment() const {
  return std::exp(rho * std::sqrt(sigma1_2) * std::sqrt(sigma2_2));
}

namespace {

/// Orthonormal probabilists' Hermite recurrence at x:
/// p_0 = 1, p_{k+1} = (x p_k - sqrt(k) p_{k-1}) / sqrt(k + 1).
/// Returns p_m / p_{m-1} and log(sum_{k<m} p_k^2), rescaling as it goes.
struct HermiteEval {
  double ratio = 0.0;
  double log_christoffel = 0.0;
};

HermiteEval hermite_eval(int m, double x) {
  constexpr double kBig = 1e150;
  double prev = 0.0, cur = 1.0, sum = 1.0, log_scale = 0.0;
  for (int k = 0; k + 1 < m; ++k) {
    const double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) /
                        std::sqrt(static_cast<double>(k + 1));
    prev = cur;
    cur = next;
    sum += cur * cur;
    if (std::abs(cur) > kBig) {
      prev /= kBig;
      cur /= kBig;
      sum /= kBig * kBig;
      log_scale += 2.0 * std::log(kBig);
    }
  }
  const double pm = (x * cur - std::sqrt(static_cast<double>(m - 1)) * prev) /
                    std::sqrt(static_cast<double>(m));
  return {pm / cur, std::log(sum) + log_scale};
}

}  // namespace

GaussHermite gauss_hermite(int m) {
  if (m < 1) throw ConfigError(fmt::format("quadrature node count must be >= 1 (got {})", m));
  // Golub-Welsch for the nodes, Newton polish, Christoffel weights.
  const auto n = static_cast<Eigen::Index>(m);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(std::max<Eigen::Index>(n - 1, 0));
  for (Eigen::Index k = 0; k + 1 < n; ++k) sub(k) = std::sqrt(static_cast<double>(k + 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success)
    throw NumericError(fmt::format("Gauss-Hermite eigenvalue solve failed for {} nodes", m));

  GaussHermite out;
  out.nodes.resize(static_cast<std::size_t>(m));
  out.weights.resize(static_cast<std::size_t>(m));
  std::vector<double> log_w(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    double x = eig.eigenvalues()(i);
    for (int it = 0; it < 3 && m > 1; ++it) x -= hermite_eval(m, x).ratio / std::sqrt(double(m));
    out.nodes[static_cast<std::size_t>(i)] = x;
    log_w[static_cast<std::size_t>(i)] = -hermite_eval(m, x).log_christoffel;
  }
  // Symmetrise and normalise.
  for (int i = 0; i < m / 2; ++i) {
    const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(m - 1 - i);
    const double x = 0.5 * (out.nodes[b] - out.nodes[a]);
    out.nodes[a] = -x;
    out.nodes[b] = x;
    log_w[a] = log_w[b] = 0.5 * (log_w[a] + log_w[b]);
  }
  if (m % 2 == 1) out.nodes[static_cast<std::size_t>(m / 2)] = 0.0;
  const double top = *std::max_element(log_w.begin(), log_w.end());
  double total = 0.0;
  for (std::size_t i = 0; i < log_w.size(); ++i) total += out.weights[i] = std::exp(log_w[i] - top);
  for (auto& w : out.weights) w /= total;
  return out;
}

double QuadratureGrid::moment(int k) const {
  double s = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) s += weights[j] * std::pow(nodes[j], k);
  return s;
}

QuadratureGrid grid(const LognormalEffect& effect, int m) {
  effect.validate();
  QuadratureGrid g;
  if (effect.sigma2 == 0.0) {
    g.standard_nodes = {0.0};
    g.nodes = {1.0};
    g.weights = {1.0};
    return g;
  }
  if (m < 2) throw NumericError(fmt::format("quadrature needs at least 2 nodes (got {})", m));
  GaussHermite gh = gauss_hermite(m);
  g.nodes.reserve(gh.nodes.size());
  for (double x : gh.nodes) g.nodes.push_back(effect.at(x));
  g.standard_nodes = std::move(gh.nodes);
  g.weights = std::move(gh.weights);
  const double mean = g.moment(1);
  if (std::abs(mean - 1.0) > 1e-8)
    throw NumericError(fmt::format(
        "{} quadrature nodes reproduce E[Theta] = {:.12f} for sigma2 = {}; increase the node "
        "count",
        m, mean, effect.sigma2));
  return g;
}

double conditional_severity_mean_z(const BivariateEffect& effect, double x1) {
  const double s2 = std::sqrt(effect.sigma2_2);
  const double r = effect.rho;
  return std::exp(r * s2 * x1 - 0.5 * r * r * effect.sigma2_2);
}

double conditional_severity_second_moment_z(const BivariateEffect& effect, double x1) {
  const double s2 = std::sqrt(effect.sigma2_2);
  const double r = effect.rho;
  return std::exp(2.0 * r * s2 * x1 + effect.sigma2_2 - 2.0 * r * r * effect.sigma2_2);
}

namespace {

double standardise(const BivariateEffect& effect, double theta1) {
  if (!(theta1 > 0.0))
    throw ConfigError(fmt::format("theta1 must be positive (got {})", theta1));
  if (effect.sigma1_2 == 0.0) return 0.0;
  return (std::log(theta1) + 0.5 * effect.sigma1_2) / std::sqrt(effect.sigma1_2);
}

}  // namespace

double conditional_severity_mean(const BivariateEffect& effect, double theta1) {
  return conditional_severity_mean_z(effect, standardise(effect, theta1));
}

double conditional_severity_second_moment(const BivariateEffect& effect, double theta1) {
  return conditional_severity_second_moment_z(effect, standardise(effect, theta1));
}

std::pair<double, double> conditional_severity_moments_tensor(const BivariateEffect& effect,
                                                              double x1,
                                                              const GaussHermite& inner) {
  const double s2 = std::sqrt(effect.sigma2_2);
  const double r = effect.rho;
  const double c = std::sqrt(1.0 - r * r);
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t j = 0; j < inner.nodes.size(); ++j) {
    const double theta2 = std::exp(s2 * (r * x1 + c * inner.nodes[j]) - 0.5 * effect.sigma2_2);
    m1 += inner.weights[j] * theta2;
    m2 += inner.weights[j] * theta2 * theta2;
  }
  return {m1, m2};
}

Rng make_stream(std::uint64_t master_seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x424d53u};
  return Rng(seq);
}

double draw(const LognormalEffect& effect, Rng& rng) {
  std::normal_distribution<double> normal;
  return effect.at(normal(rng));
}

std::pair<double, double> draw(const BivariateEffect& effect, Rng& rng) {
  std::normal_distribution<double> normal;
  const double z1 = normal(rng);
  const double z2 = normal(rng);
  const double y2 = effect.rho * z1 + std::sqrt(1.0 - effect.rho * effect.rho) * z2;
  return {effect.frequency().at(z1), effect.severity().at(y2)};
}

std::vector<double> sample_effects(const LognormalEffect& effect, std::size_t count,
                                   std::uint64_t seed) {
  effect.validate();
  Rng rng = make_stream(seed, 0);
  std::normal_distribution<double> normal;
  std::vector<double> out(count);
  for (auto& v : out) v = effect.at(normal(rng));
  return out;
}

std::vector<std::pair<double, double>> sample_effects(const BivariateEffect& effect,
                                                      std::size_t count, std::uint64_t seed) {
  effect.validate();
  Rng rng = make_stream(seed, 0);
  std::normal_distribution<double> normal;
  const double c = std::sqrt(1.0 - effect.rho * effect.rho);
  std::vector<std::pair<double, double>> out(count);
  for (auto& v : out) {
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    v = {effect.frequency().at(z1), effect.severity().at(effect.rho * z1 + c * z2)};
  }
  return out;
}

}  // namespace bmslab
