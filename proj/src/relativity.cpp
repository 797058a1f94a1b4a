#include "bmslab/relativity.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <type_traits>
#include <utility>

#include <fmt/format.h>

#include "bmslab/error.hpp"
#include "bmslab/markov.hpp"

namespace bmslab {

std::string to_string(ModelKind kind) {
  return kind == ModelKind::kFrequency ? "frequency" : "frequency_severity";
}

ModelKind model_kind(const RandomEffect& effect) {
  return std::holds_alternative<LognormalEffect>(effect) ? ModelKind::kFrequency
                                                         : ModelKind::kFrequencySeverity;
}

namespace {

/// Severity moments E[Theta2 | node] and E[Theta2^2 | node] per outer node.
struct NodeMoments {
  std::vector<double> m1;
  std::vector<double> m2;
};

NodeMoments node_moments(const RandomEffect& effect, const QuadratureGrid& grid,
                         const Numerics& numerics) {
  const std::size_t m = grid.size();
  NodeMoments out{std::vector<double>(m, 1.0), std::vector<double>(m, 1.0)};
  const auto* biv = std::get_if<BivariateEffect>(&effect);
  if (!biv) return out;
  // A degenerate frequency effect carries no information on Theta2.
  if (biv->sigma1_2 == 0.0) {
    std::fill(out.m2.begin(), out.m2.end(), biv->severity().moment(2));
    return out;
  }
  if (numerics.integration == Integration::kTensor) {
    if (numerics.inner_nodes < 2)
      throw NumericError(
          fmt::format("inner quadrature needs at least 2 nodes (got {})", numerics.inner_nodes));
    const GaussHermite inner = gauss_hermite(numerics.inner_nodes);
    for (std::size_t j = 0; j < m; ++j)
      std::tie(out.m1[j], out.m2[j]) =
          conditional_severity_moments_tensor(*biv, grid.standard_nodes[j], inner);
    return out;
  }
  for (std::size_t j = 0; j < m; ++j) {
    out.m1[j] = conditional_severity_mean_z(*biv, grid.standard_nodes[j]);
    out.m2[j] = conditional_severity_second_moment_z(*biv, grid.standard_nodes[j]);
  }
  return out;
}

struct Accumulator {
  Eigen::VectorXd prob, first, weight, second;

  explicit Accumulator(Eigen::Index n)
      : prob(Eigen::VectorXd::Zero(n)),
        first(Eigen::VectorXd::Zero(n)),
        weight(Eigen::VectorXd::Zero(n)),
        second(Eigen::VectorXd::Zero(n)) {}

  Accumulator& operator+=(const Accumulator& o) {
    prob += o.prob;
    first += o.first;
    weight += o.weight;
    second += o.second;
    return *this;
  }
};

/// Runs `solve(mean)` for every (class, node) pair, returning per-state
/// stationary vectors, and accumulates the mixing integrals. Classes are
/// split into fixed contiguous blocks and reduced in block order, so the
/// result does not depend on the thread count.
template <class Solve>
Accumulator accumulate(const Portfolio& portfolio, const QuadratureGrid& grid,
                       const NodeMoments& moments, ModelKind model, Eigen::Index n,
                       Solve&& solve) {
  const std::size_t k_count = portfolio.size();
  const std::size_t block = 4;
  const std::size_t blocks = (k_count + block - 1) / block;
  std::vector<Accumulator> partial(blocks, Accumulator(n));

  const auto run_block = [&](std::size_t b) {
    Accumulator& acc = partial[b];
    for (std::size_t k = b * block; k < std::min(k_count, (b + 1) * block); ++k) {
      const RiskClass& rc = portfolio.classes[k];
      if (rc.weight == 0.0) continue;
      const double c = model == ModelKind::kFrequency ? rc.lambda1 : rc.lambda1 * rc.lambda2;
      const double c2 = c * c;
      for (std::size_t j = 0; j < grid.size(); ++j) {
        const double theta = grid.nodes[j];
        const Eigen::VectorXd pi = solve(rc.lambda1 * theta);
        const double wp = rc.weight * grid.weights[j];
        const double wc = wp * c2;
        acc.prob += wp * pi;
        acc.weight += wc * pi;
        acc.first += (wc * theta * moments.m1[j]) * pi;
        acc.second += (wc * theta * theta * moments.m2[j]) * pi;
      }
    }
  };

  const std::size_t threads =
      std::min<std::size_t>(blocks, std::max(1u, std::thread::hardware_concurrency()));
  if (threads <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        try {
          for (std::size_t b = t; b < blocks; b += threads) run_block(b);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  Accumulator total(n);
  for (const auto& p : partial) total += p;
  return total;
}

QuadratureGrid make_grid(const RandomEffect& effect, int nodes) {
  return std::visit(
      [&](const auto& e) {
        e.validate();
        if constexpr (std::is_same_v<std::decay_t<decltype(e)>, LognormalEffect>)
          return grid(e, nodes);
        else
          return grid(e.frequency(), nodes);
      },
      effect);
}

void check_inputs(const BmsRule& rule, const Portfolio& portfolio) {
  rule.validate();
  if (portfolio.classes.empty()) throw ConfigError("portfolio has no risk classes");
}

std::vector<double> pool_levels(const StateSpace& space, const Eigen::VectorXd& v) {
  std::vector<double> out(static_cast<std::size_t>(space.rule().z) + 1, 0.0);
  for (std::size_t s = 0; s < space.size(); ++s)
    out[static_cast<std::size_t>(space[s].level)] += v(static_cast<Eigen::Index>(s));
  return out;
}

}  // namespace

MixedStationary MixingSummary::mixed() const {
  return {space, prob, pool_levels(*space, prob)};
}

MixingSummary summarize(const BmsRule& rule, const Portfolio& portfolio,
                        const RandomEffect& effect, const QuadratureGrid& grid,
                        const Numerics& numerics) {
  check_inputs(rule, portfolio);
  std::visit([](const auto& e) { e.validate(); }, effect);
  auto space = std::make_shared<const StateSpace>(rule);
  const ModelKind model = model_kind(effect);
  const NodeMoments moments = node_moments(effect, grid, numerics);
  const auto n = static_cast<Eigen::Index>(space->size());
  Accumulator acc = accumulate(portfolio, grid, moments, model, n, [&](double mean) {
    return stationary_at(space, ClaimCountDistribution{mean});
  });
  return {std::move(space), model, std::move(acc.prob), std::move(acc.first),
          std::move(acc.weight), std::move(acc.second)};
}

MixingSummary summarize(const BmsRule& rule, const Portfolio& portfolio,
                        const RandomEffect& effect, const Numerics& numerics) {
  return summarize(rule, portfolio, effect, make_grid(effect, numerics.nodes), numerics);
}

MixedStationary mixed_stationary(const BmsRule& rule, const Portfolio& portfolio,
                                 const LognormalEffect& effect, const QuadratureGrid& grid) {
  return summarize(rule, portfolio, effect, grid).mixed();
}

RelativityTable optimal_relativities(const MixingSummary& summary) {
  const StateSpace& space = *summary.space;
  RelativityTable t;
  t.rule = space.rule();
  t.model = summary.model;
  t.level_prob = pool_levels(space, summary.prob);
  const auto num = pool_levels(space, summary.first);
  const auto den = pool_levels(space, summary.weight);
  t.relativity.resize(num.size());
  for (std::size_t l = 0; l < num.size(); ++l)
    if (den[l] > 0.0) t.relativity[l] = num[l] / den[l];
  t.hmse = hmse(summary, dense_relativities(t));
  return t;
}

RelativityTable optimal_relativities_model1(const BmsRule& rule, const Portfolio& portfolio,
                                            const LognormalEffect& effect,
                                            const QuadratureGrid& grid) {
  return optimal_relativities(summarize(rule, portfolio, effect, grid));
}

RelativityTable optimal_relativities_model2(const BmsRule& rule, const Portfolio& portfolio,
                                            const BivariateEffect& effect,
                                            const QuadratureGrid& grid,
                                            const Numerics& numerics) {
  return optimal_relativities(summarize(rule, portfolio, effect, grid, numerics));
}

RelativityTable optimal_relativities(const BmsRule& rule, const Portfolio& portfolio,
                                     const RandomEffect& effect, const Numerics& numerics) {
  return optimal_relativities(summarize(rule, portfolio, effect, numerics));
}

double hmse(const MixingSummary& summary, std::span<const double> relativities) {
  const StateSpace& space = *summary.space;
  const auto levels = static_cast<std::size_t>(space.rule().z) + 1;
  if (relativities.size() != levels)
    throw ConfigError(fmt::format("relativity vector has {} entries, expected z + 1 = {}",
                                  relativities.size(), levels));
  double total = 0.0;
  for (std::size_t s = 0; s < space.size(); ++s) {
    const auto i = static_cast<Eigen::Index>(s);
    if (summary.weight(i) == 0.0) continue;
    const double zeta = relativities[static_cast<std::size_t>(space[s].level)];
    if (!std::isfinite(zeta))
      throw ConfigError(fmt::format("relativity at level {} is not finite", space[s].level));
    total += summary.second(i) - 2.0 * zeta * summary.first(i) + zeta * zeta * summary.weight(i);
  }
  return total;
}

double hmse(const BmsRule& rule, const Portfolio& portfolio, const RandomEffect& effect,
            std::span<const double> relativities, const Numerics& numerics) {
  const auto levels = static_cast<std::size_t>(rule.z) + 1;
  if (relativities.size() != levels)
    throw ConfigError(fmt::format("relativity vector has {} entries, expected z + 1 = {}",
                                  relativities.size(), levels));
  return hmse(summarize(rule, portfolio, effect, numerics), relativities);
}

std::vector<double> first_order_residuals(const MixingSummary& summary,
                                          std::span<const double> relativities) {
  const StateSpace& space = *summary.space;
  const auto num = pool_levels(space, summary.first);
  const auto den = pool_levels(space, summary.weight);
  if (relativities.size() != num.size())
    throw ConfigError(fmt::format("relativity vector has {} entries, expected z + 1 = {}",
                                  relativities.size(), num.size()));
  std::vector<double> out(num.size(), 0.0);
  for (std::size_t l = 0; l < num.size(); ++l)
    if (den[l] > 0.0) out[l] = (relativities[l] * den[l] - num[l]) / den[l];
  return out;
}

std::vector<double> dense_relativities(const RelativityTable& table, double fill) {
  std::vector<double> out;
  out.reserve(table.relativity.size());
  for (const auto& r : table.relativity) out.push_back(r.value_or(fill));
  return out;
}

Eigen::MatrixXd classical_matrix(int z, int h, double mean) {
  BmsRule{z, h, 0, 0}.validate();
  const ClaimCountDistribution dist{mean};
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(z + 1, z + 1);
  for (int l = 0; l <= z; ++l) {
    p(l, std::max(l - 1, 0)) += dist.pmf(0);
    const int cap = std::max(1, (z - l + h - 1) / h);
    for (int n = 1; n < cap; ++n) p(l, std::min(l + h * n, z)) += dist.pmf(n);
    p(l, z) += dist.tail(cap);
  }
  return p;
}

RelativityTable classical_relativities(const BmsRule& rule, const Portfolio& portfolio,
                                       const RandomEffect& effect, const QuadratureGrid& grid) {
  check_inputs(rule, portfolio);
  std::visit([](const auto& e) { e.validate(); }, effect);
  const BmsRule classical{rule.z, rule.h, 0, 0};
  const ModelKind model = model_kind(effect);
  const NodeMoments moments = node_moments(effect, grid, Numerics{});
  const Eigen::Index n = rule.z + 1;
  Accumulator acc = accumulate(portfolio, grid, moments, model, n, [&](double mean) {
    const double p0 = ClaimCountDistribution{mean}.pmf(0);
    Eigen::VectorXd pi = Eigen::VectorXd::Zero(n);
    if (p0 <= kDegenerateP0) {
      pi(n - 1) = 1.0;
      return pi;
    }
    if (p0 >= 1.0 - kDegenerateP0) {
      pi(0) = 1.0;
      return pi;
    }
    return stationary(classical_matrix(rule.z, rule.h, mean));
  });

  RelativityTable t;
  t.rule = classical;
  t.model = model;
  t.level_prob.assign(acc.prob.begin(), acc.prob.end());
  t.relativity.resize(static_cast<std::size_t>(n));
  double total = 0.0;
  for (Eigen::Index l = 0; l < n; ++l) {
    if (!(acc.weight(l) > 0.0)) continue;
    const double zeta = acc.first(l) / acc.weight(l);
    t.relativity[static_cast<std::size_t>(l)] = zeta;
    total += acc.second(l) - 2.0 * zeta * acc.first(l) + zeta * zeta * acc.weight(l);
  }
  t.hmse = total;
  return t;
}

}  // namespace bmslab
