#include "bmslab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <thread>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "bmslab/error.hpp"

namespace bmslab {

void SimConfig::validate() const {
  rule.validate();
  if (portfolio.classes.empty()) throw ConfigError("portfolio has no risk classes");
  std::visit([](const auto& e) { e.validate(); }, effect);
  if (policyholders == 0) throw ConfigError("simulation.policyholders must be >= 1");
  if (policyholders > std::numeric_limits<std::uint32_t>::max())
    throw ConfigError("simulation.policyholders is too large");
  if (burn_in < 1)
    throw ConfigError(fmt::format("simulation.burn_in must be >= 1 (got {})", burn_in));
  if (measured_years < 1)
    throw ConfigError(
        fmt::format("simulation.measured_years must be >= 1 (got {})", measured_years));
}

namespace {

constexpr std::uint64_t kChunk = 2048;

struct ChunkResult {
  std::vector<std::uint64_t> state_counts;
  std::vector<SimObservation> samples;
};

std::uint32_t draw_class(const std::vector<double>& cumulative, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  const auto k = static_cast<std::size_t>(it - cumulative.begin());
  return static_cast<std::uint32_t>(std::min(k, cumulative.size() - 1));
}

void run_chunk(const SimConfig& cfg, const StateSpace& space,
               const std::vector<double>& cumulative, std::uint64_t begin, std::uint64_t end,
               ChunkResult& out) {
  const BmsRule& rule = cfg.rule;
  out.state_counts.assign(space.size(), 0);
  out.samples.reserve((end - begin) * static_cast<std::uint64_t>(cfg.measured_years));
  for (std::uint64_t i = begin; i < end; ++i) {
    Rng rng = make_stream(cfg.seed, i);
    SimObservation obs;
    obs.risk_class = draw_class(cumulative, rng);
    if (const auto* e = std::get_if<LognormalEffect>(&cfg.effect))
      obs.theta1 = draw(*e, rng);
    else
      std::tie(obs.theta1, obs.theta2) = draw(std::get<BivariateEffect>(cfg.effect), rng);
    std::poisson_distribution<int> claims(cfg.portfolio.classes[obs.risk_class].lambda1 *
                                          obs.theta1);

    RawHistoryState raw{rule.l0, 0, 0};
    AugmentedState aug{rule.l0, 0};
    const int years = cfg.burn_in + cfg.measured_years;
    for (int y = 0; y < years; ++y) {
      const int n = claims(rng);
      raw = step_raw(raw, n, rule);
      aug = step_augmented(aug, n, rule);
      if (raw.level != aug.level)
        throw ConsistencyError(fmt::format(
            "policyholder {} year {}: raw rule gives level {} but augmented rule gives {}", i,
            y + 1, raw.level, to_string(aug)));
      if (y >= cfg.burn_in) {
        ++out.state_counts[space.index_of(aug)];
        obs.level = aug.level;
        out.samples.push_back(obs);
      }
    }
  }
}

}  // namespace

SimReport simulate(const SimConfig& config) {
  config.validate();
  const StateSpace space(config.rule);

  std::vector<double> cumulative;
  double acc = 0.0;
  const double total = config.portfolio.total_weight();
  for (const auto& c : config.portfolio.classes) cumulative.push_back(acc += c.weight / total);

  const std::uint64_t chunks = (config.policyholders + kChunk - 1) / kChunk;
  std::vector<ChunkResult> results(chunks);
  const auto run = [&](std::uint64_t c) {
    run_chunk(config, space, cumulative, c * kChunk,
              std::min(config.policyholders, (c + 1) * kChunk), results[c]);
  };

  unsigned threads = config.threads ? config.threads : std::thread::hardware_concurrency();
  threads = static_cast<unsigned>(std::min<std::uint64_t>(std::max(1u, threads), chunks));
  if (threads == 1) {
    for (std::uint64_t c = 0; c < chunks; ++c) run(c);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        try {
          for (std::uint64_t c = t; c < chunks; c += threads) run(c);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  SimReport r;
  r.measured_years = config.measured_years;
  r.state_counts.assign(space.size(), 0);
  r.level_counts.assign(static_cast<std::size_t>(config.rule.z) + 1, 0);
  r.samples.reserve(config.policyholders * static_cast<std::uint64_t>(config.measured_years));
  for (auto& c : results) {
    for (std::size_t s = 0; s < space.size(); ++s) r.state_counts[s] += c.state_counts[s];
    r.samples.insert(r.samples.end(), c.samples.begin(), c.samples.end());
  }
  for (std::size_t s = 0; s < space.size(); ++s) {
    r.level_counts[static_cast<std::size_t>(space[s].level)] += r.state_counts[s];
    r.observations += r.state_counts[s];
  }
  const double n = static_cast<double>(r.observations);
  for (auto c : r.state_counts) r.state_prob.push_back(static_cast<double>(c) / n);
  for (auto c : r.level_counts) {
    const double p = static_cast<double>(c) / n;
    r.level_prob.push_back(p);
    r.level_se.push_back(std::sqrt(p * (1.0 - p) / n));
  }
  return r;
}

Estimate empirical_hmse(const SimReport& report, const Portfolio& portfolio,
                        const RandomEffect& effect, std::span<const double> relativities) {
  if (relativities.size() != report.level_counts.size())
    throw ConfigError(fmt::format("relativity vector has {} entries, expected z + 1 = {}",
                                  relativities.size(), report.level_counts.size()));
  if (report.samples.empty()) throw ConfigError("simulation report has no observations");
  const bool freq = std::holds_alternative<LognormalEffect>(effect);
  const auto years = static_cast<std::size_t>(std::max(1, report.measured_years));
  const std::size_t clusters = report.samples.size() / years;

  // Regression estimator with two controls whose means are known exactly:
  // X1 = c^2 T^2 and X2 = c^2 T, T = theta1 theta2. Both move with the heavy
  // right tail of T, which otherwise dominates the sample variance.
  double t1 = 1.0, t2 = 0.0;
  if (freq) {
    t2 = std::get<LognormalEffect>(effect).moment(2);
  } else {
    const auto& b = std::get<BivariateEffect>(effect);
    t1 = b.cross_moment();
    t2 = std::exp(b.sigma1_2 + b.sigma2_2 + 4.0 * b.rho * std::sqrt(b.sigma1_2 * b.sigma2_2));
  }
  Eigen::Vector2d known = Eigen::Vector2d::Zero();
  const double total = portfolio.total_weight();
  for (const auto& rc : portfolio.classes) {
    const double c = freq ? rc.lambda1 : rc.lambda1 * rc.lambda2;
    known += rc.weight / total * c * c * Eigen::Vector2d(t2, t1);
  }

  Eigen::VectorXd y(static_cast<Eigen::Index>(clusters));
  Eigen::MatrixXd x(static_cast<Eigen::Index>(clusters), 2);
  for (std::size_t i = 0; i < clusters; ++i) {
    double yi = 0.0, x1 = 0.0, x2 = 0.0;
    for (std::size_t k = 0; k < years; ++k) {
      const SimObservation& o = report.samples[i * years + k];
      const RiskClass& rc = portfolio.classes.at(o.risk_class);
      const double c = freq ? rc.lambda1 : rc.lambda1 * rc.lambda2;
      const double t = o.theta1 * o.theta2;
      const double d = c * t - c * relativities[static_cast<std::size_t>(o.level)];
      yi += d * d;
      x1 += c * c * t * t;
      x2 += c * c * t;
    }
    const auto r = static_cast<Eigen::Index>(i);
    y(r) = yi / static_cast<double>(years);
    x(r, 0) = x1 / static_cast<double>(years);
    x(r, 1) = x2 / static_cast<double>(years);
  }
  const double n = static_cast<double>(clusters);
  const double y_bar = y.mean();
  const Eigen::RowVector2d x_bar = x.colwise().mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_bar;
  const Eigen::VectorXd yc = y.array() - y_bar;
  Eigen::Vector2d beta = Eigen::Vector2d::Zero();
  if (clusters > 3) beta = (xc.transpose() * xc).ldlt().solve(xc.transpose() * yc);
  if (!beta.allFinite()) beta.setZero();
  const double value = y_bar - (x_bar.transpose() - known).dot(beta);
  const Eigen::VectorXd resid = yc - xc * beta;
  const double dof = std::max(1.0, n - 3.0);
  return {value, std::sqrt(resid.squaredNorm() / dof / n)};
}

Estimate empirical_hmse(const SimConfig& config, std::span<const double> relativities) {
  return empirical_hmse(simulate(config), config.portfolio, config.effect, relativities);
}

std::vector<CellCheck> compare_levels(const SimReport& report, std::span<const double> analytic,
                                      double k) {
  if (analytic.size() != report.level_prob.size())
    throw ConfigError(fmt::format("analytic distribution has {} levels, expected {}",
                                  analytic.size(), report.level_prob.size()));
  const double n = static_cast<double>(report.observations);
  std::vector<CellCheck> out;
  for (std::size_t l = 0; l < analytic.size(); ++l) {
    const double p = analytic[l];
    const double se = std::sqrt(std::max(p * (1.0 - p), 1.0 / n) / n);
    out.push_back({static_cast<int>(l), report.level_prob[l], p, se,
                   std::abs(report.level_prob[l] - p) <= k * se});
  }
  return out;
}

}  // namespace bmslab
