#include "bmslab/state_space.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

#include "bmslab/error.hpp"

namespace bmslab {

void BmsRule::validate() const {
  if (z < 1) throw ConfigError(fmt::format("rule.z must be >= 1 (got {})", z));
  if (h < 1 || h > z)
    throw ConfigError(fmt::format("rule.h must lie in [1, z={}] (got {})", z, h));
  if (pen < 0) throw ConfigError(fmt::format("rule.pen must be >= 0 (got {})", pen));
  if (l0 < 0 || l0 > z)
    throw ConfigError(fmt::format("rule.l0 must lie in [0, z={}] (got {})", z, l0));
}

std::string BmsRule::label() const { return fmt::format("-1/+{}/{}", h, pen); }

std::string to_string(const AugmentedState& s) {
  return fmt::format("({})_{}", s.level, s.counter);
}

std::size_t state_count(const BmsRule& rule) {
  rule.validate();
  return static_cast<std::size_t>(rule.h) +
         static_cast<std::size_t>(rule.z - rule.h + 1) *
             static_cast<std::size_t>(rule.pen + 1);
}

StateSpace::StateSpace(const BmsRule& rule) : rule_(rule) {
  rule_.validate();
  states_.reserve(state_count(rule_));
  level_offset_.reserve(static_cast<std::size_t>(rule_.z) + 1);
  for (int level = 0; level <= rule_.z; ++level) {
    level_offset_.push_back(states_.size());
    for (int a = 0; a < counters_at(level); ++a) states_.push_back({level, a});
  }
}

int StateSpace::counters_at(int level) const noexcept {
  return level < rule_.h ? 1 : rule_.pen + 1;
}

bool StateSpace::contains(const AugmentedState& s) const noexcept {
  return s.level >= 0 && s.level <= rule_.z && s.counter >= 0 &&
         s.counter < counters_at(s.level);
}

std::size_t StateSpace::index_of(const AugmentedState& s) const {
  if (!contains(s))
    throw std::out_of_range(fmt::format("state {} not in space for rule {} z={}",
                                        to_string(s), rule_.label(), rule_.z));
  return level_offset_[static_cast<std::size_t>(s.level)] +
         static_cast<std::size_t>(s.counter);
}

namespace {

// min(level + h*n, z) without int overflow for large n.
int raised_level(int level, int n_claims, const BmsRule& rule) {
  const long long target =
      level + static_cast<long long>(rule.h) * static_cast<long long>(n_claims);
  return target >= rule.z ? rule.z : static_cast<int>(target);
}

}  // namespace

int penalty_at(int t, int pen) { return std::min(pen, t); }

AugmentedState step_augmented(const AugmentedState& state, int n_claims,
                              const BmsRule& rule) {
  if (n_claims == 0) {
    if (state.counter == 0) return {std::max(state.level - 1, 0), 0};
    return {state.level, state.counter - 1};
  }
  const int level = raised_level(state.level, n_claims, rule);
  // Unreachable for n >= 1 (level >= h), kept so the result stays in the space.
  const int counter = level < rule.h ? 0 : rule.pen;
  return {level, counter};
}

RawHistoryState step_raw(const RawHistoryState& state, int n_claims,
                         const BmsRule& rule) {
  RawHistoryState next{state.level, 0, state.t + 1};
  if (n_claims > 0) {
    next.level = raised_level(state.level, n_claims, rule);
    next.consecutive_claim_free = 0;
    return next;
  }
  next.consecutive_claim_free = state.consecutive_claim_free + 1;
  // Years max(t - pen*_{t-1}, 1) .. t must all be claim-free.
  const int window = penalty_at(state.t, rule.pen) + 1;
  if (next.consecutive_claim_free >= window)
    next.level = std::max(state.level - 1, 0);
  return next;
}

Trajectory replay_raw(std::span<const int> claims, const BmsRule& rule) {
  rule.validate();
  Trajectory out;
  out.claims.assign(claims.begin(), claims.end());
  out.levels.reserve(claims.size() + 1);
  out.penalties.reserve(claims.size() + 1);
  out.augmented.reserve(claims.size() + 1);

  RawHistoryState raw{rule.l0, 0, 0};
  AugmentedState aug{rule.l0, 0};
  out.levels.push_back(raw.level);
  out.penalties.push_back(penalty_at(0, rule.pen));
  out.augmented.push_back(aug);

  for (std::size_t i = 0; i < claims.size(); ++i) {
    const int n = claims[i];
    if (n < 0)
      throw ConfigError(fmt::format("claim count at year {} is negative ({})", i + 1, n));
    raw = step_raw(raw, n, rule);
    aug = step_augmented(aug, n, rule);
    if (raw.level != aug.level)
      throw ConsistencyError(fmt::format(
          "raw level {} differs from augmented state {} at t={}", raw.level,
          to_string(aug), raw.t));
    out.levels.push_back(raw.level);
    out.penalties.push_back(penalty_at(raw.t, rule.pen));
    out.augmented.push_back(aug);
  }
  return out;
}

}  // namespace bmslab
