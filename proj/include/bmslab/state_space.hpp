#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bmslab {

/// A -1/+h/pen transition system over levels 0..z.
///
/// Each claim moves the policyholder up `h` levels (capped at `z`). A level
/// decrease requires 1 + pen consecutive claim-free years, except during the
/// first `pen` years of a new contract where the requirement ramps up from 1.
struct BmsRule {
  int z = 0;
  int h = 1;
  int pen = 0;
  int l0 = 0;

  /// Throws ConfigError unless 1 <= h <= z, pen >= 0 and 0 <= l0 <= z.
  void validate() const;

  /// "-1/+h/pen" label.
  std::string label() const;

  friend bool operator==(const BmsRule&, const BmsRule&) = default;
};

/// BM level plus the number of additional claim-free years still required
/// before the next reward. Levels below h never carry a counter.
struct AugmentedState {
  int level = 0;
  int counter = 0;

  friend auto operator<=>(const AugmentedState&, const AugmentedState&) = default;
};

/// "(level)_counter", e.g. "(12)_2".
std::string to_string(const AugmentedState& s);

/// The augmented state space in ascending (level, counter) order.
class StateSpace {
 public:
  explicit StateSpace(const BmsRule& rule);

  const BmsRule& rule() const noexcept { return rule_; }
  std::size_t size() const noexcept { return states_.size(); }
  std::span<const AugmentedState> states() const noexcept { return states_; }
  const AugmentedState& operator[](std::size_t i) const { return states_[i]; }

  bool contains(const AugmentedState& s) const noexcept;

  /// Position of `s` in the ordering; throws std::out_of_range if absent.
  std::size_t index_of(const AugmentedState& s) const;

  /// Number of counter values at `level` (1 below h, pen + 1 otherwise).
  int counters_at(int level) const noexcept;

 private:
  BmsRule rule_;
  std::vector<AugmentedState> states_;
  std::vector<std::size_t> level_offset_;
};

/// h + (z - h + 1)(pen + 1).
std::size_t state_count(const BmsRule& rule);

/// Penalty in force at time t: min(pen, t).
int penalty_at(int t, int pen);

/// One Markovian transition of the augmented chain after `n_claims` claims.
AugmentedState step_augmented(const AugmentedState& state, int n_claims,
                              const BmsRule& rule);

/// Sufficient statistics for evaluating the raw (history-dependent) rule.
struct RawHistoryState {
  int level = 0;
  int consecutive_claim_free = 0;
  int t = 0;
};

/// Advances the raw rule by one year given the claim count of year t + 1.
RawHistoryState step_raw(const RawHistoryState& state, int n_claims,
                         const BmsRule& rule);

/// A replayed claim history. Entry t of each vector is the value at time t;
/// `claims[t]` is the number of claims reported during year t + 1.
struct Trajectory {
  std::vector<int> claims;
  std::vector<int> levels;
  std::vector<int> penalties;
  std::vector<AugmentedState> augmented;
};

/// Replays a claim history under both the raw and the augmented rule
/// starting from level l0. Throws ConsistencyError if the level paths differ.
Trajectory replay_raw(std::span<const int> claims, const BmsRule& rule);

}  // namespace bmslab
