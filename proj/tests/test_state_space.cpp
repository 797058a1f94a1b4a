#include <random>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "bmslab/error.hpp"
#include "bmslab/state_space.hpp"

using namespace bmslab;

namespace {

// Independent statement of the history-dependent rule: decrease iff this
// year is claim-free and so were the previous pen*_{t-1} years.
std::vector<int> reference_levels(const std::vector<int>& claims, const BmsRule& r) {
  std::vector<int> out{r.l0};
  int level = r.l0;
  for (std::size_t t = 1; t <= claims.size(); ++t) {
    const int n = claims[t - 1];
    if (n > 0) {
      level = std::min(level + r.h * n, r.z);
    } else {
      const int need = std::min(r.pen, static_cast<int>(t) - 1) + 1;
      bool free = true;
      for (int k = 0; k < need; ++k) free = free && claims[t - 1 - static_cast<std::size_t>(k)] == 0;
      if (free) level = std::max(level - 1, 0);
    }
    out.push_back(level);
  }
  return out;
}

}  // namespace

TEST(StateSpace, JumpTwoPenOneHasFourteenStates) {
  const StateSpace s(BmsRule{7, 2, 1, 0});
  ASSERT_EQ(s.size(), 14u);
  const std::vector<AugmentedState> expected{{0, 0}, {1, 0}, {2, 0}, {2, 1}, {3, 0},
                                             {3, 1}, {4, 0}, {4, 1}, {5, 0}, {5, 1},
                                             {6, 0}, {6, 1}, {7, 0}, {7, 1}};
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(s[i], expected[i]) << i;
}

TEST(StateSpace, ClassicalCollapse) {
  const StateSpace s(BmsRule{9, 1, 0, 0});
  ASSERT_EQ(s.size(), 10u);
  for (int l = 0; l <= 9; ++l) EXPECT_EQ(s[static_cast<std::size_t>(l)], (AugmentedState{l, 0}));
}

TEST(StateSpace, CountFormula) {
  EXPECT_EQ(state_count(BmsRule{20, 2, 2, 0}), 59u);
  for (int z = 1; z <= 12; ++z)
    for (int h = 1; h <= z; ++h)
      for (int pen = 0; pen <= 4; ++pen) {
        const BmsRule r{z, h, pen, 0};
        const StateSpace s(r);
        ASSERT_EQ(s.size(), static_cast<std::size_t>(h + (z - h + 1) * (pen + 1)));
        for (std::size_t i = 0; i < s.size(); ++i) {
          EXPECT_EQ(s.index_of(s[i]), i);
          if (s[i].level < h) EXPECT_EQ(s[i].counter, 0);
          if (i) EXPECT_LT(s[i - 1], s[i]);
        }
      }
}

TEST(StateSpace, RejectsInvalidRules) {
  EXPECT_THROW(StateSpace(BmsRule{0, 1, 0, 0}), ConfigError);
  EXPECT_THROW(StateSpace(BmsRule{5, 6, 0, 0}), ConfigError);
  EXPECT_THROW(StateSpace(BmsRule{5, 0, 0, 0}), ConfigError);
  EXPECT_THROW(StateSpace(BmsRule{5, 1, -1, 0}), ConfigError);
  EXPECT_THROW(StateSpace(BmsRule{5, 1, 0, 6}), ConfigError);
  EXPECT_THROW(StateSpace(BmsRule{5, 1, 0, -1}), ConfigError);
}

TEST(StateSpace, IndexOfUnknownStateThrows) {
  const StateSpace s(BmsRule{7, 2, 1, 0});
  EXPECT_THROW((void)s.index_of({1, 1}), std::out_of_range);
  EXPECT_THROW((void)s.index_of({8, 0}), std::out_of_range);
  EXPECT_FALSE(s.contains({3, 2}));
}

TEST(StateSpace, LabelsAndPrinting) {
  EXPECT_EQ((BmsRule{20, 2, 2, 10}.label()), "-1/+2/2");
  EXPECT_EQ(to_string(AugmentedState{12, 2}), "(12)_2");
}

TEST(PenaltyAt, RampsUpToPen) {
  EXPECT_EQ(penalty_at(0, 2), 0);
  EXPECT_EQ(penalty_at(1, 2), 1);
  EXPECT_EQ(penalty_at(5, 2), 2);
  EXPECT_EQ(penalty_at(7, 0), 0);
}

TEST(StepAugmented, ReferenceTransitions) {
  const BmsRule r{20, 2, 2, 10};
  EXPECT_EQ(step_augmented({8, 0}, 2, r), (AugmentedState{12, 2}));
  EXPECT_EQ(step_augmented({14, 2}, 0, r), (AugmentedState{14, 1}));
  EXPECT_EQ(step_augmented({0, 0}, 0, r), (AugmentedState{0, 0}));
  EXPECT_EQ(step_augmented({0, 0}, 0, BmsRule{5, 1, 0, 0}), (AugmentedState{0, 0}));
}

TEST(StepAugmented, AbsorbsAtTop) {
  const BmsRule r{9, 2, 3, 0};
  for (int n = 5; n < 40; ++n) EXPECT_EQ(step_augmented({1, 0}, n, r), (AugmentedState{9, 3}));
  EXPECT_EQ(step_augmented({5, 1}, 1'000'000'000, r), (AugmentedState{9, 3}));
}

TEST(StepAugmented, ClosedOnStateSpace) {
  for (int z = 1; z <= 10; ++z)
    for (int h = 1; h <= z; ++h)
      for (int pen = 0; pen <= 3; ++pen) {
        const BmsRule r{z, h, pen, 0};
        const StateSpace s(r);
        for (const auto& st : s.states())
          for (int n = 0; n <= z + 1; ++n) {
            const auto next = step_augmented(st, n, r);
            ASSERT_TRUE(s.contains(next)) << r.label() << " z=" << z << " " << to_string(st);
            if (pen == 0) {
              const int l = n == 0 ? std::max(st.level - 1, 0) : std::min(st.level + h * n, z);
              EXPECT_EQ(next, (AugmentedState{l, 0}));
            }
          }
      }
}

TEST(ReplayRaw, ReferenceHistory) {
  const std::vector<int> claims{0, 0, 2, 1, 0, 0, 0, 0, 1};
  const auto tr = replay_raw(claims, BmsRule{20, 2, 2, 10});
  EXPECT_EQ(tr.levels, (std::vector<int>{10, 9, 8, 12, 14, 14, 14, 13, 12, 14}));
  EXPECT_EQ(tr.penalties, (std::vector<int>{0, 1, 2, 2, 2, 2, 2, 2, 2, 2}));
  const std::vector<AugmentedState> aug{{10, 0}, {9, 0},  {8, 0},  {12, 2}, {14, 2},
                                        {14, 1}, {14, 0}, {13, 0}, {12, 0}, {14, 2}};
  EXPECT_EQ(tr.augmented, aug);
}

TEST(ReplayRaw, ClassicalDescent) {
  const std::vector<int> claims(6, 0);
  const auto tr = replay_raw(claims, BmsRule{9, 1, 0, 3});
  EXPECT_EQ(tr.levels, (std::vector<int>{3, 2, 1, 0, 0, 0, 0}));
}

TEST(ReplayRaw, EmptyHistory) {
  const auto tr = replay_raw({}, BmsRule{20, 2, 2, 10});
  EXPECT_EQ(tr.levels, std::vector<int>{10});
  EXPECT_EQ(tr.augmented.size(), 1u);
}

TEST(ReplayRaw, RejectsNegativeClaims) {
  const std::vector<int> claims{0, -1};
  EXPECT_THROW(replay_raw(claims, BmsRule{5, 1, 1, 0}), ConfigError);
}

TEST(ReplayRaw, RandomHistoriesMatchReferenceAndAugmentedPath) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const int z = std::uniform_int_distribution<int>(1, 25)(rng);
    const int h = std::uniform_int_distribution<int>(1, z)(rng);
    const int pen = std::uniform_int_distribution<int>(0, 4)(rng);
    const int l0 = std::uniform_int_distribution<int>(0, z)(rng);
    const BmsRule r{z, h, pen, l0};
    std::bernoulli_distribution any(0.3);
    std::uniform_int_distribution<int> many(1, 3);
    std::vector<int> claims(std::uniform_int_distribution<std::size_t>(0, 60)(rng));
    for (auto& c : claims) c = any(rng) ? many(rng) : 0;

    const auto tr = replay_raw(claims, r);
    ASSERT_EQ(tr.levels, reference_levels(claims, r)) << r.label() << " z=" << z;
    for (std::size_t t = 0; t < tr.levels.size(); ++t)
      ASSERT_EQ(tr.augmented[t].level, tr.levels[t]);
  }
}
