#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "bmslab/error.hpp"
#include "bmslab/markov.hpp"
#include "bmslab/relativity.hpp"

using namespace bmslab;

namespace {

// Nonzero pattern of the 14x14 matrix for -1/+2/1, z = 7.
const std::vector<std::string> kFourteenStatePattern{
    "X..X...X...X.X", "X....X...X...X", ".X.....X...X.X", "..X....X...X.X",
    "..X......X...X", "....X....X...X", "....X......X.X", "......X....X.X",
    "......X......X", "........X....X", "........X....X", "..........X..X",
    "..........X..X", "............XX",
};

double poisson(double mean, int n) { return std::exp(-mean + n * std::log(mean) - std::lgamma(n + 1.0)); }

}  // namespace

TEST(ClaimCount, PoissonPmfAndTail) {
  const ClaimCountDistribution d{0.3};
  double partial = 0.0;
  for (int n = 0; n < 12; ++n) {
    EXPECT_NEAR(d.pmf(n), poisson(0.3, n), 1e-15);
    EXPECT_NEAR(d.tail(n), 1.0 - partial, 1e-14) << n;
    partial += poisson(0.3, n);
  }
  EXPECT_EQ(d.tail(0), 1.0);
  EXPECT_EQ(d.pmf(-1), 0.0);
  // Deep tail stays positive where 1 - partial sum would cancel to zero.
  const ClaimCountDistribution tiny{1e-6};
  EXPECT_GT(tiny.tail(4), 0.0);
  EXPECT_NEAR(tiny.tail(4) / (std::pow(1e-6, 4) / 24.0), 1.0, 1e-5);
}

TEST(BuildMatrix, FourteenStatePattern) {
  const auto p = build_matrix(BmsRule{7, 2, 1, 0}, ClaimCountDistribution{0.1});
  ASSERT_EQ(p.size(), 14u);
  for (std::size_t i = 0; i < 14; ++i)
    for (std::size_t j = 0; j < 14; ++j)
      EXPECT_EQ(p(i, j) != 0.0, kFourteenStatePattern[i][j] == 'X') << i << "," << j;
}

TEST(BuildMatrix, FourteenStateFirstRow) {
  const double m = 0.37;
  const auto p = build_matrix(BmsRule{7, 2, 1, 0}, ClaimCountDistribution{m});
  const double p0 = poisson(m, 0), p1 = poisson(m, 1), p2 = poisson(m, 2), p3 = poisson(m, 3);
  EXPECT_NEAR(p(0, 0), p0, 1e-15);
  EXPECT_NEAR(p(0, 3), p1, 1e-15);
  EXPECT_NEAR(p(0, 7), p2, 1e-15);
  EXPECT_NEAR(p(0, 11), p3, 1e-15);
  EXPECT_NEAR(p(0, 13), 1 - p0 - p1 - p2 - p3, 1e-14);
  EXPECT_NEAR(p(13, 12), p0, 1e-15);
  EXPECT_NEAR(p(13, 13), 1 - p0, 1e-14);
  EXPECT_DOUBLE_EQ(p.p0(), p0);
}

TEST(BuildMatrix, RowStochasticAcrossRulesAndMeans) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int z = std::uniform_int_distribution<int>(1, 20)(rng);
    const int h = std::uniform_int_distribution<int>(1, z)(rng);
    const int pen = std::uniform_int_distribution<int>(0, 4)(rng);
    const double mean = std::exp(std::uniform_real_distribution<double>(-9.0, 2.5)(rng));
    const auto p = build_matrix(BmsRule{z, h, pen, 0}, ClaimCountDistribution{mean});
    for (Eigen::Index i = 0; i < p.matrix().rows(); ++i) {
      EXPECT_NEAR(p.matrix().row(i).sum(), 1.0, 1e-12);
      EXPECT_GE(p.matrix().row(i).minCoeff(), 0.0);
    }
  }
}

TEST(BuildMatrix, PenZeroMatchesClassicalChain) {
  for (int z : {3, 9, 14})
    for (int h : {1, 2, 3}) {
      const auto p = build_matrix(BmsRule{z, h, 0, 0}, ClaimCountDistribution{0.42});
      const Eigen::MatrixXd c = classical_matrix(z, h, 0.42);
      EXPECT_LE((p.matrix() - c).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(Stationary, TwoStateClosedForm) {
  Eigen::MatrixXd p(2, 2);
  p << 0.9, 0.1, 0.3, 0.7;
  const Eigen::VectorXd pi = stationary(p);
  EXPECT_NEAR(pi(0), 0.75, 1e-15);
  EXPECT_NEAR(pi(1), 0.25, 1e-15);
}

TEST(Stationary, FourteenStateMatchesPowerIteration) {
  const auto p = build_matrix(BmsRule{7, 2, 1, 0}, ClaimCountDistribution{0.1});
  const Eigen::VectorXd lu = stationary(p);
  const auto pw = power_iteration(p.matrix(), 1'000'000, 1e-15);
  EXPECT_LE((lu - pw.pi).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE(fixed_point_residual(p.matrix(), lu), 1e-12);
  EXPECT_NEAR(lu.sum(), 1.0, 1e-14);
}

TEST(Stationary, FixedPointResidualSmall) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int z = std::uniform_int_distribution<int>(1, 25)(rng);
    const int h = std::uniform_int_distribution<int>(1, z)(rng);
    const int pen = std::uniform_int_distribution<int>(0, 4)(rng);
    const double mean = std::exp(std::uniform_real_distribution<double>(-6.0, 1.5)(rng));
    const auto p = build_matrix(BmsRule{z, h, pen, 0}, ClaimCountDistribution{mean});
    const Eigen::VectorXd pi = stationary(p);
    EXPECT_LE(fixed_point_residual(p.matrix(), pi), 1e-10);
    EXPECT_GE(pi.minCoeff(), 0.0);
  }
}

TEST(Stationary, DegenerateChainsRejected) {
  const auto space = std::make_shared<const StateSpace>(BmsRule{9, 1, 2, 0});
  const auto hot = build_matrix(space, ClaimCountDistribution{900.0});
  EXPECT_THROW(stationary(hot), NumericError);
  const auto cold = build_matrix(space, ClaimCountDistribution{1e-320});
  EXPECT_THROW(stationary(cold), NumericError);
}

TEST(Stationary, DegenerateChainsGivePointMasses) {
  const auto space = std::make_shared<const StateSpace>(BmsRule{9, 1, 2, 0});
  const Eigen::VectorXd hot = stationary_at(space, ClaimCountDistribution{900.0});
  EXPECT_EQ(hot(static_cast<Eigen::Index>(space->index_of({9, 2}))), 1.0);
  EXPECT_EQ(hot.sum(), 1.0);
  const Eigen::VectorXd cold = stationary_at(space, ClaimCountDistribution{0.0});
  EXPECT_EQ(cold(0), 1.0);
  EXPECT_EQ(cold.sum(), 1.0);
}

TEST(Stationary, SmallMeanConcentratesAtBottom) {
  const auto space = std::make_shared<const StateSpace>(BmsRule{9, 1, 2, 0});
  const Eigen::VectorXd pi = stationary_at(space, ClaimCountDistribution{1e-12});
  EXPECT_NEAR(pi(0), 1.0, 1e-10);
}

TEST(TransitionMatrix, CsvHeader) {
  const auto p = build_matrix(BmsRule{7, 2, 1, 0}, ClaimCountDistribution{0.1});
  std::ostringstream os;
  p.write_csv(os);
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "state,(0)_0,(1)_0,(2)_0,(2)_1,(3)_0,(3)_1,(4)_0,(4)_1,(5)_0,(5)_1,(6)_0,(6)_1,(7)_0,(7)_1");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 15);
}
