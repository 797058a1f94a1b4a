#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "bmslab/config.hpp"
#include "bmslab/error.hpp"
#include "bmslab/portfolio.hpp"
#include "bmslab/relativity.hpp"

using namespace bmslab;

namespace {

GlmCoefficients lgpif_glm() {
  GlmCoefficients glm;
  glm.factors = {
      {"Type",
       {"Misc", "City", "County", "School", "Town", "Village"},
       {0.0503, 0.0966, 0.1147, 0.3642, 0.1690, 0.2052}},
      {"Coverage", {"1", "2", "3"}, {0.3340, 0.3320, 0.3340}},
  };
  glm.frequency = {{kIntercept, -2.798},  {"Type=City", 0.601},    {"Type=County", 1.923},
                   {"Type=School", 0.438}, {"Type=Town", -1.343},  {"Type=Village", -0.005},
                   {"Coverage=2", 1.254},  {"Coverage=3", 2.156}};
  return glm;
}

const RiskClass* find(const Portfolio& p, const std::string& label) {
  for (const auto& c : p.classes)
    if (c.label == label) return &c;
  return nullptr;
}

}  // namespace

TEST(ClassMean, BaselineAndSums) {
  const auto glm = lgpif_glm();
  EXPECT_NEAR(class_mean(glm.frequency, {}), std::exp(-2.798), 1e-15);
  EXPECT_NEAR(class_mean(glm.frequency, {}), 0.0610, 1e-4);
  const std::vector<std::string> county3{"Type=County", "Coverage=3"};
  EXPECT_NEAR(class_mean(glm.frequency, county3), 3.601, 1e-3);
  const std::vector<std::string> missing{"Type=Farm"};
  try {
    (void)class_mean(glm.frequency, missing);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("Type=Farm"), std::string::npos);
  }
}

TEST(BuildPortfolio, GlmExpandsAllCombinations) {
  const auto p = build_portfolio(lgpif_glm());
  ASSERT_EQ(p.size(), 18u);
  EXPECT_NEAR(p.total_weight(), 1.0, 1e-14);
  const auto* school1 = find(p, "Type=School;Coverage=1");
  ASSERT_NE(school1, nullptr);
  EXPECT_NEAR(school1->weight, 0.3642 * 0.3340 / (1.0001 * 1.0), 2e-5);
  EXPECT_NEAR(school1->weight, 0.12164, 5e-5);
  EXPECT_NEAR(school1->lambda1, std::exp(-2.798 + 0.438), 1e-14);
  EXPECT_EQ(school1->lambda2, 1.0);
  ASSERT_EQ(p.warnings.size(), 1u);
  EXPECT_NE(p.warnings[0].find("product of marginal"), std::string::npos);
}

TEST(BuildPortfolio, JointWeightsUsedVerbatim) {
  auto glm = lgpif_glm();
  glm.joint_weights = {{"Type=Misc;Coverage=1", 3.0}, {"Type=City;Coverage=2", 1.0}};
  const auto p = build_portfolio(glm);
  EXPECT_TRUE(p.warnings.empty());
  EXPECT_NEAR(find(p, "Type=Misc;Coverage=1")->weight, 0.75, 1e-15);
  EXPECT_NEAR(find(p, "Type=City;Coverage=2")->weight, 0.25, 1e-15);
  EXPECT_EQ(find(p, "Type=Town;Coverage=3")->weight, 0.0);

  glm.joint_weights["Type=Farm;Coverage=1"] = 1.0;
  EXPECT_THROW(build_portfolio(glm), ConfigError);
}

TEST(BuildPortfolio, SeverityCoefficients) {
  auto glm = lgpif_glm();
  glm.severity = {{kIntercept, 8.0}, {"Type=City", 0.1},  {"Type=County", 0.2},
                  {"Type=School", 0.3}, {"Type=Town", 0.4}, {"Type=Village", 0.5},
                  {"Coverage=2", 0.6},  {"Coverage=3", 0.7}};
  const auto p = build_portfolio(glm);
  EXPECT_NEAR(find(p, "Type=Town;Coverage=3")->lambda2, std::exp(8.0 + 0.4 + 0.7), 1e-9);
  glm.severity.erase("Coverage=3");
  EXPECT_THROW(build_portfolio(glm), ConfigError);
}

TEST(BuildPortfolio, ExplicitClassesPassThrough) {
  const auto p = build_portfolio({{"all", 0.05, 1.0, 1.0}});
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.classes[0].lambda1, 0.05);
  EXPECT_EQ(p.classes[0].weight, 1.0);
  EXPECT_TRUE(p.warnings.empty());

  const auto q = build_portfolio({{"a", 0.1, 1.0, 2.0}, {"b", 0.2, 1.0, 6.0}});
  EXPECT_NEAR(q.classes[0].weight, 0.25, 1e-15);
  EXPECT_NEAR(q.classes[1].weight, 0.75, 1e-15);
}

TEST(BuildPortfolio, Rejections) {
  EXPECT_THROW(build_portfolio(std::vector<RiskClass>{}), ConfigError);
  EXPECT_THROW(build_portfolio({{"a", 0.1, 1.0, -1.0}}), ConfigError);
  EXPECT_THROW(build_portfolio({{"a", 0.0, 1.0, 1.0}}), ConfigError);
  EXPECT_THROW(build_portfolio({{"a", 0.1, -2.0, 1.0}}), ConfigError);
  EXPECT_THROW(build_portfolio({{"a", 0.1, 1.0, 0.0}}), ConfigError);
  auto glm = lgpif_glm();
  glm.factors[1].proportions = {0.5, 0.5};
  EXPECT_THROW(build_portfolio(glm), ConfigError);
}

TEST(BuildPortfolio, ShippedGlmConfigsLoad) {
  const auto m1 = load_config(std::string(BMSLAB_CONFIG_DIR) + "/lgpif_model1.json");
  EXPECT_EQ(m1.portfolio.size(), 18u);
  EXPECT_EQ(m1.model(), ModelKind::kFrequency);
  const auto m2 = load_config(std::string(BMSLAB_CONFIG_DIR) + "/lgpif_model2.json");
  EXPECT_EQ(m2.portfolio.size(), 18u);
  EXPECT_EQ(m2.model(), ModelKind::kFrequencySeverity);
}

TEST(Portfolio, SeverityScaleEquivariance) {
  // Relativities are invariant and HMSE scales by c^2 when every lambda2 is
  // multiplied by c.
  const BmsRule rule{9, 1, 1, 0};
  const BivariateEffect e{0.99, 0.29, -0.45};
  const Numerics n{64};
  const auto base = build_portfolio({{"a", 0.05, 100.0, 0.4}, {"b", 0.2, 300.0, 0.6}});
  const auto scaled = build_portfolio({{"a", 0.05, 700.0, 0.4}, {"b", 0.2, 2100.0, 0.6}});
  const auto t1 = optimal_relativities(rule, base, e, n);
  const auto t2 = optimal_relativities(rule, scaled, e, n);
  for (std::size_t l = 0; l < t1.relativity.size(); ++l)
    EXPECT_NEAR(*t1.relativity[l], *t2.relativity[l], 1e-12 * *t1.relativity[l]);
  EXPECT_NEAR(t2.hmse / t1.hmse, 49.0, 1e-9);
}
