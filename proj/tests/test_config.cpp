#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "bmslab/config.hpp"
#include "bmslab/error.hpp"

using namespace bmslab;
using nlohmann::json;

namespace {

json minimal() {
  return json::parse(R"({
    "rule": {"z": 9, "h": 1, "pen": 2},
    "model": {"type": "frequency", "sigma2": 0.99},
    "portfolio": {"classes": [{"lambda1": 0.05, "weight": 1}]}
  })");
}

// Asserts that parsing fails with a ConfigError mentioning `key`.
void expect_error_names(const json& doc, const std::string& key) {
  try {
    (void)parse_config(doc);
    ADD_FAILURE() << "accepted: " << doc.dump();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(Config, MinimalDocumentDefaults) {
  const auto c = parse_config(minimal());
  EXPECT_EQ(c.rule, (BmsRule{9, 1, 2, 0}));
  EXPECT_EQ(c.model(), ModelKind::kFrequency);
  EXPECT_EQ(c.numerics.nodes, kDefaultNodes);
  EXPECT_EQ(c.simulation.policyholders, 100000u);
  EXPECT_EQ(c.simulation.burn_in, 500);
  EXPECT_EQ(c.portfolio.size(), 1u);
  EXPECT_EQ(c.sim_config().rule, c.rule);
}

TEST(Config, ErrorsNameTheirKey) {
  auto d = minimal();
  d["rule"].erase("z");
  expect_error_names(d, "rule.z");

  d = minimal();
  d["rule"]["h"] = 12;
  expect_error_names(d, "rule.h");

  d = minimal();
  d["rule"]["pen"] = -1;
  expect_error_names(d, "rule.pen");

  d = minimal();
  d["rule"]["bogus"] = 1;
  expect_error_names(d, "rule.bogus");

  d = minimal();
  d["model"]["sigma2"] = "high";
  expect_error_names(d, "model.sigma2");

  d = minimal();
  d["model"]["type"] = "tweedie";
  expect_error_names(d, "model.type");

  d = minimal();
  d["portfolio"]["classes"][0].erase("lambda1");
  expect_error_names(d, "lambda1");

  d = minimal();
  d["portfolio"]["classes"][0]["log_lambda1"] = -3.0;
  expect_error_names(d, "log_lambda1");

  d = minimal();
  d["numerics"] = {{"quadrature_nodes", 0}};
  expect_error_names(d, "numerics.quadrature_nodes");

  d = minimal();
  d["numerics"] = {{"integration", "simpson"}};
  expect_error_names(d, "numerics.integration");

  d = minimal();
  d["simulation"] = {{"burn_in", 0}};
  expect_error_names(d, "simulation.burn_in");

  d = minimal();
  d.erase("model");
  expect_error_names(d, "model");

  d = minimal();
  d["extra"] = true;
  expect_error_names(d, "extra");
}

TEST(Config, FrequencySeverityModel) {
  auto d = minimal();
  d["model"] = {{"type", "frequency_severity"}, {"sigma1_2", 0.99}, {"sigma2_2", 0.29},
                {"rho", -0.45}, {"inv_psi2", 0.67}};
  d["portfolio"]["classes"][0]["log_lambda2"] = 8.0;
  const auto c = parse_config(d);
  EXPECT_EQ(c.model(), ModelKind::kFrequencySeverity);
  EXPECT_NEAR(c.portfolio.classes[0].lambda2, std::exp(8.0), 1e-9);
  ASSERT_TRUE(c.severity_shape.has_value());
  EXPECT_EQ(*c.severity_shape, 0.67);

  d["model"]["rho"] = 1.0;
  expect_error_names(d, "model.rho");
}

TEST(Config, ShippedExamplesLoad) {
  for (const char* name : {"example3", "example4", "homogeneous", "lgpif_model1", "lgpif_model2"}) {
    const auto c = load_config(std::string(BMSLAB_CONFIG_DIR) + "/" + name + ".json");
    EXPECT_GE(c.rule.z, 1) << name;
  }
}

TEST(Config, MissingFileAndMalformedJson) {
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, FingerprintStableAndSensitive) {
  const auto a = minimal();
  const auto b = json::parse(a.dump());
  EXPECT_EQ(fingerprint(a), fingerprint(b));
  EXPECT_EQ(fingerprint(a).size(), 16u);
  auto c = minimal();
  c["rule"]["pen"] = 3;
  EXPECT_NE(fingerprint(a), fingerprint(c));
}

TEST(Config, ParseSystem) {
  EXPECT_EQ(parse_system("-1/+1").first, 1);
  EXPECT_FALSE(parse_system("-1/+1").second.has_value());
  const auto [h, pen] = parse_system("-1/+2/3");
  EXPECT_EQ(h, 2);
  EXPECT_EQ(pen, 3);
  EXPECT_THROW(parse_system("+1/-1"), ConfigError);
  EXPECT_THROW(parse_system("-1/+0"), ConfigError);
  EXPECT_THROW(parse_system("-1/+2/x"), ConfigError);
  EXPECT_THROW(parse_system("-1/+2/1/"), ConfigError);
}
