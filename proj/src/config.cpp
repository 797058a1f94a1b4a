#include "bmslab/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "bmslab/error.hpp"

namespace bmslab {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string kind_name(const json& v) {
  return v.type_name();
}

void allow_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& [k, v] : obj.items())
    if (!known.count(k)) throw ConfigError(fmt::format("unknown key '{}'", join(path, k)));
}

const json& object_at(const json& parent, const std::string& path, const char* key) {
  const std::string p = join(path, key);
  if (!parent.contains(key)) throw ConfigError(fmt::format("missing key '{}'", p));
  const json& v = parent.at(key);
  if (!v.is_object())
    throw ConfigError(fmt::format("'{}' must be an object (got {})", p, kind_name(v)));
  return v;
}

double number(const json& parent, const std::string& path, const char* key) {
  const std::string p = join(path, key);
  if (!parent.contains(key)) throw ConfigError(fmt::format("missing key '{}'", p));
  const json& v = parent.at(key);
  if (!v.is_number()) throw ConfigError(fmt::format("'{}' must be a number (got {})", p, kind_name(v)));
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(fmt::format("'{}' must be finite", p));
  return d;
}

std::optional<double> maybe_number(const json& parent, const std::string& path, const char* key) {
  if (!parent.contains(key)) return std::nullopt;
  return number(parent, path, key);
}

long long integer(const json& parent, const std::string& path, const char* key, long long lo,
                  long long hi) {
  const std::string p = join(path, key);
  if (!parent.contains(key)) throw ConfigError(fmt::format("missing key '{}'", p));
  const json& v = parent.at(key);
  if (!v.is_number_integer())
    throw ConfigError(fmt::format("'{}' must be an integer (got {})", p, kind_name(v)));
  long long x = 0;
  if (v.is_number_unsigned()) {
    const auto u = v.get<unsigned long long>();
    if (u > static_cast<unsigned long long>(hi))
      throw ConfigError(fmt::format("'{}' must be <= {} (got {})", p, hi, u));
    x = static_cast<long long>(u);
  } else {
    x = v.get<long long>();
  }
  if (x < lo || x > hi)
    throw ConfigError(fmt::format("'{}' must lie in [{}, {}] (got {})", p, lo, hi, x));
  return x;
}

std::uint64_t seed_value(const json& parent, const std::string& path, const char* key) {
  const std::string p = join(path, key);
  const json& v = parent.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                  v.get<long long>() < 0))
    throw ConfigError(fmt::format("'{}' must be a non-negative integer", p));
  return v.get<std::uint64_t>();
}

std::string text(const json& parent, const std::string& path, const char* key) {
  const std::string p = join(path, key);
  if (!parent.contains(key)) throw ConfigError(fmt::format("missing key '{}'", p));
  const json& v = parent.at(key);
  if (!v.is_string()) throw ConfigError(fmt::format("'{}' must be a string (got {})", p, kind_name(v)));
  return v.get<std::string>();
}

BmsRule parse_rule(const json& doc) {
  const json& r = object_at(doc, "", "rule");
  allow_keys(r, "rule", {"z", "h", "pen", "l0"});
  BmsRule rule;
  rule.z = static_cast<int>(integer(r, "rule", "z", 1, 10000));
  rule.h = r.contains("h") ? static_cast<int>(integer(r, "rule", "h", 1, rule.z)) : 1;
  rule.pen = r.contains("pen") ? static_cast<int>(integer(r, "rule", "pen", 0, 1000)) : 0;
  rule.l0 = r.contains("l0") ? static_cast<int>(integer(r, "rule", "l0", 0, rule.z)) : 0;
  rule.validate();
  return rule;
}

void parse_model(const json& doc, RunConfig& cfg) {
  const json& m = object_at(doc, "", "model");
  const std::string type = text(m, "model", "type");
  if (type == "frequency") {
    allow_keys(m, "model", {"type", "sigma2"});
    const double s2 = number(m, "model", "sigma2");
    if (s2 < 0.0) throw ConfigError(fmt::format("'model.sigma2' must be >= 0 (got {})", s2));
    cfg.effect = LognormalEffect{s2};
  } else if (type == "frequency_severity") {
    allow_keys(m, "model", {"type", "sigma1_2", "sigma2_2", "rho", "inv_psi2"});
    BivariateEffect e{number(m, "model", "sigma1_2"), number(m, "model", "sigma2_2"),
                      number(m, "model", "rho")};
    if (e.sigma1_2 < 0.0) throw ConfigError("'model.sigma1_2' must be >= 0");
    if (e.sigma2_2 < 0.0) throw ConfigError("'model.sigma2_2' must be >= 0");
    if (!(e.rho > -1.0 && e.rho < 1.0))
      throw ConfigError(fmt::format("'model.rho' must lie in (-1, 1) (got {})", e.rho));
    cfg.effect = e;
    cfg.severity_shape = maybe_number(m, "model", "inv_psi2");
    if (cfg.severity_shape && !(*cfg.severity_shape > 0.0))
      throw ConfigError("'model.inv_psi2' must be > 0");
  } else {
    throw ConfigError(fmt::format(
        "'model.type' must be 'frequency' or 'frequency_severity' (got '{}')", type));
  }
}

double mean_field(const json& c, const std::string& path, const char* plain, const char* log,
                  std::optional<double> fallback) {
  const bool has_plain = c.contains(plain), has_log = c.contains(log);
  if (has_plain && has_log)
    throw ConfigError(fmt::format("'{}' and '{}' are mutually exclusive", join(path, plain),
                                  join(path, log)));
  if (has_log) return std::exp(number(c, path, log));
  if (has_plain) {
    const double v = number(c, path, plain);
    if (!(v > 0.0)) throw ConfigError(fmt::format("'{}' must be > 0 (got {})", join(path, plain), v));
    return v;
  }
  if (fallback) return *fallback;
  throw ConfigError(fmt::format("missing key '{}'", join(path, plain)));
}

std::map<std::string, double> coefficient_map(const json& parent, const std::string& path,
                                              const char* key) {
  const json& obj = object_at(parent, path, key);
  std::map<std::string, double> out;
  for (const auto& [name, v] : obj.items()) out[name] = number(obj, join(path, key), name.c_str());
  if (!out.count(kIntercept))
    throw ConfigError(fmt::format("missing key '{}'", join(join(path, key), kIntercept)));
  return out;
}

Portfolio parse_glm(const json& g, const std::string& path, bool severity_model) {
  allow_keys(g, path, {"factors", "frequency", "severity", "joint_weights"});
  GlmCoefficients glm;
  if (!g.contains("factors") || !g.at("factors").is_array())
    throw ConfigError(fmt::format("'{}' must be an array", join(path, "factors")));
  const json& factors = g.at("factors");
  for (std::size_t i = 0; i < factors.size(); ++i) {
    const std::string fp = fmt::format("{}.factors[{}]", path, i);
    const json& f = factors[i];
    if (!f.is_object()) throw ConfigError(fmt::format("'{}' must be an object", fp));
    allow_keys(f, fp, {"name", "levels", "proportions"});
    CategoricalFactor cf;
    cf.name = text(f, fp, "name");
    if (!f.contains("levels") || !f.at("levels").is_array())
      throw ConfigError(fmt::format("'{}.levels' must be an array of strings", fp));
    for (const auto& l : f.at("levels")) {
      if (!l.is_string()) throw ConfigError(fmt::format("'{}.levels' must be an array of strings", fp));
      cf.levels.push_back(l.get<std::string>());
    }
    if (f.contains("proportions")) {
      if (!f.at("proportions").is_array())
        throw ConfigError(fmt::format("'{}.proportions' must be an array of numbers", fp));
      for (const auto& p : f.at("proportions")) {
        if (!p.is_number() || p.get<double>() < 0.0)
          throw ConfigError(fmt::format("'{}.proportions' must hold numbers >= 0", fp));
        cf.proportions.push_back(p.get<double>());
      }
    }
    glm.factors.push_back(std::move(cf));
  }
  glm.frequency = coefficient_map(g, path, "frequency");
  if (g.contains("severity")) glm.severity = coefficient_map(g, path, "severity");
  if (severity_model && glm.severity.empty())
    throw ConfigError(fmt::format("missing key '{}' for a frequency_severity model",
                                  join(path, "severity")));
  if (g.contains("joint_weights")) {
    const json& jw = object_at(g, path, "joint_weights");
    for (const auto& [label, v] : jw.items()) {
      const double w = number(jw, join(path, "joint_weights"), label.c_str());
      if (w < 0.0)
        throw ConfigError(fmt::format("'{}.joint_weights.{}' must be >= 0", path, label));
      glm.joint_weights[label] = w;
    }
  }
  try {
    return build_portfolio(glm);
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("'{}': {}", path, e.what()));
  }
}

Portfolio parse_portfolio(const json& doc, bool severity_model) {
  const json& p = object_at(doc, "", "portfolio");
  allow_keys(p, "portfolio", {"classes", "glm"});
  if (p.contains("classes") == p.contains("glm"))
    throw ConfigError("'portfolio' needs exactly one of 'classes' or 'glm'");
  if (p.contains("glm")) return parse_glm(object_at(p, "portfolio", "glm"), "portfolio.glm", severity_model);

  const json& arr = p.at("classes");
  if (!arr.is_array()) throw ConfigError("'portfolio.classes' must be an array");
  std::vector<RiskClass> classes;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string cp = fmt::format("portfolio.classes[{}]", i);
    const json& c = arr[i];
    if (!c.is_object()) throw ConfigError(fmt::format("'{}' must be an object", cp));
    allow_keys(c, cp, {"label", "lambda1", "log_lambda1", "lambda2", "log_lambda2", "weight"});
    RiskClass rc;
    rc.label = c.contains("label") ? text(c, cp, "label") : fmt::format("class{}", i + 1);
    rc.lambda1 = mean_field(c, cp, "lambda1", "log_lambda1", std::nullopt);
    rc.lambda2 = mean_field(c, cp, "lambda2", "log_lambda2",
                            severity_model ? std::nullopt : std::optional<double>(1.0));
    rc.weight = number(c, cp, "weight");
    if (rc.weight < 0.0)
      throw ConfigError(fmt::format("'{}.weight' must be >= 0 (got {})", cp, rc.weight));
    classes.push_back(std::move(rc));
  }
  return build_portfolio(std::move(classes));
}

Numerics parse_numerics(const json& doc, SimulationSettings& sim) {
  Numerics n;
  if (!doc.contains("numerics")) return n;
  const json& x = object_at(doc, "", "numerics");
  allow_keys(x, "numerics", {"quadrature_nodes", "integration", "inner_nodes", "tolerances"});
  if (x.contains("quadrature_nodes"))
    n.nodes = static_cast<int>(integer(x, "numerics", "quadrature_nodes", 1, 4096));
  if (x.contains("integration")) {
    const std::string s = text(x, "numerics", "integration");
    if (s == "reduced")
      n.integration = Integration::kReduced;
    else if (s == "tensor")
      n.integration = Integration::kTensor;
    else
      throw ConfigError(fmt::format(
          "'numerics.integration' must be 'reduced' or 'tensor' (got '{}')", s));
  }
  if (x.contains("inner_nodes"))
    n.inner_nodes = static_cast<int>(integer(x, "numerics", "inner_nodes", 2, 4096));
  if (x.contains("tolerances")) {
    const json& t = object_at(x, "numerics", "tolerances");
    allow_keys(t, "numerics.tolerances", {"simulation_se"});
    if (auto k = maybe_number(t, "numerics.tolerances", "simulation_se")) {
      if (!(*k > 0.0)) throw ConfigError("'numerics.tolerances.simulation_se' must be > 0");
      sim.tolerance_se = *k;
    }
  }
  return n;
}

void parse_simulation(const json& doc, SimulationSettings& sim) {
  if (!doc.contains("simulation")) return;
  const json& s = object_at(doc, "", "simulation");
  allow_keys(s, "simulation", {"policyholders", "burn_in", "measured_years", "seed"});
  if (s.contains("policyholders"))
    sim.policyholders =
        static_cast<std::uint64_t>(integer(s, "simulation", "policyholders", 1, 100000000));
  if (s.contains("burn_in"))
    sim.burn_in = static_cast<int>(integer(s, "simulation", "burn_in", 1, 1000000));
  if (s.contains("measured_years"))
    sim.measured_years = static_cast<int>(integer(s, "simulation", "measured_years", 1, 1000000));
  if (s.contains("seed")) sim.seed = seed_value(s, "simulation", "seed");
}

}  // namespace

SimConfig RunConfig::sim_config() const {
  SimConfig c;
  c.rule = rule;
  c.portfolio = portfolio;
  c.effect = effect;
  c.policyholders = simulation.policyholders;
  c.burn_in = simulation.burn_in;
  c.measured_years = simulation.measured_years;
  c.seed = simulation.seed;
  return c;
}

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration document must be a JSON object");
  allow_keys(doc, "", {"rule", "model", "portfolio", "numerics", "simulation", "description"});
  RunConfig cfg;
  cfg.rule = parse_rule(doc);
  parse_model(doc, cfg);
  cfg.portfolio = parse_portfolio(doc, cfg.model() == ModelKind::kFrequencySeverity);
  cfg.numerics = parse_numerics(doc, cfg.simulation);
  parse_simulation(doc, cfg.simulation);
  cfg.document = doc;
  return cfg;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_json(path));
}

std::string fingerprint(const json& doc) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char ch : doc.dump()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return fmt::format("{:016x}", h);
}

std::pair<int, std::optional<int>> parse_system(const std::string& text) {
  int h = 0, pen = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "-1/+%d/%d%c", &h, &pen, &tail) == 2 && h >= 1 && pen >= 0)
    return {h, pen};
  if (std::sscanf(text.c_str(), "-1/+%d%c", &h, &tail) == 1 && h >= 1) return {h, std::nullopt};
  throw ConfigError(fmt::format("system '{}' is not of the form -1/+h or -1/+h/pen", text));
}

}  // namespace bmslab
