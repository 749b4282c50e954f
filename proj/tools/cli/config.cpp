#include "config.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace parametrix::cli {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
void read(const json& obj, const std::string& where, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

Vector read_point(const json& obj, const std::string& where, const char* key, const Vector& fallback) {
  if (!obj.contains(key)) return fallback;
  std::vector<double> v;
  read(obj, where, key, v);
  if (v.empty()) throw ConfigError(where + "." + key + ": empty point");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

void parse_model(const json& j, ModelConfig& m) {
  check_keys(j, "model", {"family", "d", "a", "b", "c", "e", "sigma", "m", "s_prime", "innovation",
                          "innovation_shift"});
  read(j, "model", "family", m.family);
  read(j, "model", "d", m.d);
  read(j, "model", "a", m.a);
  read(j, "model", "b", m.b);
  read(j, "model", "c", m.c);
  read(j, "model", "e", m.e);
  read(j, "model", "sigma", m.sigma);
  read(j, "model", "m", m.m);
  read(j, "model", "s_prime", m.s_prime);
  read(j, "model", "innovation", m.innovation);
  read(j, "model", "innovation_shift", m.innovation_shift);
}

void parse_regime(const json& j, Regime& r) {
  check_keys(j, "regime", {"law", "gamma", "T"});
  std::string law = r.law == HorizonLaw::fixed_T ? "fixed_T" : "shrinking_T";
  read(j, "regime", "law", law);
  if (law == "fixed_T")
    r.law = HorizonLaw::fixed_T;
  else if (law == "shrinking_T")
    r.law = HorizonLaw::shrinking_T;
  else
    throw ConfigError("regime.law: expected 'fixed_T' or 'shrinking_T'");
  read(j, "regime", "gamma", r.gamma);
  read(j, "regime", "T", r.T);
}

void parse_quadrature(const json& j, QuadratureSpec& q) {
  check_keys(j, "quadrature", {"time_rule", "time_nodes", "kappa", "points_per_axis", "tolerance"});
  std::string rule = q.time_rule == TimeRule::substitution_sqrt ? "substitution_sqrt" : "gauss_jacobi_endpoint";
  read(j, "quadrature", "time_rule", rule);
  if (rule == "substitution_sqrt")
    q.time_rule = TimeRule::substitution_sqrt;
  else if (rule == "gauss_jacobi_endpoint")
    q.time_rule = TimeRule::gauss_jacobi_endpoint;
  else
    throw ConfigError("quadrature.time_rule: expected 'substitution_sqrt' or 'gauss_jacobi_endpoint'");
  read(j, "quadrature", "time_nodes", q.time_nodes);
  read(j, "quadrature", "kappa", q.kappa);
  read(j, "quadrature", "points_per_axis", q.points_per_axis);
  read(j, "quadrature", "tolerance", q.tolerance);
}

void validate(const ExperimentConfig& c) {
  if (c.schema_version != kSchemaVersion)
    throw ConfigError("schema_version: expected " + std::to_string(kSchemaVersion));
  try {
    c.regime.validate();
    c.quad.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  for (int n : c.n_list) {
    if (n < 2) throw ConfigError("n_list: every n must be >= 2");
    if (c.regime.horizon(n) > 1.0) throw ConfigError("n_list: T = n h must be <= 1");
  }
  if (c.x.size() != c.model.d || c.y.size() != c.model.d)
    throw ConfigError("x and y must have model.d coordinates");
  if (c.policy.max_order_R < 0 || !(c.policy.term_norm_threshold > 0.0))
    throw ConfigError("truncation: max_order_R >= 0 and term_norm_threshold > 0 required");
  if (!(c.density.s >= 0.0 && c.density.s < c.density.t && c.density.t <= 1.0) || c.density.n < 2)
    throw ConfigError("density: need 0 <= s < t <= 1 and n >= 2");
  if (!(c.rate.band[0] < c.rate.band[1])) throw ConfigError("rate.band: need lo < hi");
  if (c.rate.y_points < 3 || !(c.rate.window > 0.0)) throw ConfigError("rate: y_points >= 3, window > 0");
  if (c.correct.R_phi < 1) throw ConfigError("correct.R_phi must be >= 1");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  check_keys(j, "config", {"schema_version", "model", "regime", "n_list", "x", "y", "quadrature",
                           "truncation", "density", "rate", "correct"});
  ExperimentConfig c;
  read(j, "config", "schema_version", c.schema_version);
  if (j.contains("model")) parse_model(j.at("model"), c.model);
  c.quad = QuadratureSpec::defaults(c.model.d);
  if (j.contains("regime")) parse_regime(j.at("regime"), c.regime);
  read(j, "config", "n_list", c.n_list);
  const Vector origin = Vector::Zero(c.model.d);
  c.x = read_point(j, "config", "x", origin);
  c.y = read_point(j, "config", "y", origin);
  if (j.contains("quadrature")) parse_quadrature(j.at("quadrature"), c.quad);
  if (j.contains("truncation")) {
    const auto& t = j.at("truncation");
    check_keys(t, "truncation", {"max_order_R", "term_norm_threshold", "C", "C1"});
    read(t, "truncation", "max_order_R", c.policy.max_order_R);
    read(t, "truncation", "term_norm_threshold", c.policy.term_norm_threshold);
    read(t, "truncation", "C", c.policy.C);
    read(t, "truncation", "C1", c.policy.C1);
  }
  if (j.contains("density")) {
    const auto& d = j.at("density");
    check_keys(d, "density", {"s", "t", "n"});
    read(d, "density", "s", c.density.s);
    read(d, "density", "t", c.density.t);
    read(d, "density", "n", c.density.n);
  }
  if (j.contains("rate")) {
    const auto& r = j.at("rate");
    check_keys(r, "rate", {"band", "sqrt_n_tolerance", "y_points", "window", "self_test", "self_test_constant"});
    read(r, "rate", "band", c.rate.band);
    read(r, "rate", "sqrt_n_tolerance", c.rate.sqrt_n_tolerance);
    read(r, "rate", "y_points", c.rate.y_points);
    read(r, "rate", "window", c.rate.window);
    read(r, "rate", "self_test", c.rate.self_test);
    read(r, "rate", "self_test_constant", c.rate.self_test_constant);
  }
  if (j.contains("correct")) {
    const auto& r = j.at("correct");
    check_keys(r, "correct", {"R_phi"});
    read(r, "correct", "R_phi", c.correct.R_phi);
  }
  validate(c);
  c.canonical = j.dump();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config.canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace parametrix::cli
