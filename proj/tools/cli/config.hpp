#pragma once

#include "parametrix/experiments.hpp"
#include "parametrix/model.hpp"

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace parametrix::cli {

inline constexpr int kSchemaVersion = 1;

/// Malformed or inconsistent configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DensityOptions {
  double s = 0.0;
  double t = 0.25;
  int n = 16;
};

struct RateOptions {
  std::array<double, 2> band{-0.8, -0.3};
  double sqrt_n_tolerance = 0.15;
  int y_points = 41;
  double window = 6.0;
  /// Replace computed errors by self_test_constant n^{-1/2}.
  bool self_test = false;
  double self_test_constant = 1.0;
};

struct CorrectOptions {
  int R_phi = 4;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  ModelConfig model;
  Regime regime;
  std::vector<int> n_list{8, 16, 32, 64};
  Vector x = make_vector({0.0});
  Vector y = make_vector({0.0});
  QuadratureSpec quad = QuadratureSpec::defaults(1);
  TruncationPolicy policy;
  DensityOptions density;
  RateOptions rate;
  CorrectOptions correct;
  /// Canonical JSON text of the parsed document (hashed into the manifest).
  std::string canonical;
};

/// Parses a JSON document; unknown keys and type mismatches throw ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// 64-bit FNV-1a of the canonical text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

}  // namespace parametrix::cli
