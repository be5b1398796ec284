#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace gwpi {

/// Effective experiment configuration. Every CLI flag has a field here.
struct ExperimentConfig {
  std::vector<double> offspring{0.5, 0.0, 0.5};
  std::vector<double> immigration{0.5, 0.5};
  int n = 256;
  std::uint64_t replicates = 20'000;
  std::vector<double> u_grid{0.1, 0.25, 0.5, 0.75, 0.9};
  std::vector<int> n_grid{64, 128, 256};
  std::uint64_t seed = 42;
  double epsilon = 1e-6;
  double slack = 0.03;
  std::uint64_t mc_draws = 100'000;
  std::uint64_t particle_cap = 100'000'000;
  std::uint64_t history_cap = 20'000'000;
  int threads = 1;
  std::string output_dir = "out";

  /// Echo for reports. Leaves out threads and output_dir so that reports
  /// depend only on the inputs that change results.
  nlohmann::json to_json() const;
};

/// Command-line overrides; unset fields keep the file values.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> n;
  std::optional<std::uint64_t> replicates;
  std::optional<std::vector<double>> u_grid;
  std::optional<double> epsilon;
  std::optional<double> slack;
  std::optional<std::string> output_dir;
  std::optional<int> threads;
};

/// Environment variable consulted when neither the file nor the flags give a seed.
inline constexpr const char* kSeedEnvironmentVariable = "GWPI_SEED";

/// Parses a JSON document. Syntax errors report line and column; field
/// errors name the field. Unknown fields are rejected. Throws ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Applies overrides, the seed fallback chain and range checks.
/// `seed_in_file` tells whether the document set a seed.
ExperimentConfig finalize_config(ExperimentConfig config, const ConfigOverrides& overrides,
                                 bool seed_in_file);

}  // namespace gwpi
