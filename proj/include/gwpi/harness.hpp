#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gwpi/config.hpp"
#include "gwpi/distributions.hpp"
#include "gwpi/limits.hpp"
#include "gwpi/stats.hpp"

namespace gwpi {

inline constexpr const char* kReportVersion = "gwpi-report/1";

/// k = round(u n), clamped to [0, n - 1].
int cut_generation(double u, int n);

struct Target {
  std::string name;
  double u = std::numeric_limits<double>::quiet_NaN();
  int k = -1;
  EstimateWithCI estimate;
};

struct RunOptions {
  int n = 256;
  std::uint64_t replicates = 20'000;
  std::vector<double> u_grid{0.1, 0.25, 0.5, 0.75, 0.9};
  std::uint64_t seed = 42;
  int threads = 1;
  double slack = 0.03;
  std::uint64_t particle_cap = 100'000'000;
};

/// Finite-n estimates for one (params, n). Targets are looked up by name:
///   window_ratio / window_pair   P(k <= X_n < n | Z_n > 1), per u
///   finite_ratio / finite_pair   P(X_n < inf | Z_n > 1)
///   total_finite                 P(A_n < inf | Z_n > 0)
///   oldest_clan_tail             P(tau_n > k), per u
///   single_clan                  P(exactly one clan survives)
///   positive, more_than_one      P(Z_n > 0), P(Z_n > 1)
///   scaled_size                  E[Z_n / n]
struct FiniteNResult {
  RunOptions options;
  std::vector<Target> targets;
  std::vector<double> scaled_sizes;  ///< Z_n / n in replicate order
  double ks_gamma = 0.0;             ///< KS distance of Z_n / n to the Gamma limit
  double single_clan_bound = 0.0;
  std::vector<Verdict> verdicts;

  const Target& target(const std::string& name, double u = std::numeric_limits<double>::quiet_NaN()) const;
};

FiniteNResult run_finite_n(const ModelParams& params, const RunOptions& options);

/// Single-ancestor baseline, conditioned by rejection:
///   pairwise_ratio / pairwise_pair   P(X_n >= k | Y_n >= 2), per u
///   total_tail                       P(A_n > k | Y_n >= 1), per u
///   survival                         P(Y_n > 0)
struct BaselineResult {
  RunOptions options;
  std::vector<Target> targets;
  const Target& target(const std::string& name, double u = std::numeric_limits<double>::quiet_NaN()) const;
};

BaselineResult run_plain_gw(const DiscreteLaw& offspring, const RunOptions& options);

struct LimitRow {
  double u = 0.0;
  LimitEstimate pairwise;
  double tau = 0.0;
};

struct LimitTable {
  std::vector<LimitRow> rows;
  LimitEstimate pairwise_finite;
  double epsilon = 0.0;
  double sum_bias_bound = 0.0;
  /// Mean of <f, W> over atoms in (epsilon/2, epsilon], from coupled draws
  /// truncated at epsilon/2: the shift caused by halving epsilon.
  double half_epsilon_shift = 0.0;
  double half_epsilon_shift_stderr = 0.0;
  /// Same shift for the finite-coalescence integrand.
  double half_epsilon_phi_shift = 0.0;
};

LimitTable run_limits(const ModelParams& params, const std::vector<double>& u_grid,
                      const MonteCarloOptions& options);

nlohmann::json params_json(const ModelParams& params);
nlohmann::json estimate_json(const EstimateWithCI& e);
nlohmann::json verdict_json(const Verdict& v);

/// Report JSON {version, seed, config, params, n, targets[], references, verdicts[]}.
nlohmann::json report_json(const ExperimentConfig& config, const ModelParams& params,
                           const FiniteNResult& result);
std::string report_csv(const ModelParams& params, const FiniteNResult& result);

nlohmann::json baseline_json(const BaselineResult& result, const ModelParams& params);

nlohmann::json limits_json(const ExperimentConfig& config, const ModelParams& params,
                           const LimitTable& table);
std::string limits_csv(const LimitTable& table);

struct Comparison {
  std::vector<Verdict> verdicts;
  bool all_pass() const;
};

/// Joins a finite-n report with a limit table. Throws SchemaError when the
/// params hashes differ or a required field is missing.
Comparison compare_report_to_limits(const nlohmann::json& report, const nlohmann::json& limits,
                                    double slack);
nlohmann::json comparison_json(const Comparison& c, double slack);
std::string comparison_csv(const Comparison& c);

}  // namespace gwpi
