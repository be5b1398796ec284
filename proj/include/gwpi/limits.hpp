#pragma once

#include <cstdint>
#include <vector>

#include "gwpi/distributions.hpp"
#include "gwpi/rng.hpp"
#include "gwpi/stats.hpp"

namespace gwpi {

/// One joint draw of the limiting clan configuration: a count of old clans
/// with exponential masses, and an independent immigration measure.
struct LimitSample {
  int n_clans = 0;
  std::vector<double> clan_masses;
  PointMeasure immigration_measure;
};

/// (sum w_i^2 + <f^2, W>) / (sum w_i + <f, W>)^2. Throws EmptySample when
/// there are no clans and no atoms.
double phi_integrand(const LimitSample& sample);

/// Draws N ~ negative binomial(gamma, u), N exponential masses with mean
/// sigma2 / 2, and W from `sampler`. Pass u = 0 to force N = 0.
LimitSample sample_limit(const ModelParams& params, double u,
                         const ImmigrationMeasureSampler& sampler, Rng& rng);

inline constexpr double kDefaultEpsilon = 1e-6;

struct MonteCarloOptions {
  std::uint64_t draws = 100'000;
  double epsilon = kDefaultEpsilon;
  std::uint64_t seed = 42;
  int threads = 1;
};

/// Monte Carlo limit estimate with its truncation diagnostics.
struct LimitEstimate {
  EstimateWithCI estimate;
  std::uint64_t draws = 0;
  double epsilon = 0.0;
  double bias_bound = 0.0;  ///< gamma * epsilon bound on the discarded E<f, W>
  std::uint64_t resample_count = 0;
};

/// E phi(N_u, W) for 0 < u < 1.
LimitEstimate limit_pairwise(double u, const ModelParams& params, const MonteCarloOptions& options);

/// E[<f^2, W> / <f, W>^2]; empty truncated realizations are redrawn and counted.
LimitEstimate limit_pairwise_finite(const ModelParams& params, const MonteCarloOptions& options);

/// (1 - u)^gamma.
double limit_tau(double u, double gamma);

/// Gamma(shape gamma, rate 2 / sigma2) CDF and density.
double gamma_limit_cdf(double t, const ModelParams& params);
double gamma_limit_pdf(double t, const ModelParams& params);

/// E[sum eta_i^2 / (sum eta_i)^2] with N geometric on {1, 2, ...},
/// P(N = k) = (1 - u) u^(k-1), and eta_i exponential with mean sigma2 / 2.
LimitEstimate limit_plain_pairwise(double u, double sigma2, const MonteCarloOptions& options);

/// Draw of the geometric clan count N_u on {1, 2, ...}.
int sample_plain_clan_count(double u, Rng& rng);

/// (1 - u) (sum of the N_u-clan masses + <f, W>): one draw of the rescaled
/// decomposition of the population size.
double sample_rescaled_population(const ModelParams& params, double u,
                                  const ImmigrationMeasureSampler& sampler, Rng& rng);

}  // namespace gwpi
