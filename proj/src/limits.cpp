#include "gwpi/limits.hpp"

#include <cmath>
#include <random>

#include <boost/math/distributions/gamma.hpp>

#include "gwpi/errors.hpp"
#include "gwpi/parallel.hpp"

namespace gwpi {

namespace {

constexpr std::uint64_t kDrawsPerStream = 4096;

double exponential_mass(double mean, Rng& rng) {
  return -mean * std::log(uniform_open01(rng));
}

void check_u(double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("u must lie in (0,1)");
}

// Runs `draw(rng, resamples)` options.draws times over fixed-size streams and
// reduces in stream order.
template <typename Draw>
LimitEstimate run_draws(const MonteCarloOptions& options, Draw&& draw) {
  if (options.draws < 1) throw DomainError("mc_draws must be >= 1");
  struct Partial {
    RatioAccumulator acc;
    std::uint64_t resamples = 0;
  };
  const std::uint64_t streams = (options.draws + kDrawsPerStream - 1) / kDrawsPerStream;
  auto partials = parallel_map<Partial>(streams, options.threads, [&](std::size_t s) {
    Partial p;
    Rng rng = stream_rng(options.seed, s);
    const std::uint64_t begin = s * kDrawsPerStream;
    const std::uint64_t end = std::min(options.draws, begin + kDrawsPerStream);
    for (std::uint64_t i = begin; i < end; ++i) {
      const double value = draw(rng, p.resamples);
      if (!(value > 0.0 && value <= 1.0 + 1e-12)) {
        throw Error("phi integrand left (0,1]: " + std::to_string(value));
      }
      p.acc.add(value);
    }
    return p;
  });
  LimitEstimate out;
  RatioAccumulator total;
  for (const auto& p : partials) {
    total.merge(p.acc);
    out.resample_count += p.resamples;
  }
  out.estimate = total.estimate();
  out.draws = options.draws;
  out.epsilon = options.epsilon;
  return out;
}

}  // namespace

double phi_integrand(const LimitSample& sample) {
  double sum = sample.immigration_measure.sum();
  double squares = sample.immigration_measure.sum_squares();
  for (double w : sample.clan_masses) {
    sum += w;
    squares += w * w;
  }
  if (sample.n_clans == 0 && sample.immigration_measure.empty()) {
    throw EmptySample("no clans and no immigration atoms");
  }
  if (!(sum > 0.0)) throw EmptySample("total mass is zero");
  return squares / (sum * sum);
}

LimitSample sample_limit(const ModelParams& params, double u,
                         const ImmigrationMeasureSampler& sampler, Rng& rng) {
  LimitSample s;
  s.n_clans = u > 0.0 ? sample_negative_binomial(params.gamma, u, rng) : 0;
  const double mean = params.sigma2 / 2.0;
  s.clan_masses.reserve(static_cast<std::size_t>(s.n_clans));
  for (int i = 0; i < s.n_clans; ++i) s.clan_masses.push_back(exponential_mass(mean, rng));
  s.immigration_measure = sampler.sample(rng);
  return s;
}

LimitEstimate limit_pairwise(double u, const ModelParams& params,
                             const MonteCarloOptions& options) {
  check_u(u);
  const ImmigrationMeasureSampler sampler(params.gamma, params.sigma2, options.epsilon);
  auto out = run_draws(options, [&](Rng& rng, std::uint64_t& resamples) {
    LimitSample s = sample_limit(params, u, sampler, rng);
    while (s.n_clans == 0 && s.immigration_measure.empty()) {
      ++resamples;
      s.immigration_measure = sampler.sample(rng);
    }
    return phi_integrand(s);
  });
  out.bias_bound = sampler.sum_bias_bound();
  return out;
}

LimitEstimate limit_pairwise_finite(const ModelParams& params, const MonteCarloOptions& options) {
  const ImmigrationMeasureSampler sampler(params.gamma, params.sigma2, options.epsilon);
  auto out = run_draws(options, [&](Rng& rng, std::uint64_t& resamples) {
    LimitSample s;
    s.immigration_measure = sampler.sample(rng);
    while (s.immigration_measure.empty()) {
      ++resamples;
      s.immigration_measure = sampler.sample(rng);
    }
    return phi_integrand(s);
  });
  out.bias_bound = sampler.sum_bias_bound();
  return out;
}

double limit_tau(double u, double gamma) {
  if (!(u > 0.0 && u < 1.0) || !(gamma > 0.0)) {
    throw DomainError("limit_tau requires 0 < u < 1 and gamma > 0");
  }
  return std::pow(1.0 - u, gamma);
}

double gamma_limit_cdf(double t, const ModelParams& params) {
  if (!(t >= 0.0)) throw DomainError("gamma_limit_cdf requires t >= 0");
  const boost::math::gamma_distribution<double> law(params.gamma, 1.0 / params.mass_rate());
  return boost::math::cdf(law, t);
}

double gamma_limit_pdf(double t, const ModelParams& params) {
  if (!(t >= 0.0)) throw DomainError("gamma_limit_pdf requires t >= 0");
  const boost::math::gamma_distribution<double> law(params.gamma, 1.0 / params.mass_rate());
  return boost::math::pdf(law, t);
}

int sample_plain_clan_count(double u, Rng& rng) {
  check_u(u);
  std::geometric_distribution<int> failures(1.0 - u);
  return 1 + failures(rng);
}

LimitEstimate limit_plain_pairwise(double u, double sigma2, const MonteCarloOptions& options) {
  check_u(u);
  if (!(sigma2 > 0.0)) throw DomainError("sigma2 must be positive");
  const double mean = sigma2 / 2.0;
  auto out = run_draws(options, [&](Rng& rng, std::uint64_t&) {
    const int clans = sample_plain_clan_count(u, rng);
    double sum = 0.0;
    double squares = 0.0;
    for (int i = 0; i < clans; ++i) {
      const double eta = exponential_mass(mean, rng);
      sum += eta;
      squares += eta * eta;
    }
    return squares / (sum * sum);
  });
  return out;
}

double sample_rescaled_population(const ModelParams& params, double u,
                                  const ImmigrationMeasureSampler& sampler, Rng& rng) {
  check_u(u);
  const LimitSample s = sample_limit(params, u, sampler, rng);
  double total = s.immigration_measure.sum();
  for (double w : s.clan_masses) total += w;
  return (1.0 - u) * total;
}

}  // namespace gwpi
