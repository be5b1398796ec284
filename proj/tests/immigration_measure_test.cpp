#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gwpi/distributions.hpp"
#include "gwpi/errors.hpp"
#include "gwpi/stats.hpp"

using namespace gwpi;

namespace {

ModelParams default_params() {
  return validate_model(std::vector<double>{0.5, 0.0, 0.5}, std::vector<double>{0.5, 0.5});
}

// Integral of e^{-t}/t over [a, b] after t = e^s, which makes the integrand smooth.
double log_integral(double a, double b) {
  auto f = [](double s) { return std::exp(-std::exp(s)); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, std::log(a), std::log(b),
                                                                        20, 1e-14);
}

}  // namespace

TEST(ImmigrationMeasure, RejectsNonPositiveTruncation) {
  const auto p = default_params();
  Rng rng = stream_rng(0, 0);
  EXPECT_THROW(sample_W(p, 0.0, rng), DomainError);
  EXPECT_THROW(sample_W(p, -1e-3, rng), DomainError);
  EXPECT_THROW(ImmigrationMeasureSampler(0.0, 1.0, 1e-6), DomainError);
}

TEST(ImmigrationMeasure, TableCdfMatchesQuadrature) {
  for (double sigma2 : {1.0, 2.0}) {
    const double eps = 1e-6;
    const ImmigrationMeasureSampler sampler(1.0, sigma2, eps);
    const double x_min = 2.0 * eps / sigma2;
    const double total = log_integral(x_min, 80.0);
    for (double r : {1e-5, 1e-3, 0.01, 0.1, 0.5, 1.0, 3.0, 10.0}) {
      const double x = 2.0 * r / sigma2;
      const double expected = log_integral(x_min, x) / total;
      EXPECT_NEAR(sampler.table_cdf(r), expected, 1e-6) << "r=" << r << " sigma2=" << sigma2;
    }
    EXPECT_NEAR(sampler.expected_atoms(), total, 1e-9 * total);
  }
}

TEST(ImmigrationMeasure, AtomsLieAboveTruncation) {
  const auto p = default_params();
  const ImmigrationMeasureSampler sampler(p.gamma, p.sigma2, 1e-4);
  Rng rng = stream_rng(3, 0);
  for (int i = 0; i < 2000; ++i) {
    const auto w = sampler.sample(rng);
    for (double a : w.atoms) ASSERT_GT(a, 1e-4);
  }
}

TEST(ImmigrationMeasure, MeanAtomCountMatchesIntensity) {
  const ImmigrationMeasureSampler sampler(1.0, 1.0, 1e-6);
  Rng rng = stream_rng(4, 0);
  RatioAccumulator count;
  for (int i = 0; i < 50'000; ++i) count.add(static_cast<double>(sampler.sample(rng).atoms.size()));
  const auto e = count.estimate();
  EXPECT_NEAR(e.value, sampler.expected_atoms(), 3.0 * e.std_error);
}

TEST(ImmigrationMeasure, TotalMassIsGammaDistributed) {
  struct Case {
    std::vector<double> offspring;
    std::vector<double> immigration;
  };
  const auto geo = DiscreteLaw::truncated_geometric(0.5, 80);
  const std::vector<Case> cases{
      {{0.5, 0.0, 0.5}, {0.5, 0.5}},
      {std::vector<double>(geo.pmf().begin(), geo.pmf().end()), {0.5, 0.5}},
  };
  std::uint64_t stream = 0;
  for (const auto& c : cases) {
    const auto p = validate_model(c.offspring, c.immigration);
    const ImmigrationMeasureSampler sampler(p.gamma, p.sigma2, 1e-6);
    Rng rng = stream_rng(5, stream++);
    std::vector<double> sums;
    RatioAccumulator mean;
    for (int i = 0; i < 100'000; ++i) {
      sums.push_back(sampler.sample(rng).sum());
      mean.add(sums.back());
    }
    const auto e = mean.estimate();
    EXPECT_NEAR(e.value, p.gamma * p.sigma2 / 2.0, 3.0 * e.std_error + sampler.sum_bias_bound());
    const boost::math::gamma_distribution<double> limit(p.gamma, p.sigma2 / 2.0);
    const double ks = ks_distance(sums, [&](double t) { return boost::math::cdf(limit, t); });
    EXPECT_LE(ks, 0.01) << "gamma=" << p.gamma;
  }
}

TEST(ImmigrationMeasure, TruncationBiasWithinBudget) {
  const double budget = 1e-5;
  const ImmigrationMeasureSampler sampler(1.0, 1.0, 1e-6);
  EXPECT_LE(sampler.sum_bias(), sampler.sum_bias_bound());
  EXPECT_LE(sampler.sum_bias_bound(), budget);
  // Exact discarded mean: gamma sigma2/2 (1 - exp(-2 eps / sigma2)).
  EXPECT_NEAR(sampler.sum_bias(), 0.5 * -std::expm1(-2e-6), 1e-18);
  EXPECT_NEAR(sampler.sum_squares_bias_bound(), 0.5e-12, 1e-24);
}

TEST(ImmigrationMeasure, RestrictionMatchesCoarserTruncationInLaw) {
  const ImmigrationMeasureSampler fine(1.0, 1.0, 1e-6);
  const ImmigrationMeasureSampler coarse(1.0, 1.0, 1e-2);
  Rng a = stream_rng(6, 0);
  Rng b = stream_rng(6, 1);
  std::vector<double> restricted, direct;
  for (int i = 0; i < 40'000; ++i) {
    restricted.push_back(fine.sample(a).restricted_above(1e-2).sum());
    direct.push_back(coarse.sample(b).sum());
  }
  EXPECT_LE(ks_two_sample(restricted, direct), 0.015);
}

TEST(ImmigrationMeasure, SameSeedSameAtoms) {
  const auto p = default_params();
  Rng a = stream_rng(9, 2);
  Rng b = stream_rng(9, 2);
  for (int i = 0; i < 100; ++i) {
    const auto wa = sample_W(p, 1e-6, a);
    const auto wb = sample_W(p, 1e-6, b);
    ASSERT_EQ(wa.atoms, wb.atoms);
  }
}

TEST(PointMeasure, ScalingAndSums) {
  PointMeasure w;
  w.atoms = {1.0, 2.0, 0.5};
  w.truncation_epsilon = 0.1;
  EXPECT_DOUBLE_EQ(w.sum(), 3.5);
  EXPECT_DOUBLE_EQ(w.sum_squares(), 5.25);
  const auto s = w.scaled(2.0);
  EXPECT_DOUBLE_EQ(s.sum(), 7.0);
  EXPECT_DOUBLE_EQ(s.truncation_epsilon, 0.2);
  EXPECT_EQ(w.restricted_above(0.75).atoms.size(), 2u);
}
