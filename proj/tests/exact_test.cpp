#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include <nlohmann/json.hpp>

#include "gwpi/distributions.hpp"
#include "gwpi/errors.hpp"
#include "gwpi/exact.hpp"

using namespace gwpi;

namespace {

ModelParams default_params() {
  return validate_model(std::vector<double>{0.5, 0.0, 0.5}, std::vector<double>{0.5, 0.5});
}

ModelParams uniform_params() {
  return validate_model(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3},
                        std::vector<double>{0.25, 0.5, 0.25});
}

DiscreteLaw geometric_offspring() { return DiscreteLaw::truncated_geometric(0.5, 200); }

}  // namespace

TEST(Survival, GeometricOffspringHasHarmonicSurvival) {
  // Untruncated geometric(1/2) offspring gives q_n = 1/(n + 1); the truncated
  // law differs by 2^-201.
  const auto s = iterate_survival(geometric_offspring(), 100);
  EXPECT_DOUBLE_EQ(s.q[0], 1.0);
  EXPECT_NEAR(s.q[5], 1.0 / 6.0, 1e-12);
  for (int n = 0; n <= 100; ++n) EXPECT_NEAR(s.q[static_cast<std::size_t>(n)], 1.0 / (n + 1), 1e-12);
}

TEST(Survival, KolmogorovAsymptotics) {
  const auto p = default_params();
  const auto s = iterate_survival(p.offspring, 10'000);
  EXPECT_NEAR(10'000 * s.q[10'000], 2.0 / p.sigma2, 0.02 * 2.0 / p.sigma2);
  for (std::size_t j = 1; j < s.q.size(); ++j) {
    ASSERT_LT(s.q[j], s.q[j - 1]);
    ASSERT_GT(s.q[j], 0.0);
  }
}

TEST(SingleClanBound, HandValues) {
  const auto p = default_params();
  EXPECT_DOUBLE_EQ(single_clan_bound_series(p, 1)[0], 0.5);
  // n = 1: B(a_0) B'(a_1) q_1 + B'(a_0) q_0 B(a_1), a_0 = 0, a_1 = 1/2.
  EXPECT_DOUBLE_EQ(single_clan_bound(p, 1), 0.5 * 0.5 * 0.5 + 0.5 * 1.0 * 0.75);
}

TEST(SingleClanBound, SeriesAgreesAndIsNonincreasing) {
  for (const auto& p : {default_params(), uniform_params()}) {
    const auto series = single_clan_bound_series(p, 10'000);
    ASSERT_EQ(series.size(), 10'001u);
    const auto survival = iterate_survival(p.offspring, 10'000);
    for (int n : {1, 2, 3, 17, 256, 10'000}) {
      EXPECT_NEAR(series[static_cast<std::size_t>(n)], single_clan_bound(p, survival, n), 1e-14);
    }
    for (std::size_t n = 2; n < series.size(); ++n) {
      ASSERT_GT(series[n], 0.0);
      ASSERT_LE(series[n], series[n - 1] + 1e-15) << "n=" << n;
    }
  }
}

TEST(SingleClanBound, HandlesNoImmigrantMassAtZero) {
  // b_0 = 0: the product form must not divide by B(a_j).
  const auto p = validate_model(std::vector<double>{0.5, 0.0, 0.5}, std::vector<double>{0.0, 1.0});
  const double b = single_clan_bound(p, 1);
  // Two immigrants (one per generation); exactly one line survives to 1.
  // Generation-0 line survives w.p. 1/2, the new one always does.
  EXPECT_DOUBLE_EQ(b, 0.5);
  EXPECT_TRUE(std::isfinite(single_clan_bound(p, 50)));
}

TEST(Enumeration, OneGenerationByHand) {
  const auto t = enumerate_tiny(default_params(), 1);
  EXPECT_NEAR(t.total_probability, 1.0, 1e-15);
  EXPECT_NEAR(t.final_size_pmf.at(0), 3.0 / 8, 1e-15);
  EXPECT_NEAR(t.final_size_pmf.at(1), 3.0 / 8, 1e-15);
  EXPECT_NEAR(t.final_size_pmf.at(2), 1.0 / 8, 1e-15);
  EXPECT_NEAR(t.final_size_pmf.at(3), 1.0 / 8, 1e-15);
  EXPECT_NEAR(t.pairwise_finite, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(exact_pairwise_prob(t, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(t.total_coalescence_cdf[0], 0.2, 1e-15);
  EXPECT_NEAR(t.total_coalescence_cdf[1], 0.8, 1e-15);
  EXPECT_NEAR(t.oldest_clan_tail[1], t.final_size_pmf.at(0), 1e-15);
  EXPECT_NEAR(t.single_clan, 0.5, 1e-15);
}

TEST(Enumeration, MassSumsToOne) {
  for (const auto& p : {default_params(), uniform_params()}) {
    for (int n = 1; n <= 2; ++n) {
      const auto t = enumerate_tiny(p, n);
      EXPECT_NEAR(t.total_probability, 1.0, 1e-12);
      double sum = 0.0;
      for (const auto& [z, pr] : t.final_size_pmf) sum += pr;
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(Enumeration, ClanRatioEqualsPairWalk) {
  const std::vector<std::pair<ModelParams, int>> cases{
      {default_params(), 1}, {default_params(), 2}, {default_params(), 3},
      {uniform_params(), 1}, {uniform_params(), 2}};
  for (const auto& [p, n] : cases) {
    const auto t = enumerate_tiny(p, n);
    ASSERT_EQ(t.pairwise_window_ratio.size(), static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      EXPECT_NEAR(t.pairwise_window_ratio[static_cast<std::size_t>(k)],
                  t.pairwise_window_direct[static_cast<std::size_t>(k)], 1e-12);
      EXPECT_NO_THROW(exact_pairwise_prob(t, k));
    }
    // The window starting at 0 is the whole finite event.
    EXPECT_NEAR(t.pairwise_window_direct[0], t.pairwise_finite, 1e-12);
  }
}

TEST(Enumeration, SingleClanProbabilityIsTheBound) {
  for (const auto& p : {default_params(), uniform_params()}) {
    for (int n = 1; n <= 2; ++n) {
      const auto t = enumerate_tiny(p, n);
      EXPECT_NEAR(t.single_clan, single_clan_bound(p, n), 1e-12);
      EXPECT_LE(t.total_finite * t.p_positive, t.single_clan + 1e-15);
    }
  }
  const auto t3 = enumerate_tiny(default_params(), 3);
  EXPECT_NEAR(t3.single_clan, single_clan_bound(default_params(), 3), 1e-12);
}

TEST(Enumeration, HistoryCapRaisesExplosion) {
  try {
    enumerate_tiny(default_params(), 3, 100);
    FAIL() << "expected ExplosionError";
  } catch (const ExplosionError& e) {
    EXPECT_EQ(e.cap(), 100u);
  }
}

TEST(Enumeration, MatchesGoldenFiles) {
  const std::filesystem::path dir = GWPI_GOLDEN_DIR;
  int checked = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path());
    const auto golden = nlohmann::json::parse(in);
    const auto p = validate_model(golden["params"]["offspring"].get<std::vector<double>>(),
                                  golden["params"]["immigration"].get<std::vector<double>>());
    const auto t = enumerate_tiny(p, golden["n"].get<int>());
    const auto fresh = golden_json(p, t);
    EXPECT_EQ(fresh["histories"], golden["histories"]) << entry.path();
    for (const auto& [name, value] : golden["targets"].items()) {
      ASSERT_TRUE(fresh["targets"].contains(name)) << name;
      EXPECT_NEAR(fresh["targets"][name].get<double>(), value.get<double>(), 1e-12)
          << entry.path().filename() << " " << name;
    }
    ++checked;
  }
  EXPECT_GE(checked, 4);
}
