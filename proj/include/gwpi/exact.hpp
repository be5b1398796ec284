#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gwpi/distributions.hpp"

namespace gwpi {

/// Survival probabilities q_j = P(Y_j > 0) of the single-ancestor process,
/// by iterating q_{j+1} = 1 - F(1 - q_j) from q_0 = 1.
struct SurvivalTable {
  std::vector<double> q;  ///< q_0 .. q_n
  double extinct(std::size_t j) const { return 1.0 - q[j]; }  ///< a_j
};

SurvivalTable iterate_survival(const DiscreteLaw& offspring, int n);

/// Probability that exactly one immigrant clan has descendants at generation n:
/// [prod_k B(a_k)] [sum_j B'(a_j) / B(a_j) q_j], evaluated without dividing by
/// B(a_j) so that b_0 = 0 is handled. Upper-bounds P(A_n < inf, Z_n > 0).
double single_clan_bound(const ModelParams& params, int n);
double single_clan_bound(const ModelParams& params, const SurvivalTable& survival, int n);

/// All values n -> single_clan_bound(n) for n = 0..max_n in one O(max_n^2) pass.
std::vector<double> single_clan_bound_series(const ModelParams& params, int max_n);

inline constexpr std::uint64_t kDefaultHistoryCap = 20'000'000;

/// Exact laws obtained by walking every history of a tiny instance.
struct ExactTable {
  int n = 0;
  std::uint64_t histories = 0;
  double total_probability = 0.0;
  std::map<std::int64_t, double> final_size_pmf;  ///< P(Z_n = z)
  double p_more_than_one = 0.0;                   ///< P(Z_n > 1)
  double p_positive = 0.0;                        ///< P(Z_n > 0)
  /// P(k <= X_n < n | Z_n > 1), index k = 0..n-1, from the clan-size ratio.
  std::vector<double> pairwise_window_ratio;
  /// Same probabilities, from walking both parent chains of every pair.
  std::vector<double> pairwise_window_direct;
  double pairwise_finite = 0.0;  ///< P(X_n < inf | Z_n > 1), direct route
  /// P(A_n <= g | Z_n > 0), index g = 0..n.
  std::vector<double> total_coalescence_cdf;
  double total_finite = 0.0;  ///< P(A_n < inf | Z_n > 0)
  /// P(tau_n > k), index k = 0..n.
  std::vector<double> oldest_clan_tail;
  double single_clan = 0.0;  ///< P(exactly one immigrant clan survives to n)

  /// Named targets for golden files.
  std::map<std::string, double> targets() const;
};

ExactTable enumerate_tiny(const ModelParams& params, int n,
                          std::uint64_t history_cap = kDefaultHistoryCap);

/// P(k <= X_n < n | Z_n > 1) from the enumeration, cross-checked between the
/// clan-size ratio and the pair-walk definition. Throws Error if they differ
/// by more than 1e-12.
double exact_pairwise_prob(const ModelParams& params, int n, int k,
                           std::uint64_t history_cap = kDefaultHistoryCap);
double exact_pairwise_prob(const ExactTable& table, int k);

/// {params, n, targets: {name -> value}}
nlohmann::json golden_json(const ModelParams& params, const ExactTable& table);

}  // namespace gwpi
