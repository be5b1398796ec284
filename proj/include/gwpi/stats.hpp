#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace gwpi {

/// Monte Carlo estimate with its standard error.
struct EstimateWithCI {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t n_effective = 0;   ///< replicates that contributed
  double conditioning_rate = 1.0;  ///< fraction satisfying the conditioning event
};

/// Sufficient statistics for E[Y | S] estimated as sum(Y S) / sum(S), with a
/// delta-method standard error. Unconditional means use S = 1 throughout.
/// Merging is associative; results depend only on the multiset of sums.
class RatioAccumulator {
 public:
  void add(double y, bool selected);
  void add(double y) { add(y, true); }
  void merge(const RatioAccumulator& other);

  std::uint64_t count() const noexcept { return count_; }
  std::uint64_t selected() const noexcept { return selected_; }
  EstimateWithCI estimate() const;

 private:
  std::uint64_t count_ = 0;
  std::uint64_t selected_ = 0;
  double sum_y_ = 0.0;   // sum over selected of y
  double sum_y2_ = 0.0;  // sum over selected of y^2
};

/// Sup-norm distance between the empirical CDF of `samples` and `cdf`.
/// Ties are handled as jumps of the empirical CDF. Throws DomainError on
/// fewer than two samples.
double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

struct Verdict {
  std::string name;
  bool pass = false;
  double empirical = 0.0;
  double empirical_stderr = 0.0;
  double reference = 0.0;
  double reference_stderr = 0.0;
  double slack = 0.0;
  double allowance = 0.0;  ///< 3 * combined stderr + slack
};

/// PASS when |empirical - reference| <= 3 * sqrt(se_e^2 + se_r^2) + slack.
Verdict compare(const EstimateWithCI& empirical, const EstimateWithCI& reference, double slack,
                std::string name = {});
Verdict compare(const EstimateWithCI& empirical, double exact_reference, double slack,
                std::string name = {});

/// PASS when value <= threshold (distances and upper bounds).
Verdict at_most(double value, double threshold, std::string name = {});

}  // namespace gwpi
