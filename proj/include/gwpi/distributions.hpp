#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gwpi/rng.hpp"

namespace gwpi {

/// A finitely supported law on {0, 1, ..., J}. Entry j of `pmf()` is P(count = j).
class DiscreteLaw {
 public:
  DiscreteLaw() = default;
  /// Validates nonnegativity and unit mass (tolerance 1e-12).
  explicit DiscreteLaw(std::vector<double> pmf);

  /// (1-p) p^j truncated at `max_count` and renormalized.
  static DiscreteLaw truncated_geometric(double ratio, std::size_t max_count);
  /// Builds without validation (test fixtures and enumeration only).
  static DiscreteLaw unchecked(std::vector<double> pmf);

  std::span<const double> pmf() const noexcept { return pmf_; }
  double operator[](std::size_t j) const noexcept { return j < pmf_.size() ? pmf_[j] : 0.0; }
  std::size_t max_count() const noexcept { return pmf_.empty() ? 0 : pmf_.size() - 1; }

  double mean() const noexcept;
  double second_moment() const noexcept;

  /// Probability generating function. Throws DomainError unless 0 <= s <= 1.
  double pgf(double s) const;
  double pgf_derivative(double s) const;

  /// Inverse-CDF draw with one uniform per call.
  int sample(Rng& rng) const noexcept;

 private:
  std::vector<double> pmf_;
  std::vector<double> cdf_;
  void build_cdf();
};

/// Offspring and immigration laws together with the derived constants.
struct ModelParams {
  DiscreteLaw offspring;
  DiscreteLaw immigration;
  double m = 0.0;       ///< offspring mean
  double sigma2 = 0.0;  ///< offspring variance, sum_j (j^2 - 1) p_j
  double beta = 0.0;    ///< immigration mean
  double gamma = 0.0;   ///< 2 beta / sigma2

  /// Rate of the exponential clan masses and of the Gamma limit, 2 / sigma2.
  double mass_rate() const noexcept { return 2.0 / sigma2; }

  /// Stable identifier of the two laws, used to match reports and limit tables.
  std::string hash() const;
};

inline constexpr double kCriticalityTolerance = 1e-9;
inline constexpr double kMassTolerance = 1e-12;

/// Full validation of the critical model with immigration.
/// Throws NotAProbability, NotCritical, DegenerateOffspring or NoImmigration.
ModelParams validate_model(std::span<const double> offspring_pmf,
                           std::span<const double> immigration_pmf);

/// Derived constants without the criticality / immigration checks. Only for
/// structural tests that deliberately violate the model assumptions.
ModelParams make_params_unchecked(DiscreteLaw offspring, DiscreteLaw immigration);

/// Offspring-only validation used by the plain Galton-Watson baseline.
void validate_critical_offspring(const DiscreteLaw& offspring);

double pgf_eval(const DiscreteLaw& law, double s);
double pgf_derivative(const DiscreteLaw& law, double s);
int sample_count(const DiscreteLaw& law, Rng& rng);

/// P(N = k) for the negative binomial limit count with parameters (gamma, u):
/// Gamma(gamma + k) / (Gamma(gamma) k!) (1 - u)^gamma u^k.
double negative_binomial_pmf(double gamma, double u, int k);

/// Gamma-mixed Poisson draw: Poisson(L) with L ~ Gamma(shape gamma, rate (1-u)/u).
int sample_negative_binomial(double gamma, double u, Rng& rng);

/// Finite sample of the Poisson random measure with intensity
/// (gamma / r) exp(-2 r / sigma2) dr, restricted to (truncation_epsilon, inf).
struct PointMeasure {
  std::vector<double> atoms;
  double truncation_epsilon = 0.0;

  bool empty() const noexcept { return atoms.empty(); }
  double sum() const noexcept;          ///< <f, W> with f(r) = r
  double sum_squares() const noexcept;  ///< <f^2, W>

  /// Atoms above `epsilon`; equals a sample truncated at `epsilon` when
  /// epsilon >= truncation_epsilon.
  PointMeasure restricted_above(double epsilon) const;
  PointMeasure scaled(double c) const;
};

/// Sampler for the truncated immigration measure. Positions come from an
/// inverse-CDF table over the normalized restricted intensity.
class ImmigrationMeasureSampler {
 public:
  static constexpr std::size_t kKnots = 4096;

  /// Throws DomainError when epsilon <= 0, gamma <= 0 or sigma2 <= 0.
  ImmigrationMeasureSampler(double gamma, double sigma2, double epsilon);

  PointMeasure sample(Rng& rng) const;
  /// Single atom position from the normalized restricted intensity.
  double sample_position(Rng& rng) const;

  double epsilon() const noexcept { return epsilon_; }
  /// Expected number of atoms above epsilon: gamma * E1(2 epsilon / sigma2).
  double expected_atoms() const noexcept { return expected_atoms_; }
  /// Normalized restricted CDF at r, read from the interpolation table.
  double table_cdf(double r) const;

  /// E[<f, W>] discarded by the truncation, gamma sigma2/2 (1 - exp(-2 eps/sigma2)).
  double sum_bias() const noexcept;
  /// Upper bound on the discarded E[<f^2, W>], gamma eps^2 / 2.
  double sum_squares_bias_bound() const noexcept;
  /// Conservative bound gamma * eps on the discarded E[<f, W>].
  double sum_bias_bound() const noexcept { return gamma_ * epsilon_; }

 private:
  double gamma_;
  double sigma2_;
  double epsilon_;
  double x_min_;  // 2 eps / sigma2
  double tail_min_;  // E1(x_min)
  double expected_atoms_;
  std::vector<double> log_x_;     // log-spaced knots in x = 2 r / sigma2
  std::vector<double> log_tail_;  // log E1(x) at the knots, decreasing

  double position_from_tail(double tail) const;
};

/// Convenience wrapper that builds the table on every call.
PointMeasure sample_W(const ModelParams& params, double epsilon, Rng& rng);

}  // namespace gwpi
