#include "gwpi/distributions.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "gwpi/errors.hpp"

namespace gwpi {

namespace {

void check_pmf(std::span<const double> pmf, const char* name) {
  if (pmf.empty()) {
    throw NotAProbability(std::string(name) + " pmf is empty");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < pmf.size(); ++j) {
    if (!(pmf[j] >= 0.0) || !std::isfinite(pmf[j])) {
      throw NotAProbability(std::string(name) + " pmf entry " + std::to_string(j) +
                            " is negative or not finite");
    }
    total += pmf[j];
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    char buf[128];
    std::snprintf(buf, sizeof buf, " pmf sums to %.17g, not 1", total);
    throw NotAProbability(std::string(name) + buf);
  }
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

DiscreteLaw::DiscreteLaw(std::vector<double> pmf) : pmf_(std::move(pmf)) {
  check_pmf(pmf_, "law");
  build_cdf();
}

DiscreteLaw DiscreteLaw::unchecked(std::vector<double> pmf) {
  DiscreteLaw law;
  law.pmf_ = std::move(pmf);
  law.build_cdf();
  return law;
}

DiscreteLaw DiscreteLaw::truncated_geometric(double ratio, std::size_t max_count) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw DomainError("geometric ratio must lie in (0,1)");
  }
  std::vector<double> pmf(max_count + 1);
  for (std::size_t j = 0; j <= max_count; ++j) {
    pmf[j] = (1.0 - ratio) * std::pow(ratio, static_cast<double>(j));
  }
  const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
  for (double& p : pmf) p /= total;
  return DiscreteLaw(std::move(pmf));
}

void DiscreteLaw::build_cdf() {
  cdf_.resize(pmf_.size());
  std::partial_sum(pmf_.begin(), pmf_.end(), cdf_.begin());
}

double DiscreteLaw::mean() const noexcept {
  double m = 0.0;
  for (std::size_t j = 1; j < pmf_.size(); ++j) m += static_cast<double>(j) * pmf_[j];
  return m;
}

double DiscreteLaw::second_moment() const noexcept {
  double m = 0.0;
  for (std::size_t j = 1; j < pmf_.size(); ++j) {
    const double jj = static_cast<double>(j);
    m += jj * jj * pmf_[j];
  }
  return m;
}

double DiscreteLaw::pgf(double s) const {
  if (!(s >= 0.0 && s <= 1.0)) throw DomainError("pgf argument outside [0,1]");
  double acc = 0.0;
  for (auto it = pmf_.rbegin(); it != pmf_.rend(); ++it) acc = acc * s + *it;
  return acc;
}

double DiscreteLaw::pgf_derivative(double s) const {
  if (!(s >= 0.0 && s <= 1.0)) throw DomainError("pgf argument outside [0,1]");
  double acc = 0.0;
  for (std::size_t j = pmf_.size(); j-- > 1;) acc = acc * s + static_cast<double>(j) * pmf_[j];
  return acc;
}

int DiscreteLaw::sample(Rng& rng) const noexcept {
  const double u = uniform01(rng);
  const std::size_t last = cdf_.size() - 1;
  for (std::size_t j = 0; j < last; ++j) {
    if (u < cdf_[j]) return static_cast<int>(j);
  }
  return static_cast<int>(last);
}

std::string ModelParams::hash() const {
  std::string s = "p";
  char buf[32];
  for (double p : offspring.pmf()) {
    std::snprintf(buf, sizeof buf, ":%.17g", p);
    s += buf;
  }
  s += "|b";
  for (double b : immigration.pmf()) {
    std::snprintf(buf, sizeof buf, ":%.17g", b);
    s += buf;
  }
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(s)));
  return buf;
}

ModelParams make_params_unchecked(DiscreteLaw offspring, DiscreteLaw immigration) {
  ModelParams params;
  params.m = offspring.mean();
  params.sigma2 = offspring.second_moment() - 1.0;
  params.beta = immigration.mean();
  params.gamma = params.sigma2 > 0.0 ? 2.0 * params.beta / params.sigma2 : 0.0;
  params.offspring = std::move(offspring);
  params.immigration = std::move(immigration);
  return params;
}

void validate_critical_offspring(const DiscreteLaw& offspring) {
  check_pmf(offspring.pmf(), "offspring");
  const double m = offspring.mean();
  if (std::abs(m - 1.0) > kCriticalityTolerance) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "offspring mean %.12g differs from 1", m);
    throw NotCritical(buf);
  }
  const double low = offspring[0] + offspring[1];
  if (!(low > 0.0 && low < 1.0)) {
    throw DegenerateOffspring("p_0 + p_1 must lie strictly between 0 and 1");
  }
}

ModelParams validate_model(std::span<const double> offspring_pmf,
                           std::span<const double> immigration_pmf) {
  check_pmf(offspring_pmf, "offspring");
  check_pmf(immigration_pmf, "immigration");
  DiscreteLaw offspring({offspring_pmf.begin(), offspring_pmf.end()});
  DiscreteLaw immigration({immigration_pmf.begin(), immigration_pmf.end()});
  validate_critical_offspring(offspring);
  if (immigration[0] >= 1.0) throw NoImmigration("b_0 = 1, no immigrant ever arrives");
  ModelParams params = make_params_unchecked(std::move(offspring), std::move(immigration));
  if (!(params.sigma2 > 0.0) || !(params.beta > 0.0) || !(params.gamma > 0.0)) {
    throw DegenerateOffspring("derived constants sigma2, beta, gamma must be positive");
  }
  return params;
}

double pgf_eval(const DiscreteLaw& law, double s) { return law.pgf(s); }

double pgf_derivative(const DiscreteLaw& law, double s) { return law.pgf_derivative(s); }

int sample_count(const DiscreteLaw& law, Rng& rng) { return law.sample(rng); }

double negative_binomial_pmf(double gamma, double u, int k) {
  if (!(gamma > 0.0) || !(u > 0.0 && u < 1.0) || k < 0) {
    throw DomainError("negative binomial requires gamma > 0, 0 < u < 1, k >= 0");
  }
  const double kk = static_cast<double>(k);
  return std::exp(std::lgamma(gamma + kk) - std::lgamma(gamma) - std::lgamma(kk + 1.0) +
                  gamma * std::log1p(-u) + kk * std::log(u));
}

int sample_negative_binomial(double gamma, double u, Rng& rng) {
  if (!(gamma > 0.0) || !(u > 0.0 && u < 1.0)) {
    throw DomainError("negative binomial requires gamma > 0 and 0 < u < 1");
  }
  std::gamma_distribution<double> mixing(gamma, u / (1.0 - u));
  const double rate = mixing(rng);
  if (!(rate > 0.0)) return 0;
  std::poisson_distribution<int> count(rate);
  return count(rng);
}

double PointMeasure::sum() const noexcept {
  return std::accumulate(atoms.begin(), atoms.end(), 0.0);
}

double PointMeasure::sum_squares() const noexcept {
  double s = 0.0;
  for (double r : atoms) s += r * r;
  return s;
}

PointMeasure PointMeasure::restricted_above(double epsilon) const {
  PointMeasure out;
  out.truncation_epsilon = std::max(epsilon, truncation_epsilon);
  for (double r : atoms) {
    if (r > epsilon) out.atoms.push_back(r);
  }
  return out;
}

PointMeasure PointMeasure::scaled(double c) const {
  PointMeasure out{atoms, truncation_epsilon * c};
  for (double& r : out.atoms) r *= c;
  return out;
}

}  // namespace gwpi
