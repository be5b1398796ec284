#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <boost/math/special_functions/expint.hpp>

#include "gwpi/distributions.hpp"
#include "gwpi/errors.hpp"

namespace gwpi {

namespace {

// Beyond this point E1(x) < 4e-24; table lookups past it fall back to Newton.
constexpr double kTableMaxX = 50.0;

double e1(double x) { return boost::math::expint(1, x); }

}  // namespace

ImmigrationMeasureSampler::ImmigrationMeasureSampler(double gamma, double sigma2, double epsilon)
    : gamma_(gamma), sigma2_(sigma2), epsilon_(epsilon) {
  if (!(epsilon > 0.0)) {
    throw DomainError("immigration measure needs epsilon > 0; total intensity diverges at 0");
  }
  if (!(gamma > 0.0) || !(sigma2 > 0.0)) {
    throw DomainError("immigration measure needs gamma > 0 and sigma2 > 0");
  }
  x_min_ = 2.0 * epsilon / sigma2;
  if (!(x_min_ < kTableMaxX)) throw DomainError("epsilon too large for the intensity table");
  tail_min_ = e1(x_min_);
  expected_atoms_ = gamma * tail_min_;

  log_x_.resize(kKnots);
  log_tail_.resize(kKnots);
  const double lo = std::log(x_min_);
  const double step = (std::log(kTableMaxX) - lo) / static_cast<double>(kKnots - 1);
  for (std::size_t i = 0; i < kKnots; ++i) {
    log_x_[i] = lo + step * static_cast<double>(i);
    log_tail_[i] = std::log(e1(std::exp(log_x_[i])));
  }
}

double ImmigrationMeasureSampler::position_from_tail(double tail) const {
  const double lt = std::log(tail);
  double x;
  if (lt >= log_tail_.front()) {
    x = x_min_;
  } else if (lt <= log_tail_.back()) {
    // Far tail: Newton on log E1(x) = lt, with d/dx log E1 = -exp(-x) / (x E1(x)).
    x = kTableMaxX;
    for (int it = 0; it < 60; ++it) {
      const double t = e1(x);
      const double step = (std::log(t) - lt) / (std::exp(-x) / (x * t));
      x += step;
      if (std::abs(step) < 1e-14 * x) break;
    }
  } else {
    // log_tail_ is decreasing; find the first knot strictly below lt.
    auto it = std::upper_bound(log_tail_.begin(), log_tail_.end(), lt, std::greater<double>());
    const std::size_t hi = static_cast<std::size_t>(it - log_tail_.begin());
    const std::size_t lo = hi - 1;
    const double w = (log_tail_[lo] - lt) / (log_tail_[lo] - log_tail_[hi]);
    x = std::exp(log_x_[lo] + w * (log_x_[hi] - log_x_[lo]));
  }
  return x * sigma2_ / 2.0;
}

double ImmigrationMeasureSampler::sample_position(Rng& rng) const {
  return position_from_tail(tail_min_ * uniform_open01(rng));
}

PointMeasure ImmigrationMeasureSampler::sample(Rng& rng) const {
  std::poisson_distribution<int> count(expected_atoms_);
  const int atoms = count(rng);
  PointMeasure w;
  w.truncation_epsilon = epsilon_;
  w.atoms.reserve(static_cast<std::size_t>(atoms));
  for (int i = 0; i < atoms; ++i) {
    w.atoms.push_back(std::max(sample_position(rng), std::nextafter(epsilon_, 1.0)));
  }
  return w;
}

double ImmigrationMeasureSampler::table_cdf(double r) const {
  const double x = 2.0 * r / sigma2_;
  if (x <= x_min_) return 0.0;
  if (x >= kTableMaxX) return 1.0 - e1(x) / tail_min_;
  const double lx = std::log(x);
  auto it = std::upper_bound(log_x_.begin(), log_x_.end(), lx);
  const std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - log_x_.begin()),
                                               kKnots - 1);
  const std::size_t lo = hi - 1;
  const double w = (lx - log_x_[lo]) / (log_x_[hi] - log_x_[lo]);
  const double lt = log_tail_[lo] + w * (log_tail_[hi] - log_tail_[lo]);
  return 1.0 - std::exp(lt) / tail_min_;
}

double ImmigrationMeasureSampler::sum_bias() const noexcept {
  return gamma_ * sigma2_ / 2.0 * -std::expm1(-x_min_);
}

double ImmigrationMeasureSampler::sum_squares_bias_bound() const noexcept {
  return gamma_ * epsilon_ * epsilon_ / 2.0;
}

PointMeasure sample_W(const ModelParams& params, double epsilon, Rng& rng) {
  return ImmigrationMeasureSampler(params.gamma, params.sigma2, epsilon).sample(rng);
}

}  // namespace gwpi
