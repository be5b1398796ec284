#include "gwpi/stats.hpp"

#include <algorithm>
#include <cmath>

#include "gwpi/errors.hpp"

namespace gwpi {

void RatioAccumulator::add(double y, bool selected) {
  ++count_;
  if (!selected) return;
  ++selected_;
  sum_y_ += y;
  sum_y2_ += y * y;
}

void RatioAccumulator::merge(const RatioAccumulator& other) {
  count_ += other.count_;
  selected_ += other.selected_;
  sum_y_ += other.sum_y_;
  sum_y2_ += other.sum_y2_;
}

EstimateWithCI RatioAccumulator::estimate() const {
  EstimateWithCI e;
  e.n_effective = selected_;
  e.conditioning_rate =
      count_ > 0 ? static_cast<double>(selected_) / static_cast<double>(count_) : 0.0;
  if (selected_ == 0) return e;
  const double s = static_cast<double>(selected_);
  const double mean = sum_y_ / s;
  e.value = mean;
  if (selected_ > 1) {
    // Delta method for sum(YS)/sum(S): Var ~ sum S (Y - R)^2 / (sum S)^2,
    // with the n/(n-1) correction this is the sample variance over sqrt(s).
    const double ss = std::max(0.0, sum_y2_ - s * mean * mean);
    e.std_error = std::sqrt(ss / (s - 1.0) / s);
  }
  return e;
}

double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.size() < 2) throw DomainError("ks_distance needs at least two samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < samples.size()) {
    std::size_t j = i;
    while (j < samples.size() && samples[j] == samples[i]) ++j;
    const double f = cdf(samples[i]);
    d = std::max({d, std::abs(static_cast<double>(j) / n - f),
                  std::abs(f - static_cast<double>(i) / n)});
    i = j;
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_two_sample needs nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    double x;
    if (j == b.size() || (i < a.size() && a[i] <= b[j])) {
      x = a[i];
    } else {
      x = b[j];
    }
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

Verdict compare(const EstimateWithCI& empirical, const EstimateWithCI& reference, double slack,
                std::string name) {
  Verdict v;
  v.name = std::move(name);
  v.empirical = empirical.value;
  v.empirical_stderr = empirical.std_error;
  v.reference = reference.value;
  v.reference_stderr = reference.std_error;
  v.slack = slack;
  v.allowance = 3.0 * std::hypot(empirical.std_error, reference.std_error) + slack;
  v.pass = std::abs(empirical.value - reference.value) <= v.allowance;
  return v;
}

Verdict compare(const EstimateWithCI& empirical, double exact_reference, double slack,
                std::string name) {
  EstimateWithCI ref;
  ref.value = exact_reference;
  return compare(empirical, ref, slack, std::move(name));
}

Verdict at_most(double value, double threshold, std::string name) {
  Verdict v;
  v.name = std::move(name);
  v.empirical = value;
  v.reference = threshold;
  v.allowance = 0.0;
  v.pass = value <= threshold;
  return v;
}

}  // namespace gwpi
