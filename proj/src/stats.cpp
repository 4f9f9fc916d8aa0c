#include "prac/stats.hpp"

#include <algorithm>
#include <cmath>

#include "prac/errors.hpp"

namespace prac {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("mean of empty sample");
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_stddev(std::span<const double> xs) {
  if (xs.size() < 2) throw DomainError("stddev needs at least two samples");
  double m = mean(xs);
  double ss = 0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double ci95_halfwidth(std::span<const double> xs) {
  return 1.96 * sample_stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw DomainError("quantile of empty sample");
  std::sort(xs.begin(), xs.end());
  double pos = q * static_cast<double>(xs.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, xs.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return xs[lo] * (1 - frac) + xs[hi] * frac;
}

double chi2_statistic(std::span<const double> observed, std::span<const double> expected) {
  if (observed.size() != expected.size()) throw DomainError("chi2 size mismatch");
  double stat = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0) throw DomainError("chi2 expected count must be positive");
    double d = observed[i] - expected[i];
    stat += d * d / expected[i];
  }
  return stat;
}

double chi2_critical(std::size_t dof, double alpha) {
  if (dof == 0) throw DomainError("chi2 dof must be positive");
  // Inverse normal for the upper tail, Acklam-style rational approximation is
  // overkill here; the few alphas we use are tabulated.
  double zalpha;
  if (alpha == 0.01)
    zalpha = 2.3263478740;
  else if (alpha == 0.05)
    zalpha = 1.6448536270;
  else if (alpha == 0.001)
    zalpha = 3.0902323062;
  else
    throw DomainError("unsupported chi2 alpha");
  double k = static_cast<double>(dof);
  double t = 1.0 - 2.0 / (9.0 * k) + zalpha * std::sqrt(2.0 / (9.0 * k));
  return k * t * t * t;
}

double bootstrap_confidence_greater(std::span<const double> hi, std::span<const double> lo,
                                    std::size_t resamples, uint64_t seed) {
  if (hi.size() != lo.size() || hi.empty()) throw DomainError("paired samples required");
  std::vector<double> diff(hi.size());
  for (std::size_t i = 0; i < hi.size(); ++i) diff[i] = hi[i] - lo[i];

  Rng rng(seed);
  std::size_t positive = 0;
  for (std::size_t r = 0; r < resamples; ++r) {
    double s = 0;
    for (std::size_t i = 0; i < diff.size(); ++i)
      s += diff[rng.below(diff.size())];
    if (s > 0) ++positive;
  }
  return static_cast<double>(positive) / static_cast<double>(resamples);
}

}  // namespace prac
