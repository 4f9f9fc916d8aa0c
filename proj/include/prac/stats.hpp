#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "prac/rng.hpp"

namespace prac {

double mean(std::span<const double> xs);
double sample_stddev(std::span<const double> xs);
// Half-width of the normal-approximation 95% confidence interval of the mean.
double ci95_halfwidth(std::span<const double> xs);

double quantile(std::vector<double> xs, double q);  // q in [0,1], sorts a copy

// Pearson chi-square statistic for observed counts against expected counts.
double chi2_statistic(std::span<const double> observed, std::span<const double> expected);

// Upper critical value of the chi-square distribution via the
// Wilson-Hilferty cube approximation. alpha is the right-tail mass.
double chi2_critical(std::size_t dof, double alpha);

// One-sided paired bootstrap: estimates the confidence that
// mean(hi) - mean(lo) > 0 by resampling the per-trial differences.
// Returns the fraction of resampled means that are strictly positive.
double bootstrap_confidence_greater(std::span<const double> hi, std::span<const double> lo,
                                    std::size_t resamples, uint64_t seed);

}  // namespace prac
