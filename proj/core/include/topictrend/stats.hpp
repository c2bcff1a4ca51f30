#pragma once

#include <span>
#include <vector>

namespace topictrend::stats {

double normal_cdf(double x);
double normal_quantile(double p);
/// Upper tail P(X > x) for X ~ chi-square(df).
double chi2_sf(double x, double df);
/// Two-sided p-value for a t statistic with `df` degrees of freedom.
double t_two_sided_p(double t, double df);

double mean(std::span<const double> x);
/// Sample variance with n - 1 divisor.
double variance(std::span<const double> x);
double stddev(std::span<const double> x);
/// Linear-interpolation quantile (R type 7).
double quantile(std::vector<double> x, double q);

}  // namespace topictrend::stats
