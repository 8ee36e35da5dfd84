#pragma once

#include <span>
#include <vector>

namespace minerscope::stats {

double normal_cdf(double z);

/// Two-sided p-value of a standard-normal statistic.
double two_sided_p(double z);

/// Pooled two-proportion z statistic for independent samples x1/n1, x2/n2;
/// positive when the second proportion is larger.
double two_proportion_z(double x1, double n1, double x2, double n2);

/// z statistic for p2 = x2/n2 against p1 = x1/n1 when sample 2 is a
/// subset of sample 1. Under the null, Var(p2 - p1) = p(1-p)(1/n2 - 1/n1).
double nested_proportion_z(double x1, double n1, double x2, double n2);

/// Linear-interpolation (Hyndman-Fan type 7) quantile, q in [0, 1].
/// Sorts its argument. Returns NaN for empty input.
double quantile(std::vector<double> values, double q);

struct Interval {
    double low;
    double high;
};

/// 95% percentile interval (2.5 / 97.5).
Interval percentile_interval(std::vector<double> values, double level = 0.95);

double mean(std::span<const double> xs);

/// Pearson correlation; NaN when either series has zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

}  // namespace minerscope::stats
