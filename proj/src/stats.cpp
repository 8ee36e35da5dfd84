#include "minerscope/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace minerscope::stats {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double two_sided_p(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

double two_proportion_z(double x1, double n1, double x2, double n2) {
    const double p1 = x1 / n1;
    const double p2 = x2 / n2;
    const double pooled = (x1 + x2) / (n1 + n2);
    const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
    if (se == 0.0) return 0.0;
    return (p2 - p1) / se;
}

double nested_proportion_z(double x1, double n1, double x2, double n2) {
    const double p1 = x1 / n1;
    const double p2 = x2 / n2;
    const double inv = 1.0 / n2 - 1.0 / n1;
    const double se = std::sqrt(p1 * (1.0 - p1) * std::max(inv, 0.0));
    if (se == 0.0) return 0.0;
    return (p2 - p1) / se;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) return std::nan("");
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Interval percentile_interval(std::vector<double> values, double level) {
    const double tail = (1.0 - level) / 2.0;
    std::sort(values.begin(), values.end());
    return {quantile(values, tail), quantile(values, 1.0 - tail)};
}

double mean(std::span<const double> xs) {
    if (xs.empty()) return std::nan("");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t n = std::min(xs.size(), ys.size());
    if (n < 2) return std::nan("");
    const double mx = mean(xs.first(n));
    const double my = mean(ys.first(n));
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nan("");
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace minerscope::stats
