#include "minerscope/succession.hpp"

#include "minerscope/error.hpp"
#include "minerscope/stats.hpp"

#include <cmath>
#include <numeric>

namespace minerscope {

std::uint64_t SuccessionMatrix::row_total(std::size_t i) const {
    const std::size_t n = order.size();
    return std::accumulate(counts.begin() + static_cast<std::ptrdiff_t>(i * n),
                           counts.begin() + static_cast<std::ptrdiff_t>((i + 1) * n), std::uint64_t{0});
}

double SuccessionMatrix::trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i) t += S(i, i);
    return t;
}

const char* to_string(Normalization n) { return n == Normalization::kBiased ? "biased" : "debiased"; }

const char* to_string(ZVariance v) { return v == ZVariance::kNested ? "nested" : "pooled"; }

kernels::PairCodes consecutive_pairs(const ChainDataset& dataset) {
    kernels::PairCodes pairs;
    pairs.n = dataset.miners.size();
    const auto& recs = dataset.records;
    int prev_idx = recs.empty() ? -1 : dataset.miner_index(recs.front().miner);
    for (std::size_t k = 1; k < recs.size(); ++k) {
        const int idx = dataset.miner_index(recs[k].miner);
        if (prev_idx >= 0 && idx >= 0 && recs[k].height == recs[k - 1].height + 1) {
            pairs.codes.push_back(static_cast<std::uint32_t>(prev_idx) * static_cast<std::uint32_t>(pairs.n) +
                                  static_cast<std::uint32_t>(idx));
        }
        prev_idx = idx;
    }
    return pairs;
}

SuccessionMatrix succession_from_pairs(std::vector<std::string> order, kernels::PairCodes pairs) {
    SuccessionMatrix sm;
    const std::size_t n = order.size();
    sm.order = std::move(order);
    pairs.n = n;
    sm.counts = kernels::count_pairs(pairs);
    sm.pairs = std::move(pairs);
    sm.S = SquareMatrix(n);
    sm.row_defined.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const auto total = sm.row_total(i);
        if (total == 0) continue;
        sm.row_defined[i] = true;
        for (std::size_t j = 0; j < n; ++j) {
            sm.S(i, j) = static_cast<double>(sm.count(i, j)) / static_cast<double>(total);
        }
    }
    return sm;
}

SuccessionMatrix succession_matrix(const ChainDataset& dataset) {
    if (dataset.records.size() < 2) throw DataError("succession matrix needs at least two retained blocks");
    return succession_from_pairs(dataset.miners, consecutive_pairs(dataset));
}

namespace {

AdvantageTestResult test_miner(const ChainDataset& dataset, const SuccessionMatrix& sm, std::size_t i,
                               ZVariance variance, double alpha) {
    AdvantageTestResult r;
    r.miner = dataset.miners[i];
    std::uint64_t x1 = 0;
    for (const auto& rec : dataset.records) {
        if (rec.miner == r.miner) ++x1;
    }
    r.n1 = dataset.retained_claimed_count();
    r.n2 = sm.row_total(i);
    if (r.n2 == 0) throw DataError("miner '" + r.miner + "' has no observed successor blocks");
    const auto x2 = sm.count(i, i);
    r.p1 = static_cast<double>(x1) / static_cast<double>(r.n1);
    r.p2 = static_cast<double>(x2) / static_cast<double>(r.n2);
    const auto fx1 = static_cast<double>(x1), fn1 = static_cast<double>(r.n1);
    const auto fx2 = static_cast<double>(x2), fn2 = static_cast<double>(r.n2);
    r.z = variance == ZVariance::kNested ? stats::nested_proportion_z(fx1, fn1, fx2, fn2)
                                         : stats::two_proportion_z(fx1, fn1, fx2, fn2);
    r.p_value = stats::two_sided_p(r.z);
    r.significant = r.p_value < alpha;
    return r;
}

}  // namespace

AdvantageTestResult advantage_test(const ChainDataset& dataset, const std::string& miner, ZVariance variance,
                                   double alpha) {
    const int idx = dataset.miner_index(miner);
    if (idx < 0) throw DataError("miner '" + miner + "' is not retained in the dataset");
    return test_miner(dataset, succession_matrix(dataset), static_cast<std::size_t>(idx), variance, alpha);
}

std::vector<AdvantageTestResult> advantage_tests(const ChainDataset& dataset, ZVariance variance, double alpha) {
    const auto sm = succession_matrix(dataset);
    std::vector<AdvantageTestResult> out;
    for (std::size_t i = 0; i < dataset.miners.size(); ++i) {
        if (sm.row_total(i) == 0) continue;
        out.push_back(test_miner(dataset, sm, i, variance, alpha));
    }
    return out;
}

NormalizedSuccession normalize(const SuccessionMatrix& S, std::span<const double> m, Normalization normalization) {
    const std::size_t n = S.size();
    if (m.size() != n) {
        throw DataError("normalization vector has " + std::to_string(m.size()) + " entries, matrix has " +
                        std::to_string(n));
    }
    for (double v : m) {
        if (!(v > 0.0)) throw DataError("normalization shares must be positive");
    }
    NormalizedSuccession ns;
    ns.order = S.order;
    ns.row_defined = S.row_defined;
    ns.m.assign(m.begin(), m.end());
    ns.normalization = normalization;
    ns.N = SquareMatrix(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            ns.N(i, j) = S.row_defined[i] ? S.S(i, j) / m[j] : std::nan("");
        }
    }
    return ns;
}

namespace {

void require_weights(const NormalizedSuccession& N, std::span<const double> P) {
    if (P.size() != N.order.size()) throw DataError("weight vector does not match the miner order");
    const double sum = std::accumulate(P.begin(), P.end(), 0.0);
    if (std::fabs(sum - 1.0) > 1e-9) throw DataError("weights must sum to 1");
    std::string missing;
    for (std::size_t i = 0; i < N.order.size(); ++i) {
        if (!N.row_defined[i]) missing += (missing.empty() ? "" : ", ") + N.order[i];
    }
    if (!missing.empty()) throw DataError("undefined succession rows (no successor blocks) for: " + missing);
}

}  // namespace

double distance_metric(const NormalizedSuccession& N, std::span<const double> P) {
    require_weights(N, P);
    double d = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) d += (N.N(i, i) - 1.0) * P[i];
    return d;
}

AdvantageMetric advantage_metric(const SuccessionMatrix& S, const NormalizedSuccession& N, std::span<const double> P,
                                 const BootstrapOptions& bootstrap) {
    AdvantageMetric out;
    out.normalization = N.normalization;
    out.D = distance_metric(N, P);

    const std::size_t n = S.size();
    const std::vector<double> weights(P.begin(), P.end());
    const std::vector<double> m = N.m;
    const auto samples = kernels::bootstrap_pairs(
        S.pairs, bootstrap.resamples, bootstrap.seed, 1,
        [n, weights, m](std::span<const std::uint64_t> counts, std::span<double> res) {
            double d = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                std::uint64_t row = 0;
                for (std::size_t j = 0; j < n; ++j) row += counts[i * n + j];
                if (row == 0) {
                    res[0] = std::nan("");
                    return;
                }
                const double sii = static_cast<double>(counts[i * n + i]) / static_cast<double>(row);
                d += (sii / m[i] - 1.0) * weights[i];
            }
            res[0] = d;
        });
    auto col = samples.column(0);
    out.resamples_used = col.size();
    const auto ci = stats::percentile_interval(std::move(col));
    out.ci_low = ci.low;
    out.ci_high = ci.high;
    return out;
}

}  // namespace minerscope
