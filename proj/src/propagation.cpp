#include "minerscope/propagation.hpp"

#include "minerscope/error.hpp"
#include "minerscope/stats.hpp"

#include <algorithm>
#include <cmath>

namespace minerscope {

LatencyEstimate latency(const ChainDataset& dataset, const BootstrapOptions& bootstrap) {
    const auto S = succession_matrix(dataset);
    for (std::size_t i = 0; i < S.size(); ++i) {
        if (!S.row_defined[i]) throw DataError("miner '" + S.order[i] + "' has no successor blocks");
    }
    LatencyEstimate est;
    est.avg_interval_min = chain_block_interval(dataset) / 60.0;
    est.latency_min = (S.trace() - 1.0) * est.avg_interval_min;

    const std::size_t n = S.size();
    const double t = est.avg_interval_min;
    const auto samples = kernels::bootstrap_pairs(
        S.pairs, bootstrap.resamples, bootstrap.seed, 1,
        [n, t](std::span<const std::uint64_t> counts, std::span<double> out) {
            double tr = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                std::uint64_t row = 0;
                for (std::size_t j = 0; j < n; ++j) row += counts[i * n + j];
                if (row == 0) {
                    out[0] = std::nan("");
                    return;
                }
                tr += static_cast<double>(counts[i * n + i]) / static_cast<double>(row);
            }
            out[0] = (tr - 1.0) * t;
        });
    auto col = samples.column(0);
    est.resamples_used = col.size();
    const auto ci = stats::percentile_interval(std::move(col));
    est.ci_low = ci.low;
    est.ci_high = ci.high;
    return est;
}

double orphan_rate_check(double latency, double interval) {
    if (!(interval > 0.0)) throw ConfigError("block interval must be positive");
    return 1.0 - std::exp(-latency / interval);
}

std::vector<std::uint64_t> uniform_edges(std::uint64_t width, std::uint64_t max_size) {
    if (width == 0) throw ConfigError("bin width must be positive");
    std::vector<std::uint64_t> edges{0};
    while (edges.back() <= max_size) edges.push_back(edges.back() + width);
    return edges;
}

namespace {

struct BinStat {
    std::size_t n;
    std::vector<std::size_t> used;
    std::vector<double> m;

    double operator()(std::span<const std::uint64_t> counts) const {
        double num = 0.0, den = 0.0;
        for (std::size_t i : used) {
            std::uint64_t row = 0;
            for (std::size_t j = 0; j < n; ++j) row += counts[i * n + j];
            if (row == 0) return std::nan("");
            const double sii = static_cast<double>(counts[i * n + i]) / static_cast<double>(row);
            num += (sii / m[i] - 1.0) * m[i];
            den += m[i];
        }
        return num / den;
    }
};

}  // namespace

EnvelopeCurve envelope_curve(const ChainDataset& dataset, std::span<const double> m, const EnvelopeOptions& options) {
    const std::size_t n = dataset.miners.size();
    if (m.size() != n) throw DataError("share vector does not match the miner order");
    auto edges = options.edges;
    if (edges.size() < 2) throw ConfigError("need at least two bin edges");
    for (std::size_t k = 1; k < edges.size(); ++k) {
        if (edges[k] <= edges[k - 1]) throw ConfigError("bin edges must be strictly increasing");
    }
    const auto& recs = dataset.records;
    std::uint64_t min_size = UINT64_MAX, max_size = 0;
    for (const auto& r : recs) {
        min_size = std::min(min_size, r.size);
        max_size = std::max(max_size, r.size);
    }
    // Extend the outer edges so the bins cover every observed size.
    if (!recs.empty() && edges.front() > min_size) edges.insert(edges.begin(), 0);
    if (!recs.empty() && edges.back() <= max_size) edges.push_back(max_size + 1);

    const std::size_t nbins = edges.size() - 1;
    std::vector<kernels::PairCodes> per_bin(nbins);
    for (auto& b : per_bin) b.n = n;
    int prev_idx = recs.empty() ? -1 : dataset.miner_index(recs.front().miner);
    for (std::size_t k = 1; k < recs.size(); ++k) {
        const int idx = dataset.miner_index(recs[k].miner);
        if (prev_idx >= 0 && idx >= 0 && recs[k].height == recs[k - 1].height + 1) {
            const auto size = recs[k - 1].size;
            const auto bin = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), size) -
                                                      edges.begin()) - 1;
            per_bin[bin].codes.push_back(static_cast<std::uint32_t>(prev_idx * static_cast<int>(n) + idx));
        }
        prev_idx = idx;
    }

    EnvelopeCurve curve;
    curve.bins.resize(nbins);
    std::vector<std::vector<double>> replicates(nbins);
    for (std::size_t b = 0; b < nbins; ++b) {
        auto& bin = curve.bins[b];
        bin.lo_bytes = edges[b];
        bin.hi_bytes = edges[b + 1];
        bin.pair_count = per_bin[b].codes.size();
        const auto counts = kernels::count_pairs(per_bin[b]);
        BinStat stat{n, {}, std::vector<double>(m.begin(), m.end())};
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t row = 0;
            for (std::size_t j = 0; j < n; ++j) row += counts[i * n + j];
            if (row >= options.min_pairs_per_miner && row > 0) stat.used.push_back(i);
        }
        bin.miners_used = stat.used.size();
        if (stat.used.empty()) continue;
        bin.defined = true;
        bin.D = stat(counts);
        const auto samples =
            kernels::bootstrap_pairs(per_bin[b], options.bootstrap.resamples,
                                     kernels::substream_seed(options.bootstrap.seed, b), 1,
                                     [&stat](std::span<const std::uint64_t> c, std::span<double> out) {
                                         out[0] = stat(c);
                                     });
        replicates[b].assign(samples.values.begin(), samples.values.end());
        const auto ci = stats::percentile_interval(samples.column(0));
        bin.ci_low = ci.low;
        bin.ci_high = ci.high;
    }

    for (std::size_t b = 0; b < nbins; ++b) {
        if (curve.bins[b].defined) {
            curve.baseline_bin = static_cast<int>(b);
            break;
        }
    }
    if (curve.baseline_bin < 0) throw DataError("no size bin has enough pairs to estimate the advantage");
    const auto base = static_cast<std::size_t>(curve.baseline_bin);
    const auto& baseline = curve.bins[base];
    curve.note = "baseline is the first non-empty bin [" + std::to_string(baseline.lo_bytes) + ", " +
                 std::to_string(baseline.hi_bytes) + ") bytes, standing in for an empty block";

    for (std::size_t b = base + 1; b < nbins; ++b) {
        auto& bin = curve.bins[b];
        if (!bin.defined) continue;
        if (options.significance == EnvelopeSignificance::kCiOverlap) {
            bin.significant = bin.ci_low > baseline.ci_high;
        } else {
            std::size_t valid = 0, not_above = 0;
            for (std::size_t r = 0; r < options.bootstrap.resamples; ++r) {
                const double x = replicates[b][r];
                const double y = replicates[base][r];
                if (std::isnan(x) || std::isnan(y)) continue;
                ++valid;
                if (x <= y) ++not_above;
            }
            bin.p_vs_baseline = valid == 0 ? 1.0 : static_cast<double>(not_above) / static_cast<double>(valid);
            bin.significant = bin.p_vs_baseline < options.alpha;
        }
        if (bin.significant && curve.safe_envelope.first_significant_bin < 0) {
            curve.safe_envelope.first_significant_bin = static_cast<int>(b);
        }
    }
    auto& env = curve.safe_envelope;
    if (env.first_significant_bin >= 0) {
        const auto& safe = curve.bins[static_cast<std::size_t>(env.first_significant_bin) - 1];
        env.bounded = true;
        env.lo_bytes = safe.lo_bytes;
        env.hi_bytes = safe.hi_bytes;
    } else {
        env.bounded = false;
        env.lo_bytes = baseline.lo_bytes;
        env.hi_bytes = curve.bins.back().hi_bytes;
    }
    return curve;
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::kImproved:
            return "improved";
        case Verdict::kWorsened:
            return "worsened";
        case Verdict::kIndeterminate:
            break;
    }
    return "indeterminate";
}

SnapshotComparison compare_snapshots(const EnvelopeCurve& a, const EnvelopeCurve& b) {
    if (a.bins.size() != b.bins.size()) throw DataError("snapshots use different bin counts");
    SnapshotComparison cmp;
    for (std::size_t k = 0; k < a.bins.size(); ++k) {
        const auto& x = a.bins[k];
        const auto& y = b.bins[k];
        if (x.lo_bytes != y.lo_bytes || x.hi_bytes != y.hi_bytes) {
            throw DataError("snapshots use different bin edges at bin " + std::to_string(k));
        }
        BinComparison bc;
        bc.lo_bytes = x.lo_bytes;
        bc.hi_bytes = x.hi_bytes;
        if (x.defined && y.defined) {
            bc.delta = y.D - x.D;
            const double hw_x = 0.5 * (x.ci_high - x.ci_low);
            const double hw_y = 0.5 * (y.ci_high - y.ci_low);
            const double hw = std::hypot(hw_x, hw_y);
            bc.ci_low = bc.delta - hw;
            bc.ci_high = bc.delta + hw;
            if (bc.ci_high < 0.0) {
                bc.verdict = Verdict::kImproved;
            } else if (bc.ci_low > 0.0) {
                bc.verdict = Verdict::kWorsened;
            }
        } else {
            bc.delta = bc.ci_low = bc.ci_high = std::nan("");
        }
        switch (bc.verdict) {
            case Verdict::kImproved:
                ++cmp.improved;
                break;
            case Verdict::kWorsened:
                ++cmp.worsened;
                break;
            case Verdict::kIndeterminate:
                ++cmp.indeterminate;
                break;
        }
        cmp.bins.push_back(bc);
    }
    return cmp;
}

}  // namespace minerscope
