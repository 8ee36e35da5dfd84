#include "minerscope/anomalies.hpp"

#include "minerscope/error.hpp"
#include "minerscope/kernels.hpp"
#include "minerscope/stats.hpp"

#include <algorithm>
#include <cmath>

namespace minerscope {

PairsMatrix pairs_matrix(const NormalizedSuccession& N) {
    const std::size_t n = N.order.size();
    PairsMatrix pm;
    pm.order = N.order;
    pm.P = SquareMatrix(n);
    pm.defined.assign(n * n, false);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const bool ok = N.row_defined[i] && N.row_defined[j];
            const double v = ok ? (N.N(i, j) + N.N(j, i)) / 2.0 - 1.0 : std::nan("");
            pm.P(i, j) = v;
            pm.P(j, i) = v;
            pm.defined[i * n + j] = ok;
            pm.defined[j * n + i] = ok;
        }
    }
    return pm;
}

PairsReport pairs_report(const SuccessionMatrix& S, const NormalizedSuccession& N, const BootstrapOptions& bootstrap) {
    PairsReport rep;
    rep.matrix = pairs_matrix(N);
    const std::size_t n = N.order.size();
    std::vector<std::pair<std::size_t, std::size_t>> idx;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) idx.emplace_back(i, j);
    }
    const auto m = N.m;
    const auto samples = kernels::bootstrap_pairs(
        S.pairs, bootstrap.resamples, bootstrap.seed, idx.size(),
        [n, m, &idx](std::span<const std::uint64_t> counts, std::span<double> out) {
            std::vector<std::uint64_t> rows(n, 0);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) rows[i] += counts[i * n + j];
            }
            for (std::size_t k = 0; k < idx.size(); ++k) {
                const auto [i, j] = idx[k];
                if (rows[i] == 0 || rows[j] == 0) {
                    out[k] = std::nan("");
                    continue;
                }
                const double sij = static_cast<double>(counts[i * n + j]) / static_cast<double>(rows[i]);
                const double sji = static_cast<double>(counts[j * n + i]) / static_cast<double>(rows[j]);
                out[k] = (sij / m[j] + sji / m[i]) / 2.0 - 1.0;
            }
        });
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto [i, j] = idx[k];
        PairEntry e;
        e.i = i;
        e.j = j;
        e.a = N.order[i];
        e.b = N.order[j];
        e.defined = rep.matrix.defined[i * n + j];
        e.P = rep.matrix.P(i, j);
        if (e.defined) {
            const auto ci = stats::percentile_interval(samples.column(k));
            e.ci_low = ci.low;
            e.ci_high = ci.high;
        } else {
            e.ci_low = e.ci_high = std::nan("");
        }
        rep.pairs.push_back(std::move(e));
    }
    std::stable_sort(rep.pairs.begin(), rep.pairs.end(), [](const PairEntry& x, const PairEntry& y) {
        if (x.defined != y.defined) return x.defined;
        return x.P > y.P;
    });
    return rep;
}

std::vector<PairEntry> flag_cartels(PairsReport& report, double threshold) {
    report.threshold = threshold;
    std::vector<PairEntry> flagged;
    for (auto& e : report.pairs) {
        e.flagged = e.defined && e.ci_low > 0.0 && e.P > threshold;
        if (e.flagged) flagged.push_back(e);
    }
    return flagged;
}

std::int64_t default_switch_window(const ChainDataset& chain_a, const ChainDataset& chain_b) {
    const double t = std::max(chain_block_interval(chain_a), chain_block_interval(chain_b));
    return std::max<std::int64_t>(1, std::llround(6.0 * t));
}

namespace {

std::pair<std::int64_t, std::int64_t> time_range(const ChainDataset& d) {
    if (d.records.empty()) throw DataError("chain has no records");
    auto [lo, hi] = std::minmax_element(d.records.begin(), d.records.end(),
                                        [](const auto& x, const auto& y) { return x.timestamp < y.timestamp; });
    return {lo->timestamp, hi->timestamp};
}

std::vector<std::int64_t> miner_times(const ChainDataset& d, const std::string& miner) {
    std::vector<std::int64_t> t;
    for (const auto& r : d.records) {
        if (r.miner == miner) t.push_back(r.timestamp);
    }
    return t;
}

}  // namespace

SwitchReport chain_switch_report(const ChainDataset& chain_a, const ChainDataset& chain_b, const std::string& miner,
                                 const SwitchOptions& options) {
    const auto times_a = miner_times(chain_a, miner);
    const auto times_b = miner_times(chain_b, miner);
    if (times_a.empty() || times_b.empty()) {
        throw DataError("miner '" + miner + "' does not appear on both chains");
    }
    const auto [a_lo, a_hi] = time_range(chain_a);
    const auto [b_lo, b_hi] = time_range(chain_b);
    const auto start = std::max(a_lo, b_lo);
    const auto end = std::min(a_hi, b_hi);
    if (end <= start) throw DataError("the two chains have no overlapping timespan");

    SwitchReport rep;
    rep.miner = miner;
    rep.window_seconds = options.window_seconds > 0 ? options.window_seconds : default_switch_window(chain_a, chain_b);
    rep.windows = static_cast<std::size_t>((end - start) / rep.window_seconds);
    const auto ca = kernels::window_counts(times_a, start, rep.window_seconds, rep.windows);
    const auto cb = kernels::window_counts(times_b, start, rep.window_seconds, rep.windows);

    std::vector<double> xa(rep.windows), xb(rep.windows);
    std::size_t exclusive = 0;
    for (std::size_t w = 0; w < rep.windows; ++w) {
        xa[w] = ca[w];
        xb[w] = cb[w];
        rep.timeline.push_back({start + static_cast<std::int64_t>(w) * rep.window_seconds, ca[w], cb[w]});
        if (ca[w] + cb[w] == 0) continue;
        ++rep.active_windows;
        if (ca[w] == 0 || cb[w] == 0) ++exclusive;
    }
    if (rep.active_windows < options.min_active_windows) {
        throw DataError("only " + std::to_string(rep.active_windows) + " active windows for '" + miner +
                        "'; need at least " + std::to_string(options.min_active_windows));
    }
    rep.correlation = stats::pearson(xa, xb);
    rep.exclusivity = static_cast<double>(exclusive) / static_cast<double>(rep.active_windows);
    rep.flagged = !std::isnan(rep.correlation) && rep.correlation < options.correlation_threshold &&
                  rep.exclusivity > options.exclusivity_threshold;
    return rep;
}

}  // namespace minerscope
