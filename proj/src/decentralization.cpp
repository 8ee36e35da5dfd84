#include "minerscope/decentralization.hpp"

#include "minerscope/error.hpp"

#include <cmath>

namespace minerscope {

double PowerDistribution::share_of(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == label) return shares[i];
    }
    return 0.0;
}

PowerDistribution power_distribution(const ChainDataset& dataset) {
    PowerDistribution pd;
    pd.labels = dataset.miners;
    std::vector<std::uint64_t> counts(dataset.miners.size(), 0);
    for (const auto& r : dataset.records) {
        const int idx = dataset.miner_index(r.miner);
        if (idx >= 0) ++counts[static_cast<std::size_t>(idx)];
    }
    for (auto c : counts) pd.total_blocks += c;
    if (pd.total_blocks == 0) throw DataError("dataset has no blocks from retained miners");
    pd.shares.reserve(counts.size());
    for (auto c : counts) pd.shares.push_back(static_cast<double>(c) / static_cast<double>(pd.total_blocks));
    return pd;
}

double shannon_entropy_bits(std::span<const double> counts) {
    double total = 0.0;
    for (double c : counts) total += c;
    if (!(total > 0.0)) throw DataError("entropy of an empty distribution");
    double h = 0.0;
    for (double c : counts) {
        if (c <= 0.0) continue;  // 0 log 0 = 0
        const double p = c / total;
        h -= p * std::log2(p);
    }
    return h;
}

EntropyBounds effective_miners(const std::map<std::string, std::uint64_t>& claimed_counts,
                               std::uint64_t unclaimed_count) {
    std::vector<double> counts;
    double total = static_cast<double>(unclaimed_count);
    for (const auto& [label, n] : claimed_counts) {
        counts.push_back(static_cast<double>(n));
        total += static_cast<double>(n);
    }
    if (!(total > 0.0)) throw DataError("effective miner count needs at least one block");

    EntropyBounds b;
    // Pessimistic: every unclaimed block belongs to one pseudo-miner.
    auto lower_counts = counts;
    lower_counts.push_back(static_cast<double>(unclaimed_count));
    const double h_low = shannon_entropy_bits(lower_counts);

    // Optimistic: each unclaimed block is its own miner, contributing
    // u * (1/T) * log2(T) to the entropy.
    double h_high = 0.0;
    for (double c : counts) {
        if (c <= 0.0) continue;
        const double p = c / total;
        h_high -= p * std::log2(p);
    }
    if (unclaimed_count > 0) {
        h_high += static_cast<double>(unclaimed_count) / total * std::log2(total);
    }
    b.lower_n = std::exp2(h_low);
    b.upper_n = unclaimed_count == 0 ? b.lower_n : std::exp2(h_high);
    return b;
}

RawMinerCounts count_miners(const std::vector<BlockRecord>& records) {
    RawMinerCounts rc;
    for (const auto& r : records) {
        if (r.uncle) continue;
        if (r.unclaimed()) {
            ++rc.unclaimed;
        } else {
            ++rc.claimed[r.miner];
        }
    }
    return rc;
}

}  // namespace minerscope
