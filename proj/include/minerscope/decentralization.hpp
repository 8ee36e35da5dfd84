#pragma once

#include "minerscope/ingest.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace minerscope {

/// Main-chain share per retained miner (the biased hashpower estimate).
/// `labels` follows the dataset's miner order.
struct PowerDistribution {
    std::vector<std::string> labels;
    std::vector<double> shares;
    std::uint64_t total_blocks = 0;

    double share_of(const std::string& label) const;
};

/// Effective number of equally powered miners, bracketed by the two
/// extreme attributions of unclaimed blocks.
struct EntropyBounds {
    double lower_n = 0.0;
    double upper_n = 0.0;
};

PowerDistribution power_distribution(const ChainDataset& dataset);

/// Shannon entropy in bits of the distribution proportional to `counts`.
double shannon_entropy_bits(std::span<const double> counts);

EntropyBounds effective_miners(const std::map<std::string, std::uint64_t>& claimed_counts,
                               std::uint64_t unclaimed_count);

/// Claimed/unclaimed tallies over all main-chain records, before any
/// sanitizing.
struct RawMinerCounts {
    std::map<std::string, std::uint64_t> claimed;
    std::uint64_t unclaimed = 0;
};

RawMinerCounts count_miners(const std::vector<BlockRecord>& records);

}  // namespace minerscope
