#pragma once

#include "minerscope/ingest.hpp"
#include "minerscope/succession.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace minerscope {

/// Point estimate above which a pair with ci_low > 0 is reported as a
/// likely cartel. Calibrated on simulated networks: independent miners stay
/// well below it at 1e5 blocks while a zero-delay pair inside a 0.2 t
/// network sits around 0.15.
inline constexpr double kDefaultCartelThreshold = 0.1;

/// P(i, j) = (N(i, j) + N(j, i)) / 2 - 1, symmetric by construction.
struct PairsMatrix {
    std::vector<std::string> order;
    SquareMatrix P;
    std::vector<bool> defined;  // n x n; false where either N row is undefined
};

struct PairEntry {
    std::size_t i = 0;
    std::size_t j = 0;
    std::string a;
    std::string b;
    double P = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    bool defined = false;
    bool flagged = false;
};

struct PairsReport {
    PairsMatrix matrix;
    std::vector<PairEntry> pairs;  // off-diagonal, sorted by P descending
    double threshold = kDefaultCartelThreshold;
};

PairsMatrix pairs_matrix(const NormalizedSuccession& N);

/// Pairs matrix plus a pair-bootstrap interval for every off-diagonal entry.
PairsReport pairs_report(const SuccessionMatrix& S, const NormalizedSuccession& N, const BootstrapOptions& bootstrap);

/// Marks and returns the pairs with ci_low > 0 and P > threshold.
std::vector<PairEntry> flag_cartels(PairsReport& report, double threshold = kDefaultCartelThreshold);

struct SwitchOptions {
    std::int64_t window_seconds = 0;  // 0: six times the slower chain's block interval
    double correlation_threshold = -0.2;
    double exclusivity_threshold = 0.8;
    std::size_t min_active_windows = 20;
};

struct TimelineRow {
    std::int64_t window_start = 0;
    std::uint32_t count_a = 0;
    std::uint32_t count_b = 0;
};

struct SwitchReport {
    std::string miner;
    std::int64_t window_seconds = 0;
    double correlation = 0.0;
    double exclusivity = 0.0;
    std::size_t windows = 0;
    std::size_t active_windows = 0;
    bool flagged = false;
    std::vector<TimelineRow> timeline;
};

std::int64_t default_switch_window(const ChainDataset& chain_a, const ChainDataset& chain_b);

/// Compares one miner's per-window block counts across two chains that
/// share a proof-of-work function.
SwitchReport chain_switch_report(const ChainDataset& chain_a, const ChainDataset& chain_b, const std::string& miner,
                                 const SwitchOptions& options = {});

}  // namespace minerscope
