#pragma once

#include "minerscope/ingest.hpp"
#include "minerscope/succession.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace minerscope {

struct LatencyEstimate {
    double avg_interval_min = 0.0;
    double latency_min = 0.0;  ///< (trace(S) - 1) * t
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t resamples_used = 0;
};

/// Average propagation latency implied by the self-succession excess.
LatencyEstimate latency(const ChainDataset& dataset, const BootstrapOptions& bootstrap);

/// Fork probability approximation 1 - exp(-latency / interval).
double orphan_rate_check(double latency, double interval);

struct EnvelopeBin {
    std::uint64_t lo_bytes = 0;  // inclusive
    std::uint64_t hi_bytes = 0;  // exclusive
    bool defined = false;        // at least one miner met min_pairs_per_miner
    double D = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::uint64_t pair_count = 0;
    std::size_t miners_used = 0;
    double p_vs_baseline = 1.0;  // only filled in bootstrap-test mode
    bool significant = false;
};

struct SafeEnvelope {
    bool bounded = false;
    std::uint64_t lo_bytes = 0;
    std::uint64_t hi_bytes = 0;
    int first_significant_bin = -1;
};

enum class EnvelopeSignificance {
    kCiOverlap,      ///< bin ci_low above the baseline's ci_high
    kBootstrapTest,  ///< one-sided bootstrap test of D_bin > D_baseline
};

struct EnvelopeOptions {
    std::vector<std::uint64_t> edges;
    std::size_t min_pairs_per_miner = 30;
    BootstrapOptions bootstrap;
    EnvelopeSignificance significance = EnvelopeSignificance::kCiOverlap;
    double alpha = 0.05;
};

struct EnvelopeCurve {
    std::vector<EnvelopeBin> bins;
    SafeEnvelope safe_envelope;
    int baseline_bin = -1;
    std::string note;
};

/// Edges 0, width, 2*width, ... up to and past `max_size`.
std::vector<std::uint64_t> uniform_edges(std::uint64_t width, std::uint64_t max_size);

/// Size-binned advantage curve. Each consecutive pair lands in the bin of
/// its predecessor's size. `m` holds the global shares in miner order.
EnvelopeCurve envelope_curve(const ChainDataset& dataset, std::span<const double> m,
                             const EnvelopeOptions& options);

enum class Verdict { kImproved, kWorsened, kIndeterminate };

const char* to_string(Verdict v);

struct BinComparison {
    std::uint64_t lo_bytes = 0;
    std::uint64_t hi_bytes = 0;
    double delta = 0.0;  // D_b - D_a
    double ci_low = 0.0;
    double ci_high = 0.0;
    Verdict verdict = Verdict::kIndeterminate;
};

struct SnapshotComparison {
    std::vector<BinComparison> bins;
    std::size_t improved = 0;
    std::size_t worsened = 0;
    std::size_t indeterminate = 0;
};

/// Per-bin change from snapshot `a` to `b`; half-widths combine in quadrature.
SnapshotComparison compare_snapshots(const EnvelopeCurve& a, const EnvelopeCurve& b);

}  // namespace minerscope
