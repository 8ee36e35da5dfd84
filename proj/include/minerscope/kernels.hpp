#pragma once

// Data-parallel hot loops. Each kernel has an OpenMP version (the default
// namespace) and a plain serial reference in `kernels::serial` that the
// tests compare against bit-for-bit and the benchmark times side by side.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace minerscope::kernels {

/// Consecutive-pair observations encoded as `pred * n + succ`.
struct PairCodes {
    std::vector<std::uint32_t> codes;
    std::size_t n = 0;  // number of miners
};

/// R x width matrix of bootstrap replicates, row-major. NaN marks a
/// replicate where the statistic was undefined.
struct BootstrapSamples {
    std::size_t resamples = 0;
    std::size_t width = 0;
    std::vector<double> values;

    std::span<const double> row(std::size_t r) const { return {values.data() + r * width, width}; }
    /// Non-NaN values of column `c`.
    std::vector<double> column(std::size_t c) const;
};

/// Statistic evaluated on one resampled n x n count matrix; writes `out`.
using CountStatistic = std::function<void(std::span<const std::uint64_t> counts, std::span<double> out)>;

/// Deterministic sub-seed for stream `stream` of a run seeded with `seed`.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream);

std::vector<std::uint64_t> count_pairs(const PairCodes& pairs);

/// Nonparametric bootstrap over pairs: each replicate resamples the codes
/// with replacement using its own sub-seeded generator, so the output does
/// not depend on thread scheduling.
BootstrapSamples bootstrap_pairs(const PairCodes& pairs, std::size_t resamples, std::uint64_t seed,
                                 std::size_t width, const CountStatistic& statistic);

/// Per-window event counts: `counts[k]` = number of times in
/// [start + k*window, start + (k+1)*window). Times outside are ignored.
std::vector<std::uint32_t> window_counts(std::span<const std::int64_t> times, std::int64_t start,
                                         std::int64_t window, std::size_t windows);

namespace serial {

std::vector<std::uint64_t> count_pairs(const PairCodes& pairs);
BootstrapSamples bootstrap_pairs(const PairCodes& pairs, std::size_t resamples, std::uint64_t seed,
                                 std::size_t width, const CountStatistic& statistic);
std::vector<std::uint32_t> window_counts(std::span<const std::int64_t> times, std::int64_t start,
                                         std::int64_t window, std::size_t windows);

}  // namespace serial

}  // namespace minerscope::kernels
