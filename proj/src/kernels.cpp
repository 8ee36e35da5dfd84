#include "minerscope/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <random>

namespace minerscope::kernels {

namespace {

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void one_replicate(const PairCodes& pairs, std::uint64_t seed, std::size_t r, std::vector<std::uint64_t>& counts,
                   std::span<double> out, const CountStatistic& statistic) {
    std::fill(counts.begin(), counts.end(), 0);
    std::mt19937_64 rng(substream_seed(seed, r));
    std::uniform_int_distribution<std::size_t> pick(0, pairs.codes.size() - 1);
    for (std::size_t k = 0; k < pairs.codes.size(); ++k) ++counts[pairs.codes[pick(rng)]];
    statistic(counts, out);
}

BootstrapSamples make_samples(std::size_t resamples, std::size_t width) {
    BootstrapSamples s;
    s.resamples = resamples;
    s.width = width;
    s.values.assign(resamples * width, std::nan(""));
    return s;
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

std::vector<double> BootstrapSamples::column(std::size_t c) const {
    std::vector<double> out;
    out.reserve(resamples);
    for (std::size_t r = 0; r < resamples; ++r) {
        const double v = values[r * width + c];
        if (!std::isnan(v)) out.push_back(v);
    }
    return out;
}

std::vector<std::uint64_t> count_pairs(const PairCodes& pairs) {
    const std::size_t cells = pairs.n * pairs.n;
    std::vector<std::uint64_t> total(cells, 0);
    const auto m = static_cast<std::int64_t>(pairs.codes.size());
#pragma omp parallel
    {
        std::vector<std::uint64_t> local(cells, 0);
#pragma omp for schedule(static) nowait
        for (std::int64_t k = 0; k < m; ++k) ++local[pairs.codes[static_cast<std::size_t>(k)]];
#pragma omp critical
        for (std::size_t c = 0; c < cells; ++c) total[c] += local[c];
    }
    return total;
}

BootstrapSamples bootstrap_pairs(const PairCodes& pairs, std::size_t resamples, std::uint64_t seed,
                                 std::size_t width, const CountStatistic& statistic) {
    auto samples = make_samples(resamples, width);
    if (pairs.codes.empty()) return samples;
    const auto reps = static_cast<std::int64_t>(resamples);
#pragma omp parallel
    {
        std::vector<std::uint64_t> counts(pairs.n * pairs.n);
#pragma omp for schedule(dynamic, 4)
        for (std::int64_t r = 0; r < reps; ++r) {
            const auto ru = static_cast<std::size_t>(r);
            one_replicate(pairs, seed, ru, counts, {samples.values.data() + ru * width, width}, statistic);
        }
    }
    return samples;
}

std::vector<std::uint32_t> window_counts(std::span<const std::int64_t> times, std::int64_t start,
                                         std::int64_t window, std::size_t windows) {
    const std::int64_t end = start + window * static_cast<std::int64_t>(windows);
    std::vector<std::uint32_t> total(windows, 0);
    const auto m = static_cast<std::int64_t>(times.size());
#pragma omp parallel
    {
        std::vector<std::uint32_t> local(windows, 0);
#pragma omp for schedule(static) nowait
        for (std::int64_t k = 0; k < m; ++k) {
            const auto t = times[static_cast<std::size_t>(k)];
            if (t < start || t >= end) continue;
            ++local[static_cast<std::size_t>((t - start) / window)];
        }
#pragma omp critical
        for (std::size_t w = 0; w < windows; ++w) total[w] += local[w];
    }
    return total;
}

namespace serial {

std::vector<std::uint64_t> count_pairs(const PairCodes& pairs) {
    std::vector<std::uint64_t> total(pairs.n * pairs.n, 0);
    for (auto code : pairs.codes) ++total[code];
    return total;
}

BootstrapSamples bootstrap_pairs(const PairCodes& pairs, std::size_t resamples, std::uint64_t seed,
                                 std::size_t width, const CountStatistic& statistic) {
    auto samples = make_samples(resamples, width);
    if (pairs.codes.empty()) return samples;
    std::vector<std::uint64_t> counts(pairs.n * pairs.n);
    for (std::size_t r = 0; r < resamples; ++r) {
        one_replicate(pairs, seed, r, counts, {samples.values.data() + r * width, width}, statistic);
    }
    return samples;
}

std::vector<std::uint32_t> window_counts(std::span<const std::int64_t> times, std::int64_t start,
                                         std::int64_t window, std::size_t windows) {
    std::vector<std::uint32_t> total(windows, 0);
    const std::int64_t end = start + window * static_cast<std::int64_t>(windows);
    for (auto t : times) {
        if (t < start || t >= end) continue;
        ++total[static_cast<std::size_t>((t - start) / window)];
    }
    return total;
}

}  // namespace serial

}  // namespace minerscope::kernels
