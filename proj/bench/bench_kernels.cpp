// Serial reference vs OpenMP kernels. Set OMP_NUM_THREADS to vary the
// thread count; the outputs are identical either way.

#include "minerscope/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace minerscope;

namespace {

kernels::PairCodes random_pairs(std::size_t count, std::size_t n) {
    std::mt19937_64 rng(1);
    kernels::PairCodes p;
    p.n = n;
    p.codes.resize(count);
    for (auto& c : p.codes) c = static_cast<std::uint32_t>(rng() % (n * n));
    return p;
}

std::vector<std::int64_t> random_times(std::size_t count, std::int64_t span) {
    std::mt19937_64 rng(2);
    std::vector<std::int64_t> t(count);
    for (auto& x : t) x = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(span));
    return t;
}

void trace_statistic(std::span<const std::uint64_t> counts, std::span<double> out) {
    const std::size_t n = 16;
    double tr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t row = 0;
        for (std::size_t j = 0; j < n; ++j) row += counts[i * n + j];
        tr += row ? static_cast<double>(counts[i * n + i]) / static_cast<double>(row) : 0.0;
    }
    out[0] = tr;
}

template <bool Parallel>
void BM_count_pairs(benchmark::State& state) {
    const auto pairs = random_pairs(static_cast<std::size_t>(state.range(0)), 16);
    for (auto _ : state) {
        auto c = Parallel ? kernels::count_pairs(pairs) : kernels::serial::count_pairs(pairs);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_bootstrap_pairs(benchmark::State& state) {
    const auto pairs = random_pairs(static_cast<std::size_t>(state.range(0)), 16);
    for (auto _ : state) {
        auto s = Parallel ? kernels::bootstrap_pairs(pairs, 200, 7, 1, trace_statistic)
                          : kernels::serial::bootstrap_pairs(pairs, 200, 7, 1, trace_statistic);
        benchmark::DoNotOptimize(s.values.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * 200);
}

template <bool Parallel>
void BM_window_counts(benchmark::State& state) {
    const auto times = random_times(static_cast<std::size_t>(state.range(0)), 100'000'000);
    for (auto _ : state) {
        auto c = Parallel ? kernels::window_counts(times, 0, 3600, 100'000'000 / 3600)
                          : kernels::serial::window_counts(times, 0, 3600, 100'000'000 / 3600);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_count_pairs<false>)->Name("count_pairs/serial")->Arg(100'000)->Arg(1'000'000);
BENCHMARK(BM_count_pairs<true>)->Name("count_pairs/openmp")->Arg(100'000)->Arg(1'000'000);
BENCHMARK(BM_bootstrap_pairs<false>)->Name("bootstrap_pairs/serial")->Arg(10'000)->Arg(100'000);
BENCHMARK(BM_bootstrap_pairs<true>)->Name("bootstrap_pairs/openmp")->Arg(10'000)->Arg(100'000);
BENCHMARK(BM_window_counts<false>)->Name("window_counts/serial")->Arg(100'000)->Arg(1'000'000);
BENCHMARK(BM_window_counts<true>)->Name("window_counts/openmp")->Arg(100'000)->Arg(1'000'000);

BENCHMARK_MAIN();
