#pragma once

#include "minerscope/ingest.hpp"
#include "minerscope/kernels.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace minerscope {

/// Dense square matrix of doubles, row-major.
struct SquareMatrix {
    std::size_t n = 0;
    std::vector<double> data;

    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t size, double fill = 0.0) : n(size), data(size * size, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * n + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * n + j]; }
};

/// Successor-miner frequencies. S(i, j) is the fraction of blocks right
/// after a block by order[i] that order[j] mined. Rows with no observed
/// successor are all zero and flagged in `row_defined`.
struct SuccessionMatrix {
    std::vector<std::string> order;
    std::vector<std::uint64_t> counts;  // n x n, row-major
    SquareMatrix S;
    std::vector<bool> row_defined;
    kernels::PairCodes pairs;  // the observations, kept for resampling

    std::size_t size() const { return order.size(); }
    std::uint64_t count(std::size_t i, std::size_t j) const { return counts[i * order.size() + j]; }
    std::uint64_t row_total(std::size_t i) const;
    double trace() const;
};

enum class Normalization { kBiased, kDebiased };

const char* to_string(Normalization n);

/// N(i, j) = S(i, j) / m_j; 1.0 means no advantage.
struct NormalizedSuccession {
    std::vector<std::string> order;
    SquareMatrix N;
    std::vector<bool> row_defined;
    std::vector<double> m;
    Normalization normalization = Normalization::kBiased;
};

/// Variance model for the previous-block-advantage z-test.
enum class ZVariance {
    kNested,  ///< successor sample treated as a subset of the full sample
    kPooled,  ///< classic pooled test treating the samples as independent
};

const char* to_string(ZVariance v);

struct AdvantageTestResult {
    std::string miner;
    double p1 = 0.0;  ///< share over all retained blocks
    double p2 = 0.0;  ///< self-succession share S_ii
    std::uint64_t n1 = 0;
    std::uint64_t n2 = 0;
    double z = 0.0;
    double p_value = 1.0;
    bool significant = false;
};

struct BootstrapOptions {
    std::size_t resamples = 1000;
    std::uint64_t seed = 20190601;
};

struct AdvantageMetric {
    double D = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    Normalization normalization = Normalization::kBiased;
    std::size_t resamples_used = 0;
};

/// Consecutive-height pairs where both blocks belong to retained miners.
/// Pairs spanning a dropped block are excluded, never bridged.
kernels::PairCodes consecutive_pairs(const ChainDataset& dataset);

SuccessionMatrix succession_matrix(const ChainDataset& dataset);
SuccessionMatrix succession_from_pairs(std::vector<std::string> order, kernels::PairCodes pairs);

AdvantageTestResult advantage_test(const ChainDataset& dataset, const std::string& miner,
                                   ZVariance variance = ZVariance::kNested, double alpha = 0.05);

/// Tests every retained miner that has at least one successor, in miner order.
std::vector<AdvantageTestResult> advantage_tests(const ChainDataset& dataset,
                                                 ZVariance variance = ZVariance::kNested, double alpha = 0.05);

NormalizedSuccession normalize(const SuccessionMatrix& S, std::span<const double> m,
                               Normalization normalization = Normalization::kBiased);

/// Point estimate D = sum_i (N_ii - 1) P_i. Throws if a diagonal row is undefined.
double distance_metric(const NormalizedSuccession& N, std::span<const double> P);

/// D with a percentile-bootstrap 95% interval over resampled pairs.
AdvantageMetric advantage_metric(const SuccessionMatrix& S, const NormalizedSuccession& N,
                                 std::span<const double> P, const BootstrapOptions& bootstrap);

}  // namespace minerscope
