#pragma once

#include "minerscope/decentralization.hpp"
#include "minerscope/ingest.hpp"
#include "minerscope/succession.hpp"

#include <span>
#include <string>
#include <vector>

namespace minerscope {

/// Unbiased hashpower O and per-miner advantage increment alpha.
///
/// The model: a miner that just mined holds relative weight O_i + alpha_i
/// against everyone else's O_j, so
///
///     S_ii = (O_i + alpha_i) / (1 + alpha_i)
///     B_i  = O_i (1 + alpha_i) / (1 + sum_j O_j alpha_j)
///
/// alpha_i < 0 is allowed (a miner less likely to follow itself than its
/// share suggests, e.g. one that hops between chains).
struct DebiasResult {
    std::vector<double> O;
    std::vector<double> alpha;
    double scale = 1.0;     ///< c = 1 + sum_j O_j alpha_j at the solution
    double residual = 0.0;  ///< max |violation| over both equation families
    int iterations = 0;
    std::vector<std::string> warnings;
};

struct DebiasOptions {
    double tol = 1e-10;
    int max_iterations = 200;
};

/// Inverts the model above. Eliminating alpha_i = (S_ii - O_i)/(1 - S_ii)
/// leaves O_i (1 - O_i) = B_i c (1 - S_ii); for a trial c each O_i is the
/// smaller quadratic root and c is bisected until sum O_i = 1. Needs at
/// least three miners (or exactly one); two miners throw SolverError.
DebiasResult debias(std::span<const double> B, std::span<const double> S_diag, const DebiasOptions& options = {});

/// Forward model: (B, S_diag) generated by (O, alpha).
struct ForwardModel {
    std::vector<double> B;
    std::vector<double> S_diag;
};
ForwardModel forward_model(std::span<const double> O, std::span<const double> alpha);

/// Max violation of the two equation families at (O, alpha).
double model_residual(std::span<const double> B, std::span<const double> S_diag, std::span<const double> O,
                      std::span<const double> alpha);

struct DebiasedMetrics {
    DebiasResult solution;
    PowerDistribution biased;
    NormalizedSuccession normalized;
    AdvantageMetric metric;
};

/// Debiases the dataset's shares, then normalizes S and weights D by O.
DebiasedMetrics debiased_metrics(const ChainDataset& dataset, const BootstrapOptions& bootstrap,
                                 const DebiasOptions& options = {});

/// Shares over main-chain plus uncle blocks of retained miners.
PowerDistribution uncle_inclusive_power(const ChainDataset& dataset);

}  // namespace minerscope
