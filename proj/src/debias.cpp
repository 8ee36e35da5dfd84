#include "minerscope/debias.hpp"

#include "minerscope/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace minerscope {

namespace {

// Smaller root of O(1 - O) = k c, written to avoid cancellation when k c is small.
double smaller_root(double k, double c) {
    const double disc = std::max(0.0, 1.0 - 4.0 * k * c);
    return 2.0 * k * c / (1.0 + std::sqrt(disc));
}

}  // namespace

ForwardModel forward_model(std::span<const double> O, std::span<const double> alpha) {
    if (O.size() != alpha.size()) throw DataError("O and alpha must have equal length");
    double c = 1.0;
    for (std::size_t i = 0; i < O.size(); ++i) c += O[i] * alpha[i];
    ForwardModel fm;
    for (std::size_t i = 0; i < O.size(); ++i) {
        fm.S_diag.push_back((O[i] + alpha[i]) / (1.0 + alpha[i]));
        fm.B.push_back(O[i] * (1.0 + alpha[i]) / c);
    }
    return fm;
}

double model_residual(std::span<const double> B, std::span<const double> S_diag, std::span<const double> O,
                      std::span<const double> alpha) {
    const auto fm = forward_model(O, alpha);
    double r = 0.0;
    for (std::size_t i = 0; i < O.size(); ++i) {
        r = std::max(r, std::fabs(fm.S_diag[i] - S_diag[i]));
        r = std::max(r, std::fabs(fm.B[i] - B[i]));
    }
    return r;
}

DebiasResult debias(std::span<const double> B, std::span<const double> S_diag, const DebiasOptions& options) {
    const std::size_t n = B.size();
    if (n == 0) throw DataError("debias needs at least one miner");
    if (S_diag.size() != n) throw DataError("B and S_diag must have equal length");
    const double sum_b = std::accumulate(B.begin(), B.end(), 0.0);
    if (std::fabs(sum_b - 1.0) > 1e-9) throw DataError("biased shares must sum to 1");

    DebiasResult res;
    std::vector<double> k(n);
    double c_max = std::numeric_limits<double>::infinity();
    std::size_t binding = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (n > 1 && !(B[i] > 0.0 && B[i] < 1.0)) throw DataError("biased shares must lie in (0, 1)");
        if (S_diag[i] == 1.0) {
            throw SolverError("degenerate miner " + std::to_string(i) + ": self-succession rate is 1");
        }
        if (!(S_diag[i] >= 0.0 && S_diag[i] < 1.0)) throw DataError("self-succession rates must lie in [0, 1)");
        if (B[i] >= 0.5) {
            res.warnings.push_back("miner " + std::to_string(i) +
                                   " holds at least half of main-chain blocks; the small-root branch may "
                                   "understate its true share");
        }
        k[i] = B[i] * (1.0 - S_diag[i]);
        if (1.0 / (4.0 * k[i]) < c_max) {
            c_max = 1.0 / (4.0 * k[i]);
            binding = i;
        }
    }
    if (n == 1) {
        res.O = {1.0};
        res.alpha = {0.0};
        return res;
    }
    if (n == 2) {
        // O_1 = 1 - O_0 makes both quadratics identical, so consistent data
        // fits every O_0 and noisy data fits none.
        throw SolverError("two-miner systems are underdetermined: O_0 (1 - O_0) = k_0 c = k_1 c admits a "
                          "one-parameter family of solutions");
    }

    auto total = [&](double c) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += smaller_root(k[i], c);
        return s - 1.0;
    };

    double c = 0.0;
    double hi = c_max;
    double f_hi = total(hi);
    if (f_hi < -options.tol) {
        throw SolverError("inconsistent inputs: discriminant turns negative for miner " + std::to_string(binding) +
                          " before the shares reach 1 (shortfall " + std::to_string(-f_hi) + ")");
    }
    double lo = std::min(1.0, c_max);
    double f_lo = total(lo);
    int halvings = 0;
    while (f_lo > 0.0 && halvings < options.max_iterations) {
        hi = lo;
        f_hi = f_lo;
        lo *= 0.5;
        f_lo = total(lo);
        ++halvings;
    }
    if (std::fabs(f_lo) <= options.tol) {
        c = lo;
    } else if (std::fabs(f_hi) <= options.tol) {
        c = hi;
    } else if (f_lo > 0.0) {
        throw SolverError("no lower bracket for the scale factor (residual " + std::to_string(f_lo) + ")");
    } else {
        int it = 0;
        for (;; ++it) {
            if (it >= options.max_iterations) {
                throw SolverError("bisection did not converge after " + std::to_string(it) +
                                  " iterations (residual " + std::to_string(std::min(-f_lo, f_hi)) + ")");
            }
            const double mid = 0.5 * (lo + hi);
            const double f_mid = total(mid);
            if (f_mid < f_lo || f_mid > f_hi) {
                throw SolverError("share sum is not monotone in the scale factor");
            }
            if (std::fabs(f_mid) <= options.tol || mid == lo || mid == hi) {
                c = mid;
                break;
            }
            if (f_mid < 0.0) {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
                f_hi = f_mid;
            }
        }
        res.iterations = it + 1;
    }

    res.scale = c;
    res.O.resize(n);
    res.alpha.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        res.O[i] = smaller_root(k[i], c);
        res.alpha[i] = (S_diag[i] - res.O[i]) / (1.0 - S_diag[i]);
    }
    res.residual = model_residual(B, S_diag, res.O, res.alpha);
    return res;
}

DebiasedMetrics debiased_metrics(const ChainDataset& dataset, const BootstrapOptions& bootstrap,
                                 const DebiasOptions& options) {
    DebiasedMetrics out;
    out.biased = power_distribution(dataset);
    const auto S = succession_matrix(dataset);
    std::vector<double> diag(S.size());
    for (std::size_t i = 0; i < S.size(); ++i) {
        if (!S.row_defined[i]) {
            throw DataError("miner '" + S.order[i] + "' has no successor blocks; cannot debias");
        }
        diag[i] = S.S(i, i);
    }
    out.solution = debias(out.biased.shares, diag, options);
    out.normalized = normalize(S, out.solution.O, Normalization::kDebiased);
    out.metric = advantage_metric(S, out.normalized, out.solution.O, bootstrap);
    return out;
}

PowerDistribution uncle_inclusive_power(const ChainDataset& dataset) {
    if (dataset.uncles.empty()) {
        throw DataError("dataset has no uncle records from retained miners; use the main-chain estimate instead");
    }
    PowerDistribution pd;
    pd.labels = dataset.miners;
    std::vector<std::uint64_t> counts(dataset.miners.size(), 0);
    for (const auto* list : {&dataset.records, &dataset.uncles}) {
        for (const auto& r : *list) {
            const int idx = dataset.miner_index(r.miner);
            if (idx >= 0) ++counts[static_cast<std::size_t>(idx)];
        }
    }
    for (auto c : counts) pd.total_blocks += c;
    for (auto c : counts) pd.shares.push_back(static_cast<double>(c) / static_cast<double>(pd.total_blocks));
    return pd;
}

}  // namespace minerscope
