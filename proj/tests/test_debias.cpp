#include "minerscope/debias.hpp"
#include "minerscope/error.hpp"
#include "minerscope/minesim.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace minerscope;

namespace {

// Forward model written out independently of the library.
void generate(const std::vector<double>& O, const std::vector<double>& a, std::vector<double>& B,
              std::vector<double>& S) {
    double c = 1.0;
    for (std::size_t i = 0; i < O.size(); ++i) c += O[i] * a[i];
    B.clear();
    S.clear();
    for (std::size_t i = 0; i < O.size(); ++i) {
        B.push_back(O[i] * (1 + a[i]) / c);
        S.push_back((O[i] + a[i]) / (1 + a[i]));
    }
}

}  // namespace

TEST_CASE("two miners are underdetermined") {
    std::vector<double> B, S;
    generate({0.6, 0.4}, {0.1, 0.05}, B, S);
    CHECK(B[0] == doctest::Approx(0.61111).epsilon(1e-5));
    CHECK(B[1] == doctest::Approx(0.38889).epsilon(1e-5));
    CHECK(S[0] == doctest::Approx(0.63636).epsilon(1e-5));
    CHECK(S[1] == doctest::Approx(0.42857).epsilon(1e-5));
    CHECK(model_residual(B, S, std::vector<double>{0.6, 0.4}, std::vector<double>{0.1, 0.05}) < 1e-12);
    // Every split O_0 in (0, 1) reproduces the same observations exactly.
    for (double o : {0.3, 0.5, 0.55, 0.9}) {
        const std::vector<double> O{o, 1.0 - o};
        std::vector<double> a;
        for (std::size_t i = 0; i < 2; ++i) a.push_back((S[i] - O[i]) / (1.0 - S[i]));
        CHECK(model_residual(B, S, O, a) < 1e-12);
    }
    CHECK_THROWS_AS(debias(B, S), SolverError);
}

TEST_CASE("library forward model matches the written-out equations") {
    std::vector<double> B, S;
    const std::vector<double> O{0.5, 0.3, 0.2}, a{0.2, -0.1, 0.0};
    generate(O, a, B, S);
    const auto fm = forward_model(O, a);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(fm.B[i] == doctest::Approx(B[i]).epsilon(1e-15));
        CHECK(fm.S_diag[i] == doctest::Approx(S[i]).epsilon(1e-15));
    }
    CHECK(std::accumulate(fm.B.begin(), fm.B.end(), 0.0) == doctest::Approx(1.0));
}

TEST_CASE("no advantage returns the biased shares") {
    const std::vector<double> B{0.45, 0.3, 0.25};
    const auto r = debias(B, B);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::fabs(r.O[i] - B[i]) < 1e-9);
        CHECK(std::fabs(r.alpha[i]) < 1e-9);
    }
}

TEST_CASE("round trip over random instances") {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_o = 0, worst_res = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng() % 11;
        std::vector<double> w(n);
        for (auto& x : w) x = 0.05 + u(rng);
        const double s = std::accumulate(w.begin(), w.end(), 0.0);
        std::vector<double> O, a;
        for (auto x : w) O.push_back(x / s);
        if (*std::max_element(O.begin(), O.end()) >= 0.5) continue;
        for (std::size_t i = 0; i < n; ++i) a.push_back(0.5 * u(rng));
        std::vector<double> B, S;
        generate(O, a, B, S);
        const auto r = debias(B, S);
        for (std::size_t i = 0; i < n; ++i) worst_o = std::max(worst_o, std::fabs(r.O[i] - O[i]));
        worst_res = std::max(worst_res, r.residual);
    }
    CHECK(worst_o <= 1e-6);
    CHECK(worst_res <= 1e-8);
}

TEST_CASE("negative increments are recovered") {
    std::vector<double> B, S;
    const std::vector<double> O{0.3, 0.25, 0.25, 0.2}, a{-0.2, 0.1, 0.0, 0.05};
    generate(O, a, B, S);
    const auto r = debias(B, S);
    for (std::size_t i = 0; i < O.size(); ++i) {
        CHECK(std::fabs(r.O[i] - O[i]) < 1e-8);
        CHECK(std::fabs(r.alpha[i] - a[i]) < 1e-7);
    }
    CHECK(r.scale < 1.0);
}

TEST_CASE("invalid inputs") {
    CHECK_THROWS_AS(debias(std::vector<double>{0.5, 0.4}, std::vector<double>{0.5, 0.4}), DataError);
    CHECK_THROWS_AS(debias(std::vector<double>{0.5, 0.3, 0.2}, std::vector<double>{1.0, 0.4, 0.2}), SolverError);
    CHECK_THROWS_AS(debias(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5}), DataError);
    // Large shares with no self-succession push the discriminant negative
    // before the shares can sum to one.
    CHECK_THROWS_AS(debias(std::vector<double>{0.7, 0.2, 0.1}, std::vector<double>{0.0, 0.0, 0.0}), SolverError);
}

TEST_CASE("single miner is trivially unbiased") {
    const auto r = debias(std::vector<double>{1.0}, std::vector<double>{0.99});
    CHECK(r.O == std::vector<double>{1.0});
}

TEST_CASE("debiased metric equals the biased metric") {
    sim::SimConfig cfg;
    cfg.miners = sim::geometric_miners(4, 0.7);
    cfg.delay = sim::UniformDelay{60};
    cfg.horizon = 20'000;
    cfg.seed = 3;
    const auto ds = sanitize(sim::simulate(cfg).main_chain, 0.0);
    const auto dm = debiased_metrics(ds, {200, 1});
    const auto S = succession_matrix(ds);
    // Exact up to the solver's tolerance on sum O_i = 1.
    CHECK(std::fabs(dm.metric.D - (S.trace() - 1.0)) < 1e-9);
    CHECK(dm.normalized.normalization == Normalization::kDebiased);
}

TEST_CASE("uncle-inclusive shares") {
    std::vector<BlockRecord> recs{{1, 0, 1, "a", false},
                                  {2, 600, 1, "b", false},
                                  {2, 601, 1, "a", true},
                                  {3, 1200, 1, "a", false},
                                  {4, 1800, 1, "b", false}};
    const auto ds = sanitize(recs, 0.0);
    const auto pd = uncle_inclusive_power(ds);
    CHECK(pd.total_blocks == 5);
    CHECK(pd.share_of("a") == doctest::Approx(0.6));
    recs.erase(recs.begin() + 2);
    CHECK_THROWS_AS(uncle_inclusive_power(sanitize(recs, 0.0)), DataError);
}
