// Acceptance suite. Prints one PASS/FAIL line per criterion.
//
//   acceptance [--expect-fail id,id,...]
//
// Exit status is 0 when the set of failing criteria equals the expected set
// (default: empty), so known, documented failures keep showing as FAIL
// without breaking the test run, and an unexpected pass is reported too.

#include "minerscope/anomalies.hpp"
#include "minerscope/cli.hpp"
#include "minerscope/debias.hpp"
#include "minerscope/decentralization.hpp"
#include "minerscope/minesim.hpp"
#include "minerscope/propagation.hpp"
#include "minerscope/succession.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace minerscope;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    std::string id;
    bool pass;
};

std::vector<Outcome> outcomes;

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void report(const std::string& id, const std::string& title, bool pass, const std::string& detail) {
    std::printf("[%s] %-4s %-34s %s\n", pass ? "PASS" : "FAIL", id.c_str(), title.c_str(), detail.c_str());
    std::fflush(stdout);
    outcomes.push_back({id, pass});
}

void info(const std::string& text) {
    std::printf("       %s\n", text.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

template <typename... T>
std::string fmtn(const char* f, T... a) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

ChainDataset simulate_dataset(const sim::SimConfig& cfg) { return sanitize(sim::simulate(cfg).main_chain, 0.0); }

std::vector<double> diagonal(const SuccessionMatrix& S) {
    std::vector<double> d;
    for (std::size_t i = 0; i < S.size(); ++i) d.push_back(S.S(i, i));
    return d;
}

// 1. n equal miners -> effective_miners = n within 1e-9.
void entropy_exactness() {
    Timer t;
    double worst = 0.0;
    for (std::size_t n : {2u, 4u, 16u, 100u}) {
        std::map<std::string, std::uint64_t> counts;
        for (std::size_t i = 0; i < n; ++i) counts["m" + std::to_string(i)] = 1000;
        const auto b = effective_miners(counts, 0);
        worst = std::max({worst, std::fabs(b.lower_n - static_cast<double>(n)),
                          std::fabs(b.upper_n - static_cast<double>(n))});
    }
    const double secs = t.seconds();
    report("1", "entropy exactness", worst <= 1e-9 && secs < 1.0,
           fmtn("max |n_eff - n| = %.3g (tol 1e-9), %.3f s (limit 1 s)", worst, secs));
}

// 2. 1000 random (O, alpha), n <= 12, forward then invert.
void debias_round_trip() {
    Timer t;
    std::mt19937_64 rng(2019);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_o = 0.0, worst_res = 0.0;
    int cases = 0;
    while (cases < 1000) {
        // O_i in (0, 0.5) needs at least three miners.
        const std::size_t n = 3 + rng() % 10;
        std::vector<double> O(n);
        for (auto& x : O) x = 0.02 + u(rng);
        const double s = std::accumulate(O.begin(), O.end(), 0.0);
        for (auto& x : O) x /= s;
        if (*std::max_element(O.begin(), O.end()) >= 0.5) continue;
        std::vector<double> a(n);
        for (auto& x : a) x = 0.5 * u(rng);
        const auto fm = forward_model(O, a);
        const auto r = debias(fm.B, fm.S_diag);
        for (std::size_t i = 0; i < n; ++i) worst_o = std::max(worst_o, std::fabs(r.O[i] - O[i]));
        worst_res = std::max(worst_res, r.residual);
        ++cases;
    }
    const double secs = t.seconds();
    report("2", "debias round trip", worst_o <= 1e-6 && worst_res <= 1e-8 && secs < 10.0,
           fmtn("%d cases, max |O err| = %.3g (tol 1e-6), max residual = %.3g (tol 1e-8), %.2f s (limit 10 s)",
                cases, worst_o, worst_res, secs));
}

// 3. 8 miners, uniform delay 0.1 t, 200k blocks.
void debias_on_simulation() {
    Timer t;
    sim::SimConfig cfg;
    cfg.miners = sim::geometric_miners(8, 0.75);
    cfg.delay = sim::UniformDelay{0.1 * cfg.target_interval};
    cfg.horizon = 200'000;
    cfg.seed = 42;
    const auto ds = simulate_dataset(cfg);
    const auto pd = power_distribution(ds);
    const auto S = succession_matrix(ds);
    const auto r = debias(pd.shares, diagonal(S));
    double worst = 0.0, b_max = 0.0, o_max = 0.0;
    for (std::size_t i = 0; i < ds.miners.size(); ++i) {
        double truth = 0.0;
        for (const auto& m : cfg.miners) {
            if (m.label == ds.miners[i]) truth = m.power;
        }
        worst = std::max(worst, std::fabs(r.O[i] - truth));
        b_max = std::max(b_max, pd.shares[i]);
        o_max = std::max(o_max, r.O[i]);
    }
    const double secs = t.seconds();
    report("3", "debias on simulation", worst <= 0.01 && b_max > o_max && secs < 60.0,
           fmtn("|O_est - O_true|inf = %.4f (tol 0.01), B_max %.4f > O_max %.4f, %.1f s", worst, b_max, o_max,
                secs));
}

// 4. Uniform delay 30 s, t = 600 s, 100k blocks.
void latency_recovery() {
    Timer t;
    sim::SimConfig cfg;
    cfg.miners = sim::geometric_miners(8, 0.75);
    cfg.delay = sim::UniformDelay{30.0};
    cfg.horizon = 100'000;
    cfg.seed = 4;
    const auto ds = simulate_dataset(cfg);
    const auto est = latency(ds, {});
    const double seconds = est.latency_min * 60.0;
    const double rel = std::fabs(seconds - 30.0) / 30.0;

    const auto S = succession_matrix(ds);
    const auto pd = power_distribution(ds);
    const double d_biased = distance_metric(normalize(S, pd.shares), pd.shares);
    const double identity_gap = std::fabs(est.latency_min - d_biased * est.avg_interval_min);
    const double zec = 0.242 * 2.40;
    const bool identity_ok = identity_gap <= 1e-9 && std::fabs(zec - 0.58) < 0.005;
    const double secs = t.seconds();
    report("4", "latency recovery", rel <= 0.2 && identity_ok && secs < 60.0,
           fmtn("8 miners: %.2f s, CI [%.2f, %.2f] vs 30 s (rel err %.3f, tol 0.20); identity gap %.2g (tol 1e-9); "
                "0.242 x 2.40 = %.4f; %.1f s",
                seconds, est.ci_low * 60.0, est.ci_high * 60.0, rel, identity_gap, zec, secs));

    sim::SimConfig two = cfg;
    two.miners = sim::equal_miners(2);
    const auto est2 = latency(simulate_dataset(two), {});
    info(fmtn("(info) same delay with 2 equal miners: %.2f s; the estimate depends on the miner mix",
              est2.latency_min * 60.0));
}

// 5. Orphan fraction vs 1 - exp(-d/t), d/t in {0.05, 0.1, 0.2}, 100k blocks.
void orphan_rate_consistency() {
    Timer t;
    bool ok = true;
    std::string detail = "50 equal miners:";
    int k = 0;
    for (double ratio : {0.05, 0.1, 0.2}) {
        sim::SimConfig cfg;
        cfg.miners = sim::equal_miners(50);
        cfg.delay = sim::UniformDelay{ratio * cfg.target_interval};
        cfg.horizon = 100'000;
        cfg.seed = 500 + static_cast<std::uint64_t>(k++);
        const auto tr = sim::simulate(cfg);
        const double formula = orphan_rate_check(ratio, 1.0);
        const double rel = std::fabs(tr.truth.orphan_rate - formula) / formula;
        ok = ok && rel <= 0.15;
        detail += fmtn(" d/t=%.2f %.4f vs %.4f (rel %.3f);", ratio, tr.truth.orphan_rate, formula, rel);
    }
    report("5", "orphan-rate consistency", ok, detail + fmt(" tol 0.15, %.1f s", t.seconds()));
}

// 6. z-test calibration on 500 zero-delay runs; power at d/t = 0.1.
void ztest_calibration() {
    Timer t;
    std::size_t tests = 0, significant = 0, largest = 0;
    const int runs = 500;
    for (int s = 0; s < runs; ++s) {
        sim::SimConfig cfg;
        cfg.miners = sim::geometric_miners(5, 0.7);
        cfg.horizon = 10'000;
        cfg.seed = 6000 + static_cast<std::uint64_t>(s);
        for (const auto& r : advantage_tests(simulate_dataset(cfg))) {
            ++tests;
            significant += r.significant ? 1 : 0;
        }
        cfg.delay = sim::UniformDelay{0.1 * cfg.target_interval};
        const auto ds = simulate_dataset(cfg);
        largest += advantage_test(ds, ds.miners.front()).significant ? 1 : 0;
    }
    const double rate = static_cast<double>(significant) / static_cast<double>(tests);
    const double power = static_cast<double>(largest) / runs;
    report("6", "z-test calibration", std::fabs(rate - 0.05) <= 0.02 && power >= 0.95,
           fmtn("null rate %.4f over %zu tests (want 0.05 +/- 0.02); largest miner flagged %.3f at d/t=0.1 "
                "(want >= 0.95); %.1f s",
                rate, tests, power, t.seconds()));
}

// 7. Knee in the size-delay curve at X bytes.
void safe_envelope_detection() {
    Timer t;
    const std::uint64_t X = 1'000'000, width = 100'000;
    sim::BlockSizeModel sizes;
    for (std::uint64_t k = 0; k < 20; ++k) sizes.samples.push_back(k * width + width / 2);
    const std::size_t n = 8;
    auto base_cfg = [&](std::uint64_t seed) {
        sim::SimConfig cfg;
        cfg.miners = sim::geometric_miners(n, 0.8);
        cfg.block_size = sizes;
        cfg.horizon = 50'000;
        cfg.seed = seed;
        return cfg;
    };
    EnvelopeOptions opt;
    opt.edges = uniform_edges(width, 2 * X - 1);
    int within = 0, unbounded = 0;
    std::string bounds;
    for (int s = 0; s < 10; ++s) {
        auto cfg = base_cfg(700 + static_cast<std::uint64_t>(s));
        // 6 s everywhere, plus 1 s per 400 bytes above X: the first bin past
        // X already costs 125 s, over 20% of the interval.
        SquareMatrix base(n, 6.0);
        for (std::size_t i = 0; i < n; ++i) base(i, i) = 0.0;
        cfg.delay = sim::SizeDependentDelay{base, SquareMatrix(n, 400.0), X};
        const auto ds = simulate_dataset(cfg);
        opt.bootstrap.seed = 7000 + static_cast<std::uint64_t>(s);
        const auto curve = envelope_curve(ds, power_distribution(ds).shares, opt);
        const auto& env = curve.safe_envelope;
        const bool hit = env.bounded && std::llabs(static_cast<long long>(env.hi_bytes) - static_cast<long long>(X)) <=
                                            static_cast<long long>(width);
        within += hit ? 1 : 0;
        bounds += env.bounded ? " " + std::to_string(env.hi_bytes / 1000) + "k" : " none";

        auto flat = base_cfg(800 + static_cast<std::uint64_t>(s));
        flat.delay = sim::UniformDelay{60.0};
        const auto fds = simulate_dataset(flat);
        const auto fcurve = envelope_curve(fds, power_distribution(fds).shares, opt);
        unbounded += fcurve.safe_envelope.bounded ? 0 : 1;
    }
    report("7", "safe envelope detection", within == 10 && unbounded >= 9,
           fmtn("knee at %llu: boundary within one bin in %d/10 (want 10/10; ends:%s); size-independent unbounded "
                "%d/10 (want >= 9); %.1f s",
                static_cast<unsigned long long>(X), within, bounds.c_str(), unbounded, t.seconds()));
}

// 8. Injected 2-miner cartel: intra-cartel delay 0, others 0.2 t.
void cartel_detection() {
    Timer t;
    int caught = 0, false_flags = 0;
    for (int s = 0; s < 20; ++s) {
        sim::SimConfig cfg;
        cfg.miners = sim::equal_miners(8);
        cfg.delay = sim::UniformDelay{0.2 * cfg.target_interval};
        cfg.cartel_groups = {{"miner2", "miner5"}};
        cfg.horizon = 100'000;
        cfg.seed = 900 + static_cast<std::uint64_t>(s);
        const auto ds = simulate_dataset(cfg);
        const auto S = succession_matrix(ds);
        auto rep = pairs_report(S, normalize(S, power_distribution(ds).shares), {1000, cfg.seed});
        const auto flagged = flag_cartels(rep);
        const auto& top = rep.pairs.front();
        const bool is_pair = (top.a == "miner2" && top.b == "miner5") || (top.a == "miner5" && top.b == "miner2");
        caught += (is_pair && top.ci_low > 0.0 && flagged.size() == 1 && top.flagged) ? 1 : 0;

        cfg.cartel_groups.clear();
        cfg.seed += 1000;
        const auto ids = simulate_dataset(cfg);
        const auto iS = succession_matrix(ids);
        auto irep = pairs_report(iS, normalize(iS, power_distribution(ids).shares), {1000, cfg.seed});
        false_flags += static_cast<int>(flag_cartels(irep).size());
    }
    report("8", "cartel detection", caught == 20 && false_flags == 0,
           fmtn("cartel pair alone flagged as top pair with ci_low > 0 in %d/20; false flags on independent runs "
                "%d (threshold %.2f); %.1f s",
                caught, false_flags, kDefaultCartelThreshold, t.seconds()));
}

// 9. Scheduled 50/50 switcher across two simulated chains.
void chain_switching() {
    Timer t;
    const double period = 36'000 * 1.07;
    auto chain = [&](const std::string& tag, double phase, std::uint64_t seed) {
        sim::SimConfig cfg;
        cfg.miners = {{"switcher", 0.3}, {tag + "1", 0.35}, {tag + "2", 0.35}};
        cfg.horizon = 20'000;
        cfg.seed = seed;
        sim::ActivitySchedule sched;
        sched.periodic = sim::ActivitySchedule::Periodic{period, 0.5, phase};
        cfg.schedules["switcher"] = sched;
        return simulate_dataset(cfg);
    };
    const auto a = chain("a", 0.0, 5);
    const auto b = chain("b", period / 2, 6);
    const auto rep = chain_switch_report(a, b, "switcher");
    report("9a", "chain switching flagged", rep.flagged && rep.correlation < -0.2 && rep.exclusivity > 0.8,
           fmtn("correlation %.3f (< -0.2), exclusivity %.3f (> 0.8), %zu active windows of %lld s", rep.correlation,
                rep.exclusivity, rep.active_windows, static_cast<long long>(rep.window_seconds)));

    auto alpha_of = [](const ChainDataset& d) {
        const auto S = succession_matrix(d);
        const auto r = debias(power_distribution(d).shares, diagonal(S));
        return r.alpha[static_cast<std::size_t>(d.miner_index("switcher"))];
    };
    const double aa = alpha_of(a), ab = alpha_of(b);
    report("9b", "switcher alpha negative", aa < 0.0 && ab < 0.0,
           fmtn("alpha on chain A %.4f, chain B %.4f (want both < 0); %.1f s", aa, ab, t.seconds()));
}

// 10. stats subcommand on a dump with average size 812292 B every 570 s.
void goodput_arithmetic() {
    const auto dir = fs::temp_directory_path() / "minerscope_acceptance_stats";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::vector<BlockRecord> recs;
    std::mt19937_64 rng(10);
    for (std::uint64_t k = 0; k < 1001; ++k) {
        // Sizes alternate around the mean so the average is exact.
        std::uint64_t size = 812'292;
        if (k < 1000) size = k % 2 == 0 ? size + 1000 : size - 1000;
        recs.push_back({540'000 + k, 1'533'081'600 + static_cast<std::int64_t>(570 * k), size,
                        "pool" + std::to_string(rng() % 9), false});
    }
    {
        std::ofstream f(dir / "btc.csv");
        f << serialize_dump(recs, DumpFormat::kCsv);
    }
    std::ostringstream out, err;
    const int code = cli::run({"stats", "--input", (dir / "btc.csv").string(), "--out", (dir / "out").string()},
                              out, err);
    bool ok = code == 0;
    double goodput = 0, avg_size = 0, avg_interval = 0;
    if (ok) {
        std::ifstream f(dir / "out" / "stats.json");
        const auto j = nlohmann::json::parse(f)["datasets"][0];
        goodput = j["avg_goodput"].get<double>();
        avg_size = j["avg_size"].get<double>();
        avg_interval = j["avg_interval"].get<double>();
    }
    const double identity = std::fabs(goodput - avg_size / avg_interval) / goodput;
    const double vs_published = std::fabs(goodput - 1423.0) / 1423.0;
    ok = ok && identity <= 1e-12 && std::fabs(goodput - 1425.07) < 0.01 && vs_published <= 0.005;
    report("10", "goodput arithmetic", ok,
           fmtn("avg_size %.1f / avg_interval %.1f = %.2f B/s (identity rel err %.2g); vs 1423 printed: %.3f%% "
                "(tol 0.5%%)",
                avg_size, avg_interval, goodput, identity, 100.0 * vs_published));
    fs::remove_all(dir);
}

}  // namespace

int main(int argc, char** argv) {
    std::set<std::string> expected;
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--expect-fail" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            std::string id;
            while (std::getline(ss, id, ',')) expected.insert(id);
        }
    }

    const std::pair<const char*, void (*)()> criteria[] = {
        {"1", entropy_exactness},    {"2", debias_round_trip},       {"3", debias_on_simulation},
        {"4", latency_recovery},     {"5", orphan_rate_consistency}, {"6", ztest_calibration},
        {"7", safe_envelope_detection}, {"8", cartel_detection},     {"9", chain_switching},
        {"10", goodput_arithmetic},
    };
    for (const auto& [id, run] : criteria) {
        try {
            run();
        } catch (const std::exception& e) {
            report(id, "aborted", false, std::string("exception: ") + e.what());
        }
    }

    std::set<std::string> failed;
    for (const auto& o : outcomes) {
        if (!o.pass) failed.insert(o.id);
    }
    std::printf("\n%zu/%zu criteria pass\n", outcomes.size() - failed.size(), outcomes.size());
    bool as_expected = true;
    for (const auto& id : failed) {
        if (!expected.count(id)) {
            std::printf("unexpected failure: %s\n", id.c_str());
            as_expected = false;
        }
    }
    for (const auto& id : expected) {
        if (!failed.count(id)) {
            std::printf("expected failure now passes: %s\n", id.c_str());
            as_expected = false;
        }
    }
    if (!expected.empty() && as_expected) {
        std::printf("failures match the documented unattainable criteria\n");
    }
    return as_expected ? 0 : 1;
}
