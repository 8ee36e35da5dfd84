#include "minerscope/error.hpp"
#include "minerscope/minesim.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace minerscope;

namespace {

sim::SimConfig four_miners(double delay, std::uint64_t horizon, std::uint64_t seed) {
    sim::SimConfig cfg;
    cfg.miners = {{"a", 0.4}, {"b", 0.3}, {"c", 0.2}, {"d", 0.1}};
    cfg.delay = sim::UniformDelay{delay};
    cfg.horizon = horizon;
    cfg.seed = seed;
    return cfg;
}

std::map<std::string, double> main_chain_counts(const sim::SimTrace& t) {
    std::map<std::string, double> c;
    for (const auto& r : t.main_chain) c[r.miner] += 1;
    return c;
}

double advantage(const sim::SimConfig& cfg) {
    const auto ds = sanitize(sim::simulate(cfg).main_chain, 0.0);
    std::vector<double> p;
    for (const auto& label : ds.miners) {
        for (const auto& m : cfg.miners) {
            if (m.label == label) p.push_back(m.power);
        }
    }
    return distance_metric(normalize(succession_matrix(ds), p), p);
}

}  // namespace

TEST_CASE("a single miner never forks") {
    sim::SimConfig cfg;
    cfg.miners = {{"solo", 1.0}};
    cfg.delay = sim::UniformDelay{300.0};
    cfg.horizon = 2000;
    const auto t = sim::simulate(cfg);
    CHECK(t.main_chain.size() == 2000);
    CHECK(t.truth.orphans == 0);
    CHECK(t.truth.orphan_rate == 0.0);
}

TEST_CASE("same config and seed give the same trace") {
    const auto cfg = four_miners(60.0, 3000, 11);
    const auto x = sim::simulate(cfg);
    const auto y = sim::simulate(cfg);
    CHECK(x.main_chain == y.main_chain);
    CHECK(x.orphans == y.orphans);
    auto other = cfg;
    other.seed = 12;
    CHECK_FALSE(sim::simulate(other).main_chain == x.main_chain);
}

TEST_CASE("the main chain is a parent-linked path of consecutive heights") {
    const auto cfg = four_miners(120.0, 5000, 2);
    const auto t = sim::simulate(cfg);
    REQUIRE(t.main_ids.size() == t.main_chain.size());
    CHECK(t.truth.mined == 5000);
    CHECK(t.main_chain.size() + t.orphans.size() == t.truth.mined);
    std::uint32_t parent = 0;
    for (std::size_t k = 0; k < t.main_ids.size(); ++k) {
        const auto& b = t.blocks[t.main_ids[k]];
        CHECK(b.parent == parent);
        CHECK(b.height == k + 1);
        CHECK(t.main_chain[k].height == cfg.start_height + k);
        CHECK(b.time > t.blocks[parent].time);
        parent = b.id;
    }
    for (const auto& o : t.orphans) CHECK(o.uncle);
}

TEST_CASE("with zero delay the main-chain shares match hashpower") {
    const auto cfg = four_miners(0.0, 20'000, 5);
    const auto t = sim::simulate(cfg);
    CHECK(t.truth.orphans == 0);
    const auto counts = main_chain_counts(t);
    const double total = static_cast<double>(t.main_chain.size());
    double chi2 = 0.0;
    for (const auto& m : cfg.miners) {
        const double expected = m.power * total;
        const double got = counts.count(m.label) ? counts.at(m.label) : 0.0;
        CHECK(std::abs(got - expected) < 3.0 * std::sqrt(expected * (1.0 - m.power)));
        chi2 += (got - expected) * (got - expected) / expected;
    }
    // 99.9th percentile of chi-square with 3 degrees of freedom.
    CHECK(chi2 < 16.27);
}

TEST_CASE("the previous-block advantage grows with delay") {
    const double d0 = advantage(four_miners(0.0, 30'000, 9));
    const double d1 = advantage(four_miners(60.0, 30'000, 9));
    const double d2 = advantage(four_miners(180.0, 30'000, 9));
    CHECK(std::abs(d0) < 0.02);
    CHECK(d1 > d0);
    CHECK(d2 > d1);
}

TEST_CASE("two equal miners orphan at the fork rate") {
    sim::SimConfig cfg;
    cfg.miners = sim::equal_miners(2);
    cfg.delay = sim::UniformDelay{60.0};
    cfg.horizon = 100'000;
    cfg.seed = 77;
    const auto t = sim::simulate(cfg);
    // A fork needs the other miner to find a block inside the delay window.
    const double expected = 0.5 * (1.0 - std::exp(-60.0 / 600.0));
    CHECK(std::abs(t.truth.orphan_rate - expected) / expected < 0.15);
}

TEST_CASE("cartel members never orphan each other") {
    sim::SimConfig cfg;
    cfg.miners = {{"a", 0.5}, {"c", 0.5}};
    cfg.delay = sim::UniformDelay{300.0};
    cfg.horizon = 5000;
    CHECK(sim::simulate(cfg).truth.orphans > 0);
    cfg.cartel_groups = {{"a", "c"}};
    CHECK(sim::simulate(cfg).truth.orphans == 0);
    CHECK(sim::delay_seconds(cfg, 0, 1, 1000) == 300.0);
    CHECK(sim::delay_seconds(cfg, 1, 1, 1000) == 0.0);
}

TEST_CASE("size-dependent delay has a knee at free_bytes") {
    auto cfg = four_miners(0.0, 10, 1);
    SquareMatrix base(4, 2.0);
    for (std::size_t i = 0; i < 4; ++i) base(i, i) = 0.0;
    cfg.delay = sim::SizeDependentDelay{base, SquareMatrix(4, 1000.0), 5000};
    CHECK(sim::delay_seconds(cfg, 0, 1, 4000) == doctest::Approx(2.0));
    CHECK(sim::delay_seconds(cfg, 0, 1, 7000) == doctest::Approx(4.0));
}

TEST_CASE("schedules gate a miner's hashpower") {
    sim::ActivitySchedule s;
    s.periodic = sim::ActivitySchedule::Periodic{100.0, 0.25, 0.0};
    CHECK(s.active_at(10.0));
    CHECK_FALSE(s.active_at(30.0));
    CHECK(s.active_at(110.0));

    auto cfg = four_miners(0.0, 4000, 3);
    sim::ActivitySchedule off_early;
    off_early.intervals = {{1e5, 1e12}};
    cfg.schedules["a"] = off_early;
    const auto t = sim::simulate(cfg);
    for (const auto& r : t.main_chain) {
        if (r.timestamp - cfg.start_timestamp < 99'000) CHECK(r.miner != "a");
    }
}

TEST_CASE("exported traces parse back to the same chain") {
    const auto cfg = four_miners(150.0, 3000, 4);
    const auto t = sim::simulate(cfg);
    REQUIRE(t.truth.orphans > 0);
    for (auto format : {DumpFormat::kCsv, DumpFormat::kJsonLines}) {
        const auto with = parse_dump(sim::export_trace(t, format, true), format);
        CHECK(with.size() == t.main_chain.size() + t.orphans.size());
        const auto without = parse_dump(sim::export_trace(t, format, false), format);
        CHECK(without == t.main_chain);
    }
}

TEST_CASE("config json round trip") {
    auto cfg = four_miners(0.0, 1234, 99);
    SquareMatrix d(4, 45.0);
    for (std::size_t i = 0; i < 4; ++i) d(i, i) = 0.0;
    d(0, 3) = std::numeric_limits<double>::infinity();
    cfg.delay = sim::MatrixDelay{d};
    cfg.cartel_groups = {{"a", "b"}};
    cfg.schedules["c"].periodic = sim::ActivitySchedule::Periodic{500.0, 0.5, 20.0};
    cfg.block_size.samples = {10, 20, 30};
    const auto j = sim::config_to_json(cfg);
    const auto back = sim::config_from_json(j);
    CHECK(sim::config_to_json(back) == j);
    CHECK(std::isinf(std::get<sim::MatrixDelay>(back.delay).seconds(0, 3)));
    CHECK(back.horizon == 1234);
    CHECK(back.schedules.at("c").periodic->phase == 20.0);
}

TEST_CASE("invalid configs are rejected") {
    auto bad_sum = four_miners(0.0, 10, 1);
    bad_sum.miners[0].power = 0.5;
    CHECK_THROWS_AS(sim::validate(bad_sum), ConfigError);

    auto dup = four_miners(0.0, 10, 1);
    dup.miners[1].label = "a";
    CHECK_THROWS_AS(sim::validate(dup), ConfigError);

    auto diag = four_miners(0.0, 10, 1);
    diag.delay = sim::MatrixDelay{SquareMatrix(4, 1.0)};
    CHECK_THROWS_AS(sim::validate(diag), ConfigError);

    auto cartel = four_miners(0.0, 10, 1);
    cartel.cartel_groups = {{"a", "zz"}};
    CHECK_THROWS_AS(sim::validate(cartel), ConfigError);

    auto negative = four_miners(-1.0, 10, 1);
    CHECK_THROWS_AS(sim::validate(negative), ConfigError);

    CHECK_THROWS_AS(sim::config_from_json(nlohmann::json{{"target_interval", 600}}), ConfigError);
    CHECK_THROWS_AS(sim::config_from_json(nlohmann::json::parse(
                        R"({"miners":[{"label":"a","power":1}],"delay":{"model":"warp"}})")),
                    ConfigError);
}

TEST_CASE("miner builders normalize hashpower") {
    const auto eq = sim::equal_miners(3);
    CHECK(eq[2].label == "miner2");
    CHECK(eq[0].power == doctest::Approx(1.0 / 3.0));
    const auto geo = sim::geometric_miners(3, 0.5);
    double total = 0.0;
    for (const auto& m : geo) total += m.power;
    CHECK(total == doctest::Approx(1.0));
    CHECK(geo[0].power == doctest::Approx(4.0 / 7.0));
}
