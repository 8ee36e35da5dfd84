#include "minerscope/minesim.hpp"

#include "minerscope/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <set>

namespace minerscope::sim {

bool ActivitySchedule::active_at(double t) const {
    if (periodic) {
        const double pos = std::fmod(t + periodic->phase, periodic->period);
        return (pos < 0 ? pos + periodic->period : pos) < periodic->on_fraction * periodic->period;
    }
    for (const auto& iv : intervals) {
        if (t >= iv.start && t < iv.end) return true;
    }
    return false;
}

namespace {

std::size_t index_of(const SimConfig& c, const std::string& label) {
    for (std::size_t i = 0; i < c.miners.size(); ++i) {
        if (c.miners[i].label == label) return i;
    }
    throw ConfigError("unknown miner label '" + label + "'");
}

void check_matrix(const SquareMatrix& m, std::size_t n, const char* what, bool zero_diag) {
    if (m.n != n) throw ConfigError(std::string(what) + " matrix must be " + std::to_string(n) + "x" + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (!(m(i, j) >= 0.0)) throw ConfigError(std::string(what) + " entries must be non-negative");
        }
        if (zero_diag && m(i, i) != 0.0) throw ConfigError(std::string(what) + " diagonal must be zero");
    }
}

// Cartel membership: group id per miner, -1 when independent.
std::vector<int> cartel_ids(const SimConfig& c) {
    std::vector<int> id(c.miners.size(), -1);
    for (std::size_t g = 0; g < c.cartel_groups.size(); ++g) {
        for (const auto& label : c.cartel_groups[g]) id[index_of(c, label)] = static_cast<int>(g);
    }
    return id;
}

}  // namespace

void validate(const SimConfig& c) {
    if (c.miners.empty()) throw ConfigError("simulation needs at least one miner");
    double total = 0.0;
    std::set<std::string> labels;
    for (const auto& m : c.miners) {
        if (!(m.power > 0.0)) throw ConfigError("miner '" + m.label + "' must have positive hashpower");
        if (m.label.empty()) throw ConfigError("miner labels must be non-empty");
        if (!labels.insert(m.label).second) throw ConfigError("duplicate miner label '" + m.label + "'");
        total += m.power;
    }
    if (std::fabs(total - 1.0) > 1e-12) throw ConfigError("hashpowers must sum to 1");
    if (!(c.target_interval > 0.0)) throw ConfigError("target_interval must be positive");
    if (c.horizon == 0) throw ConfigError("horizon must be positive");
    const std::size_t n = c.miners.size();
    std::visit(
        [n](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UniformDelay>) {
                if (!(d.seconds >= 0.0)) throw ConfigError("delay must be non-negative");
            } else if constexpr (std::is_same_v<T, MatrixDelay>) {
                check_matrix(d.seconds, n, "delay", true);
            } else {
                check_matrix(d.base, n, "base delay", true);
                check_matrix(d.bandwidth, n, "bandwidth", false);
            }
        },
        c.delay);
    cartel_ids(c);
    for (const auto& [label, s] : c.schedules) {
        index_of(c, label);
        if (s.periodic) {
            if (!(s.periodic->period > 0.0)) throw ConfigError("schedule period must be positive");
            if (!(s.periodic->on_fraction > 0.0 && s.periodic->on_fraction <= 1.0)) {
                throw ConfigError("schedule on_fraction must lie in (0, 1]");
            }
        }
        for (const auto& iv : s.intervals) {
            if (!(iv.end > iv.start)) throw ConfigError("schedule intervals must have end > start");
        }
    }
    if (!c.block_size.samples.empty() && c.block_size.samples.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw ConfigError("too many block size samples");
    }
}

double delay_seconds(const SimConfig& c, std::size_t from, std::size_t to, std::uint64_t size) {
    if (from == to) return 0.0;
    return std::visit(
        [&](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UniformDelay>) {
                return d.seconds;
            } else if constexpr (std::is_same_v<T, MatrixDelay>) {
                return d.seconds(from, to);
            } else {
                const double extra = size > d.free_bytes ? static_cast<double>(size - d.free_bytes) : 0.0;
                const double bw = d.bandwidth(from, to);
                return d.base(from, to) + (std::isinf(bw) || extra == 0.0 ? 0.0 : extra / bw);
            }
        },
        c.delay);
}

namespace {

struct Event {
    double time;
    std::uint64_t seq;
    std::uint32_t block;  // delivery payload
    std::uint32_t target;
    bool mine;

    bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
};

}  // namespace

SimTrace simulate(const SimConfig& config) {
    validate(config);
    const std::size_t n = config.miners.size();
    const auto cartel = cartel_ids(config);
    std::vector<const ActivitySchedule*> schedule(n, nullptr);
    for (const auto& [label, s] : config.schedules) schedule[index_of(config, label)] = &s;

    std::mt19937_64 rng(config.seed);
    std::exponential_distribution<double> gap(1.0 / config.target_interval);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick_size(
        0, config.block_size.samples.empty() ? 0 : config.block_size.samples.size() - 1);

    auto link_delay = [&](std::size_t from, std::size_t to, std::uint64_t size) {
        if (from != to && cartel[from] >= 0 && cartel[from] == cartel[to]) return 0.0;
        return delay_seconds(config, from, to, size);
    };

    SimTrace trace;
    auto& blocks = trace.blocks;
    blocks.reserve(config.horizon + 1);
    blocks.push_back(SimBlock{0, 0, 0, 0.0, 0, 0});
    std::vector<std::uint32_t> head(n, 0);

    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
    std::uint64_t seq = 0;
    std::uint64_t mined = 0;
    queue.push(Event{gap(rng), seq++, 0, 0, true});
    std::vector<double> weight(n);
    double max_delay = 0.0;

    while (!queue.empty()) {
        const Event ev = queue.top();
        queue.pop();
        if (!ev.mine) {
            const auto& b = blocks[ev.block];
            if (b.height > blocks[head[ev.target]].height) head[ev.target] = ev.block;
            continue;
        }
        double active = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool on = schedule[i] == nullptr || schedule[i]->active_at(ev.time);
            weight[i] = on ? config.miners[i].power : 0.0;
            active += weight[i];
        }
        if (!(active > 0.0)) {
            throw ConfigError("no active hashpower at t=" + std::to_string(ev.time) + "s");
        }
        const double u = unit(rng) * active;
        std::size_t winner = n - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += weight[i];
            if (u < acc && weight[i] > 0.0) {
                winner = i;
                break;
            }
        }
        while (weight[winner] == 0.0) --winner;  // u landed on the rounding edge

        const std::uint64_t size =
            config.block_size.samples.empty() ? config.block_size.constant : config.block_size.samples[pick_size(rng)];
        SimBlock nb;
        nb.id = static_cast<std::uint32_t>(blocks.size());
        nb.parent = head[winner];
        nb.height = blocks[nb.parent].height + 1;
        nb.time = ev.time;
        nb.size = size;
        nb.miner = static_cast<std::uint32_t>(winner);
        blocks.push_back(nb);
        head[winner] = nb.id;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == winner) continue;
            const double d = link_delay(winner, j, size);
            max_delay = std::max(max_delay, d);
            queue.push(Event{ev.time + d, seq++, nb.id, static_cast<std::uint32_t>(j), false});
        }
        if (++mined < config.horizon) queue.push(Event{ev.time + gap(rng), seq++, 0, 0, true});
    }

    // Every block has reached every miner; the earliest-mined block of
    // maximal height is the network-wide head.
    std::uint32_t tip = 0;
    for (const auto& b : blocks) {
        if (b.height > blocks[tip].height) tip = b.id;
    }
    std::vector<bool> on_main(blocks.size(), false);
    for (std::uint32_t id = tip; id != 0; id = blocks[id].parent) {
        on_main[id] = true;
        trace.main_ids.push_back(id);
    }
    std::reverse(trace.main_ids.begin(), trace.main_ids.end());

    auto to_record = [&](const SimBlock& b, bool uncle) {
        BlockRecord r;
        r.height = config.start_height + b.height - 1;
        r.timestamp = config.start_timestamp + static_cast<std::int64_t>(std::floor(b.time));
        r.size = b.size;
        r.miner = config.miners[b.miner].label;
        r.uncle = uncle;
        return r;
    };
    for (auto id : trace.main_ids) trace.main_chain.push_back(to_record(blocks[id], false));
    for (std::size_t id = 1; id < blocks.size(); ++id) {
        if (!on_main[id]) trace.orphans.push_back(to_record(blocks[id], true));
    }

    auto& gt = trace.truth;
    for (const auto& m : config.miners) {
        gt.labels.push_back(m.label);
        gt.powers.push_back(m.power);
    }
    gt.mined = mined;
    gt.orphans = trace.orphans.size();
    gt.orphan_rate = static_cast<double>(gt.orphans) / static_cast<double>(mined);
    gt.max_delay = max_delay;
    return trace;
}

std::string export_trace(const SimTrace& trace, DumpFormat format, bool include_orphans) {
    if (!include_orphans) return serialize_dump(trace.main_chain, format);
    auto all = trace.main_chain;
    all.insert(all.end(), trace.orphans.begin(), trace.orphans.end());
    return serialize_dump(all, format, true);
}

namespace {

nlohmann::json matrix_json(const SquareMatrix& m) {
    auto rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.n; ++i) {
        auto row = nlohmann::json::array();
        for (std::size_t j = 0; j < m.n; ++j) {
            const double v = m(i, j);
            row.push_back(std::isinf(v) ? nlohmann::json("inf") : nlohmann::json(v));
        }
        rows.push_back(row);
    }
    return rows;
}

SquareMatrix matrix_from_json(const nlohmann::json& j, std::size_t n, const char* what) {
    if (j.is_number()) {
        SquareMatrix m(n, j.get<double>());
        return m;
    }
    if (j.is_string() && j.get<std::string>() == "inf") {
        return SquareMatrix(n, std::numeric_limits<double>::infinity());
    }
    if (!j.is_array() || j.size() != n) {
        throw ConfigError(std::string(what) + " must be a number or an " + std::to_string(n) + "x" +
                          std::to_string(n) + " array");
    }
    SquareMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!j[i].is_array() || j[i].size() != n) throw ConfigError(std::string(what) + " rows must have " + std::to_string(n) + " entries");
        for (std::size_t k = 0; k < n; ++k) {
            const auto& v = j[i][k];
            m(i, k) = v.is_string() && v.get<std::string>() == "inf" ? std::numeric_limits<double>::infinity()
                                                                      : v.get<double>();
        }
    }
    return m;
}

}  // namespace

SimConfig config_from_json(const nlohmann::json& j) {
    SimConfig c;
    try {
        for (const auto& m : j.at("miners")) c.miners.push_back({m.at("label").get<std::string>(), m.at("power").get<double>()});
        const std::size_t n = c.miners.size();
        c.target_interval = j.value("target_interval", c.target_interval);
        c.horizon = j.value("horizon", c.horizon);
        c.seed = j.value("seed", c.seed);
        c.start_height = j.value("start_height", c.start_height);
        c.start_timestamp = j.value("start_timestamp", c.start_timestamp);
        if (j.contains("delay")) {
            const auto& d = j.at("delay");
            const auto model = d.value("model", std::string("uniform"));
            if (model == "uniform") {
                c.delay = UniformDelay{d.value("seconds", 0.0)};
            } else if (model == "matrix") {
                auto m = matrix_from_json(d.at("seconds"), n, "delay.seconds");
                for (std::size_t i = 0; i < n; ++i) m(i, i) = 0.0;
                c.delay = MatrixDelay{m};
            } else if (model == "size") {
                SizeDependentDelay s;
                s.base = matrix_from_json(d.value("base", nlohmann::json(0.0)), n, "delay.base");
                for (std::size_t i = 0; i < n; ++i) s.base(i, i) = 0.0;
                s.bandwidth = matrix_from_json(d.at("bandwidth"), n, "delay.bandwidth");
                s.free_bytes = d.value("free_bytes", std::uint64_t{0});
                c.delay = s;
            } else {
                throw ConfigError("unknown delay model '" + model + "'");
            }
        }
        if (j.contains("cartels")) c.cartel_groups = j.at("cartels").get<std::vector<std::vector<std::string>>>();
        if (j.contains("schedules")) {
            for (const auto& [label, s] : j.at("schedules").items()) {
                ActivitySchedule sched;
                if (s.contains("period")) {
                    ActivitySchedule::Periodic p;
                    p.period = s.at("period").get<double>();
                    p.on_fraction = s.value("on_fraction", 0.5);
                    p.phase = s.value("phase", 0.0);
                    sched.periodic = p;
                }
                if (s.contains("intervals")) {
                    for (const auto& iv : s.at("intervals")) {
                        sched.intervals.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
                    }
                }
                c.schedules[label] = sched;
            }
        }
        if (j.contains("block_size")) {
            const auto& b = j.at("block_size");
            if (b.contains("samples")) c.block_size.samples = b.at("samples").get<std::vector<std::uint64_t>>();
            c.block_size.constant = b.value("constant", c.block_size.constant);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid simulator config: ") + e.what());
    }
    validate(c);
    return c;
}

nlohmann::json config_to_json(const SimConfig& c) {
    nlohmann::ordered_json j;
    auto miners = nlohmann::ordered_json::array();
    for (const auto& m : c.miners) miners.push_back({{"label", m.label}, {"power", m.power}});
    j["miners"] = miners;
    j["target_interval"] = c.target_interval;
    std::visit(
        [&j](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UniformDelay>) {
                j["delay"] = {{"model", "uniform"}, {"seconds", d.seconds}};
            } else if constexpr (std::is_same_v<T, MatrixDelay>) {
                j["delay"] = {{"model", "matrix"}, {"seconds", matrix_json(d.seconds)}};
            } else {
                j["delay"] = {{"model", "size"},
                              {"base", matrix_json(d.base)},
                              {"bandwidth", matrix_json(d.bandwidth)},
                              {"free_bytes", d.free_bytes}};
            }
        },
        c.delay);
    j["cartels"] = c.cartel_groups;
    auto sched = nlohmann::ordered_json::object();
    for (const auto& [label, s] : c.schedules) {
        nlohmann::ordered_json e;
        if (s.periodic) {
            e["period"] = s.periodic->period;
            e["on_fraction"] = s.periodic->on_fraction;
            e["phase"] = s.periodic->phase;
        }
        if (!s.intervals.empty()) {
            auto ivs = nlohmann::ordered_json::array();
            for (const auto& iv : s.intervals) ivs.push_back({iv.start, iv.end});
            e["intervals"] = ivs;
        }
        sched[label] = e;
    }
    j["schedules"] = sched;
    if (c.block_size.samples.empty()) {
        j["block_size"] = {{"constant", c.block_size.constant}};
    } else {
        j["block_size"] = {{"samples", c.block_size.samples}};
    }
    j["horizon"] = c.horizon;
    j["seed"] = c.seed;
    j["start_height"] = c.start_height;
    j["start_timestamp"] = c.start_timestamp;
    return nlohmann::json::parse(j.dump());
}

nlohmann::json ground_truth_json(const SimTrace& trace, const SimConfig& config) {
    nlohmann::ordered_json j;
    auto powers = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < trace.truth.labels.size(); ++i) powers[trace.truth.labels[i]] = trace.truth.powers[i];
    j["powers"] = powers;
    j["delay"] = config_to_json(config)["delay"];
    j["cartels"] = config.cartel_groups;
    j["mined_blocks"] = trace.truth.mined;
    j["main_chain_blocks"] = trace.main_chain.size();
    j["orphans"] = trace.truth.orphans;
    j["orphan_rate"] = trace.truth.orphan_rate;
    j["max_delay_seconds"] = trace.truth.max_delay;
    j["seed"] = config.seed;
    return nlohmann::json::parse(j.dump());
}

std::vector<MinerSpec> equal_miners(std::size_t count, const std::string& prefix) {
    std::vector<MinerSpec> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back({prefix + std::to_string(i), 1.0 / static_cast<double>(count)});
    // Make the sum exactly representable as 1 within validate()'s tolerance.
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < count; ++i) s += out[i].power;
    if (count > 0) out.back().power = 1.0 - s;
    return out;
}

std::vector<MinerSpec> geometric_miners(std::size_t count, double ratio, const std::string& prefix) {
    std::vector<double> w;
    double total = 0.0, x = 1.0;
    for (std::size_t i = 0; i < count; ++i) {
        w.push_back(x);
        total += x;
        x *= ratio;
    }
    std::vector<MinerSpec> out;
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double p = i + 1 == count ? 1.0 - s : w[i] / total;
        s += p;
        out.push_back({prefix + std::to_string(i), p});
    }
    return out;
}

}  // namespace minerscope::sim
