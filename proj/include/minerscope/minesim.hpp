#pragma once

#include "minerscope/ingest.hpp"
#include "minerscope/succession.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace minerscope::sim {

struct MinerSpec {
    std::string label;
    double power = 0.0;
};

struct UniformDelay {
    double seconds = 0.0;
};

/// d(i, j) seconds from miner i to miner j.
struct MatrixDelay {
    SquareMatrix seconds;
};

/// base(i, j) + max(0, size - free_bytes) / bandwidth(i, j). With
/// free_bytes = 0 this is the plain base + size/bandwidth model; a positive
/// value puts a knee in the delay curve.
struct SizeDependentDelay {
    SquareMatrix base;
    SquareMatrix bandwidth;  // bytes per second
    std::uint64_t free_bytes = 0;
};

using DelayModel = std::variant<UniformDelay, MatrixDelay, SizeDependentDelay>;

/// When a miner's hardware is pointed at this chain. Either explicit
/// [start, end) intervals in simulation seconds or a periodic duty cycle.
struct ActivitySchedule {
    struct Interval {
        double start;
        double end;
    };
    struct Periodic {
        double period = 0.0;
        double on_fraction = 0.5;
        double phase = 0.0;  // seconds; active when fmod(t + phase, period) < on_fraction * period
    };
    std::vector<Interval> intervals;
    std::optional<Periodic> periodic;

    bool active_at(double t) const;
};

struct BlockSizeModel {
    std::uint64_t constant = 1'000'000;
    std::vector<std::uint64_t> samples;  // drawn uniformly when non-empty
};

struct SimConfig {
    std::vector<MinerSpec> miners;
    double target_interval = 600.0;
    DelayModel delay = UniformDelay{0.0};
    std::vector<std::vector<std::string>> cartel_groups;
    std::map<std::string, ActivitySchedule> schedules;
    BlockSizeModel block_size;
    std::uint64_t horizon = 10'000;  // mined blocks, orphans included
    std::uint64_t seed = 1;
    std::uint64_t start_height = 1;
    std::int64_t start_timestamp = 1'533'081'600;
};

/// Throws ConfigError when the config breaks an invariant.
void validate(const SimConfig& config);

SimConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SimConfig& config);

struct SimBlock {
    std::uint32_t id = 0;
    std::uint32_t parent = 0;
    std::uint64_t height = 0;  // genesis = 0
    double time = 0.0;
    std::uint64_t size = 0;
    std::uint32_t miner = 0;
};

struct GroundTruth {
    std::vector<std::string> labels;
    std::vector<double> powers;
    std::uint64_t mined = 0;
    std::uint64_t orphans = 0;
    double orphan_rate = 0.0;
    double max_delay = 0.0;
};

struct SimTrace {
    std::vector<BlockRecord> main_chain;
    std::vector<BlockRecord> orphans;  // exportable as uncle rows
    GroundTruth truth;
    std::vector<SimBlock> blocks;       // index = id; blocks[0] is genesis
    std::vector<std::uint32_t> main_ids;  // genesis excluded, ascending height
};

/// Global-race discrete-event simulation: one exponential clock with mean
/// target_interval, winner drawn in proportion to active hashpower, blocks
/// delivered after the configured delay, longest chain adopted with
/// first-received tie-breaking. Same config and seed give the same trace.
SimTrace simulate(const SimConfig& config);

/// Delay-model latency from miner `from` to miner `to` for a block of
/// `size` bytes. Cartel links are zeroed separately inside simulate().
double delay_seconds(const SimConfig& config, std::size_t from, std::size_t to, std::uint64_t size);

std::string export_trace(const SimTrace& trace, DumpFormat format, bool include_orphans);

nlohmann::json ground_truth_json(const SimTrace& trace, const SimConfig& config);

/// Convenience builders used by tests, calibration suites and examples.
std::vector<MinerSpec> equal_miners(std::size_t count, const std::string& prefix = "miner");
std::vector<MinerSpec> geometric_miners(std::size_t count, double ratio, const std::string& prefix = "miner");

}  // namespace minerscope::sim
