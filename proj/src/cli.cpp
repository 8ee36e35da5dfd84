#include "minerscope/cli.hpp"

#include "minerscope/anomalies.hpp"
#include "minerscope/debias.hpp"
#include "minerscope/decentralization.hpp"
#include "minerscope/error.hpp"
#include "minerscope/ingest.hpp"
#include "minerscope/minesim.hpp"
#include "minerscope/propagation.hpp"
#include "minerscope/report.hpp"
#include "minerscope/succession.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace minerscope::cli {

namespace fs = std::filesystem;
using nlohmann::json;

const char* version() { return MINERSCOPE_VERSION; }

namespace {

// Bad flag values or combinations that CLI11 cannot check on its own.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::vector<std::string> inputs;
    double min_share = 0.01;
    bool keep_unclaimed = false;
    std::size_t resamples = 1000;
    std::uint64_t seed = 20190601;
    std::string bins;
    std::int64_t window = 0;
    std::string format = "json";
    std::string out = "minerscope-out";
    std::string dump_format;
    std::string miner;
    std::string config;
    double threshold = kDefaultCartelThreshold;
    std::string z_variance = "nested";
    double alpha = 0.05;
    std::string normalization = "biased";
    std::size_t min_pairs = 30;
    std::string significance = "ci";
    bool with_orphans = false;
    bool seed_given = false;
};

json parameters_json(const RunConfig& c) {
    return {{"min_share", c.min_share},
            {"keep_unclaimed", c.keep_unclaimed},
            {"resamples", c.resamples},
            {"seed", c.seed},
            {"bins", c.bins},
            {"window", c.window},
            {"format", c.format},
            {"dump_format", c.dump_format},
            {"miner", c.miner},
            {"threshold", c.threshold},
            {"z_variance", c.z_variance},
            {"alpha", c.alpha},
            {"normalization", c.normalization},
            {"min_pairs", c.min_pairs},
            {"significance", c.significance},
            {"with_orphans", c.with_orphans}};
}

struct Input {
    std::string path;
    std::string bytes;
    std::string sha256;
};

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

Input read_input(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open input '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    Input in{path, ss.str(), ""};
    in.sha256 = sha256_hex(in.bytes);
    return in;
}

DumpFormat dump_format_for(const std::string& path, const std::string& forced) {
    if (!forced.empty()) return parse_format(forced);
    const auto ext = fs::path(path).extension().string();
    if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") return DumpFormat::kJsonLines;
    return DumpFormat::kCsv;
}

std::string iso8601_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<std::uint64_t> parse_edges(const std::string& spec, std::uint64_t max_size) {
    auto to_u64 = [&](const std::string& s) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || s.empty() || s[0] == '-') throw UsageError("--bins: '" + s + "' is not a byte count");
        return static_cast<std::uint64_t>(v);
    };
    if (spec.empty()) {
        const std::uint64_t width = std::max<std::uint64_t>(1, (max_size + 10) / 10);
        return uniform_edges(width, max_size);
    }
    if (spec.find(',') == std::string::npos) {
        const auto width = to_u64(spec);
        if (width == 0) throw UsageError("--bins width must be positive");
        return uniform_edges(width, max_size);
    }
    std::vector<std::uint64_t> edges;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) edges.push_back(to_u64(item));
    if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()) ||
        std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
        throw UsageError("--bins edges must be at least two strictly increasing byte counts");
    }
    return edges;
}

ZVariance z_variance(const std::string& s) {
    if (s == "nested") return ZVariance::kNested;
    if (s == "pooled") return ZVariance::kPooled;
    throw UsageError("--z-variance must be nested or pooled");
}

std::uint64_t max_block_size(const ChainDataset& d) {
    std::uint64_t m = 0;
    for (const auto& r : d.records) m = std::max(m, r.size);
    return m;
}

class Session {
public:
    Session(const RunConfig& config, std::ostream& err) : cfg_(config), err_(err) {}

    void require_inputs(std::size_t n, const std::string& sub) const {
        if (cfg_.inputs.size() != n) {
            throw UsageError(sub + " needs exactly " + std::to_string(n) + " --input file" + (n == 1 ? "" : "s") +
                             " (got " + std::to_string(cfg_.inputs.size()) + ")");
        }
    }

    std::vector<BlockRecord> records(std::size_t k) {
        auto in = read_input(cfg_.inputs.at(k));
        const auto format = dump_format_for(in.path, cfg_.dump_format);
        auto recs = parse_dump(std::string_view(in.bytes), format);
        inputs_.push_back({{"path", in.path}, {"sha256", in.sha256}, {"bytes", in.bytes.size()}});
        return recs;
    }

    ChainDataset dataset(std::size_t k) { return sanitize(records(k), cfg_.min_share, cfg_.keep_unclaimed); }

    BootstrapOptions bootstrap() const { return {cfg_.resamples, cfg_.seed}; }

    void note_input(const Input& in) {
        inputs_.push_back({{"path", in.path}, {"sha256", in.sha256}, {"bytes", in.bytes.size()}});
    }

    void warn(const std::string& msg) const { err_ << "warning: " << msg << "\n"; }

    const RunConfig& cfg() const { return cfg_; }
    const json& inputs() const { return inputs_; }

private:
    const RunConfig& cfg_;
    std::ostream& err_;
    json inputs_ = json::array();
};

Report stats_report(Session& s) {
    if (s.cfg().inputs.empty()) throw UsageError("stats needs at least one --input");
    Report rep{"stats", {{"datasets", json::array()}}, {}};
    Table t{{"input", "record_count", "max_size", "avg_size", "avg_interval", "avg_goodput", "max_goodput"}, {}};
    for (std::size_t k = 0; k < s.cfg().inputs.size(); ++k) {
        const auto ds = sanitize(s.records(k), 0.0, true);
        const auto st = summarize(ds);
        auto j = to_json(st);
        j["input"] = s.cfg().inputs[k];
        rep.json["datasets"].push_back(j);
        t.rows.push_back({s.cfg().inputs[k], std::to_string(st.record_count), std::to_string(st.max_size),
                          format_number(st.avg_size), format_number(st.avg_interval), format_number(st.avg_goodput),
                          format_number(st.max_goodput)});
    }
    rep.tables.emplace_back("", std::move(t));
    return rep;
}

Report entropy_report(Session& s) {
    if (s.cfg().inputs.empty()) throw UsageError("entropy needs at least one --input");
    Report rep{"entropy", {{"datasets", json::array()}}, {}};
    Table t{{"input", "miners", "claimed_blocks", "unclaimed_blocks", "lower_n", "upper_n"}, {}};
    for (std::size_t k = 0; k < s.cfg().inputs.size(); ++k) {
        std::vector<BlockRecord> main;
        for (auto& r : s.records(k)) {
            if (!r.uncle) main.push_back(std::move(r));
        }
        const auto counts = count_miners(main);
        const auto b = effective_miners(counts.claimed, counts.unclaimed);
        std::uint64_t claimed = 0;
        for (const auto& [label, n] : counts.claimed) claimed += n;
        rep.json["datasets"].push_back({{"input", s.cfg().inputs[k]},
                                        {"miners", counts.claimed.size()},
                                        {"claimed_blocks", claimed},
                                        {"unclaimed_blocks", counts.unclaimed},
                                        {"lower_n", b.lower_n},
                                        {"upper_n", b.upper_n}});
        t.rows.push_back({s.cfg().inputs[k], std::to_string(counts.claimed.size()), std::to_string(claimed),
                          std::to_string(counts.unclaimed), format_number(b.lower_n), format_number(b.upper_n)});
    }
    rep.tables.emplace_back("", std::move(t));
    return rep;
}

Report advantage_report(Session& s) {
    s.require_inputs(1, "advantage-test");
    const auto ds = s.dataset(0);
    const auto variance = z_variance(s.cfg().z_variance);
    std::vector<AdvantageTestResult> results;
    if (!s.cfg().miner.empty()) {
        results.push_back(advantage_test(ds, s.cfg().miner, variance, s.cfg().alpha));
    } else {
        results = advantage_tests(ds, variance, s.cfg().alpha);
    }
    Report rep{"advantage_test", {}, {}};
    json tests = json::array();
    Table t{{"miner", "p1", "p2", "n1", "n2", "z", "p_value", "significant"}, {}};
    std::size_t significant = 0;
    for (const auto& r : results) {
        tests.push_back(to_json(r));
        significant += r.significant ? 1 : 0;
        t.rows.push_back({r.miner, format_number(r.p1), format_number(r.p2), std::to_string(r.n1),
                          std::to_string(r.n2), format_number(r.z), format_number(r.p_value),
                          r.significant ? "true" : "false"});
    }
    rep.json = {{"variance", to_string(variance)},
                {"alpha", s.cfg().alpha},
                {"tests", tests},
                {"significant_count", significant},
                {"significant_fraction",
                 results.empty() ? 0.0 : static_cast<double>(significant) / static_cast<double>(results.size())}};
    rep.tables.emplace_back("", std::move(t));
    return rep;
}

Report succession_report(Session& s) {
    s.require_inputs(1, "succession");
    const auto ds = s.dataset(0);
    const auto S = succession_matrix(ds);
    const auto pd = power_distribution(ds);
    const auto N = normalize(S, pd.shares);
    SquareMatrix counts(S.size());
    for (std::size_t i = 0; i < S.size(); ++i) {
        for (std::size_t j = 0; j < S.size(); ++j) counts(i, j) = static_cast<double>(S.count(i, j));
    }
    std::vector<bool> defined = S.row_defined;
    Report rep{"succession", {}, {}};
    rep.json = {{"labels", S.order},
                {"shares", pd.shares},
                {"pairs", S.pairs.codes.size()},
                {"row_defined", defined},
                {"counts", matrix_json(S.order, counts)["rows"]},
                {"S", matrix_json(S.order, S.S)["rows"]},
                {"N", matrix_json(S.order, N.N)["rows"]},
                {"trace", S.trace()}};
    rep.tables.emplace_back("S", matrix_table(S.order, S.S));
    rep.tables.emplace_back("counts", matrix_table(S.order, counts));
    rep.tables.emplace_back("N", matrix_table(S.order, N.N));
    return rep;
}

Report metric_report(Session& s) {
    s.require_inputs(1, "metric");
    const auto ds = s.dataset(0);
    const auto& norm = s.cfg().normalization;
    NormalizedSuccession N;
    AdvantageMetric metric;
    std::vector<double> weights;
    if (norm == "biased") {
        const auto S = succession_matrix(ds);
        weights = power_distribution(ds).shares;
        N = normalize(S, weights, Normalization::kBiased);
        metric = advantage_metric(S, N, weights, s.bootstrap());
    } else if (norm == "debiased") {
        auto dm = debiased_metrics(ds, s.bootstrap());
        for (const auto& w : dm.solution.warnings) s.warn(w);
        N = std::move(dm.normalized);
        metric = dm.metric;
        weights = dm.solution.O;
    } else {
        throw UsageError("--normalization must be biased or debiased");
    }
    Report rep{"metric", to_json(metric), {}};
    json miners = json::array();
    Table t{{"miner", "weight", "N_ii"}, {}};
    for (std::size_t i = 0; i < N.order.size(); ++i) {
        miners.push_back({{"miner", N.order[i]}, {"weight", weights[i]}, {"N_ii", N.N(i, i)}});
        t.rows.push_back({N.order[i], format_number(weights[i]), format_number(N.N(i, i))});
    }
    rep.json["miners"] = miners;
    rep.tables.emplace_back("", std::move(t));
    return rep;
}

Report debias_report(Session& s) {
    s.require_inputs(1, "debias");
    const auto ds = s.dataset(0);
    const auto dm = debiased_metrics(ds, s.bootstrap());
    for (const auto& w : dm.solution.warnings) s.warn(w);
    const auto S = succession_matrix(ds);
    Report rep{"debias", to_json(dm.solution, dm.biased.labels), {}};
    Table t{{"miner", "B", "S_ii", "O", "alpha"}, {}};
    for (std::size_t i = 0; i < dm.biased.labels.size(); ++i) {
        auto& m = rep.json["miners"][i];
        m["B"] = dm.biased.shares[i];
        m["S_ii"] = S.S(i, i);
        t.rows.push_back({dm.biased.labels[i], format_number(dm.biased.shares[i]), format_number(S.S(i, i)),
                          format_number(dm.solution.O[i]), format_number(dm.solution.alpha[i])});
    }
    rep.json["metric"] = to_json(dm.metric);
    if (!ds.uncles.empty()) {
        rep.json["uncle_inclusive"] = to_json(uncle_inclusive_power(ds));
    } else {
        rep.json["uncle_inclusive"] = nullptr;
    }
    rep.tables.emplace_back("", std::move(t));
    return rep;
}

Report latency_report(Session& s) {
    s.require_inputs(1, "latency");
    const auto recs = s.records(0);
    const auto ds = sanitize(recs, s.cfg().min_share, s.cfg().keep_unclaimed);
    const auto est = latency(ds, s.bootstrap());
    std::size_t uncles = 0;
    for (const auto& r : recs) uncles += r.uncle ? 1 : 0;
    Report rep{"latency", to_json(est), {}};
    rep.json["implied_orphan_rate"] = orphan_rate_check(est.latency_min, est.avg_interval_min);
    if (uncles > 0) {
        rep.json["observed_uncle_rate"] = static_cast<double>(uncles) / static_cast<double>(recs.size());
    } else {
        rep.json["observed_uncle_rate"] = nullptr;
    }
    rep.tables.emplace_back("", Table{{"avg_interval_min", "latency_min", "ci_low", "ci_high", "implied_orphan_rate"},
                                      {{format_number(est.avg_interval_min), format_number(est.latency_min),
                                        format_number(est.ci_low), format_number(est.ci_high),
                                        format_number(rep.json["implied_orphan_rate"].get<double>())}}});
    return rep;
}

EnvelopeOptions envelope_options(const Session& s, std::uint64_t max_size) {
    EnvelopeOptions opt;
    opt.edges = parse_edges(s.cfg().bins, max_size);
    opt.min_pairs_per_miner = s.cfg().min_pairs;
    opt.bootstrap = s.bootstrap();
    opt.alpha = s.cfg().alpha;
    if (s.cfg().significance == "ci") {
        opt.significance = EnvelopeSignificance::kCiOverlap;
    } else if (s.cfg().significance == "bootstrap") {
        opt.significance = EnvelopeSignificance::kBootstrapTest;
    } else {
        throw UsageError("--significance must be ci or bootstrap");
    }
    return opt;
}

Table envelope_table(const EnvelopeCurve& c) {
    Table t{{"lo_bytes", "hi_bytes", "defined", "D", "ci_low", "ci_high", "pair_count", "miners_used", "significant"},
            {}};
    for (const auto& b : c.bins) {
        t.rows.push_back({std::to_string(b.lo_bytes), std::to_string(b.hi_bytes), b.defined ? "true" : "false",
                          format_number(b.D), format_number(b.ci_low), format_number(b.ci_high),
                          std::to_string(b.pair_count), std::to_string(b.miners_used),
                          b.significant ? "true" : "false"});
    }
    return t;
}

Report envelope_report(Session& s) {
    s.require_inputs(1, "envelope");
    const auto ds = s.dataset(0);
    const auto m = power_distribution(ds).shares;
    const auto curve = envelope_curve(ds, m, envelope_options(s, max_block_size(ds)));
    Report rep{"envelope", to_json(curve), {}};
    rep.tables.emplace_back("", envelope_table(curve));
    return rep;
}

Report compare_envelope_report(Session& s) {
    s.require_inputs(2, "compare-envelope");
    const auto a = s.dataset(0);
    const auto b = s.dataset(1);
    const auto opt = envelope_options(s, std::max(max_block_size(a), max_block_size(b)));
    const auto ca = envelope_curve(a, power_distribution(a).shares, opt);
    const auto cb = envelope_curve(b, power_distribution(b).shares, opt);
    const auto cmp = compare_snapshots(ca, cb);
    Report rep{"compare_envelope", {{"a", to_json(ca)}, {"b", to_json(cb)}, {"comparison", to_json(cmp)}}, {}};
    Table t{{"lo_bytes", "hi_bytes", "delta", "ci_low", "ci_high", "verdict"}, {}};
    for (const auto& bin : cmp.bins) {
        t.rows.push_back({std::to_string(bin.lo_bytes), std::to_string(bin.hi_bytes), format_number(bin.delta),
                          format_number(bin.ci_low), format_number(bin.ci_high), to_string(bin.verdict)});
    }
    rep.tables.emplace_back("", std::move(t));
    return rep;
}

Report cartels_report(Session& s) {
    s.require_inputs(1, "cartels");
    const auto ds = s.dataset(0);
    const auto S = succession_matrix(ds);
    const auto N = normalize(S, power_distribution(ds).shares);
    auto pr = pairs_report(S, N, s.bootstrap());
    const auto flagged = flag_cartels(pr, s.cfg().threshold);
    json pairs = json::array();
    json flags = json::array();
    Table t{{"a", "b", "P", "ci_low", "ci_high", "flagged"}, {}};
    for (const auto& e : pr.pairs) {
        pairs.push_back(to_json(e));
        t.rows.push_back({e.a, e.b, format_number(e.P), format_number(e.ci_low), format_number(e.ci_high),
                          e.flagged ? "true" : "false"});
    }
    for (const auto& e : flagged) flags.push_back(to_json(e));
    Report rep{"cartels",
               {{"threshold", pr.threshold},
                {"pairs", pairs},
                {"flagged", flags},
                {"matrix", matrix_json(pr.matrix.order, pr.matrix.P)}},
               {}};
    rep.tables.emplace_back("", std::move(t));
    rep.tables.emplace_back("matrix", matrix_table(pr.matrix.order, pr.matrix.P));
    return rep;
}

json fitted_alpha(const ChainDataset& ds, const std::string& miner) {
    const int k = ds.miner_index(miner);
    if (k < 0) return nullptr;
    try {
        const auto S = succession_matrix(ds);
        std::vector<double> diag;
        for (std::size_t i = 0; i < S.size(); ++i) diag.push_back(S.S(i, i));
        return debias(power_distribution(ds).shares, diag).alpha[static_cast<std::size_t>(k)];
    } catch (const Error&) {
        return nullptr;
    }
}

Report switching_report(Session& s) {
    s.require_inputs(2, "switching");
    if (s.cfg().miner.empty()) throw UsageError("switching needs --miner");
    const auto a = s.dataset(0);
    const auto b = s.dataset(1);
    SwitchOptions opt;
    opt.window_seconds = s.cfg().window;
    const auto sw = chain_switch_report(a, b, s.cfg().miner, opt);
    Report rep{"switching", to_json(sw), {}};
    rep.json["alpha_a"] = fitted_alpha(a, s.cfg().miner);
    rep.json["alpha_b"] = fitted_alpha(b, s.cfg().miner);
    Table t{{"window_start", "count_a", "count_b"}, {}};
    for (const auto& row : sw.timeline) {
        t.rows.push_back({std::to_string(row.window_start), std::to_string(row.count_a), std::to_string(row.count_b)});
    }
    rep.tables.emplace_back("timeline", std::move(t));
    return rep;
}

Report simulate_report(Session& s, const fs::path& out_dir, std::vector<std::string>& extra_outputs) {
    if (s.cfg().config.empty()) throw UsageError("simulate needs --config");
    const auto in = read_input(s.cfg().config);
    s.note_input(in);
    json j;
    try {
        j = json::parse(in.bytes);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    auto config = sim::config_from_json(j);
    if (s.cfg().seed_given) config.seed = s.cfg().seed;
    const auto trace = sim::simulate(config);
    const auto format = s.cfg().dump_format.empty() ? DumpFormat::kCsv : parse_format(s.cfg().dump_format);
    const std::string trace_name = format == DumpFormat::kCsv ? "trace.csv" : "trace.jsonl";
    fs::create_directories(out_dir);
    {
        std::ofstream f(out_dir / trace_name, std::ios::binary);
        if (!f) throw DataError("cannot write " + (out_dir / trace_name).string());
        f << sim::export_trace(trace, format, s.cfg().with_orphans);
    }
    extra_outputs.push_back(trace_name);
    Report rep{"ground_truth", sim::ground_truth_json(trace, config), {}};
    rep.json["config"] = sim::config_to_json(config);
    Table t{{"miner", "power"}, {}};
    for (const auto& m : config.miners) t.rows.push_back({m.label, format_number(m.power)});
    rep.tables.emplace_back("", std::move(t));
    return rep;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"minerscope: proof-of-work miner behaviour analyses and mining-network simulator", "minerscope"};
    app.set_version_flag("--version", std::string(version()));
    app.require_subcommand(1);
    app.fallthrough();

    RunConfig cfg;
    app.add_option("-i,--input", cfg.inputs, "Block dump (CSV or JSON lines); repeat for two-chain commands");
    app.add_option("--min-share", cfg.min_share, "Drop miners below this share of main-chain blocks")
        ->check(CLI::Range(0.0, 0.999999));
    app.add_flag("--keep-unclaimed", cfg.keep_unclaimed, "Keep blocks without a miner label");
    app.add_option("--resamples", cfg.resamples, "Bootstrap resamples")->check(CLI::Range(1, 1000000));
    auto* seed_opt = app.add_option("--seed", cfg.seed, "Bootstrap / simulation seed");
    app.add_option("--bins", cfg.bins, "Envelope bin width in bytes, or comma-separated edges");
    app.add_option("--window", cfg.window, "Chain-switching window in seconds (0: automatic)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--format", cfg.format, "Report formats: json,csv,tsv");
    app.add_option("-o,--out", cfg.out, "Output directory");
    app.add_option("--dump-format", cfg.dump_format, "Force input/trace format: csv or jsonl");

    auto* stats = app.add_subcommand("stats", "Size, interval and goodput summary");
    auto* entropy = app.add_subcommand("entropy", "Effective number of miners");
    auto* adv = app.add_subcommand("advantage-test", "Per-miner previous-block-advantage z-test");
    adv->add_option("--miner", cfg.miner, "Test a single miner");
    adv->add_option("--alpha", cfg.alpha, "Significance level")->check(CLI::Range(1e-12, 0.5));
    adv->add_option("--z-variance", cfg.z_variance, "nested (default) or pooled");
    auto* succ = app.add_subcommand("succession", "Successor matrix, counts and normalized matrix");
    auto* metric = app.add_subcommand("metric", "Distance-from-fair metric D with bootstrap interval");
    metric->add_option("--normalization", cfg.normalization, "biased or debiased");
    auto* deb = app.add_subcommand("debias", "Unbiased hashpower and advantage increments");
    auto* lat = app.add_subcommand("latency", "Average propagation latency estimate");
    auto* env = app.add_subcommand("envelope", "Size-binned advantage curve and safe envelope");
    auto* cmp = app.add_subcommand("compare-envelope", "Bin-by-bin change between two snapshots");
    for (auto* sub : {env, cmp}) {
        sub->add_option("--min-pairs", cfg.min_pairs, "Pairs a miner needs in a bin to count")
            ->check(CLI::PositiveNumber);
        sub->add_option("--significance", cfg.significance, "ci or bootstrap");
        sub->add_option("--alpha", cfg.alpha, "Level for the bootstrap test")->check(CLI::Range(1e-12, 0.5));
    }
    auto* cart = app.add_subcommand("cartels", "Pairwise co-succession and cartel flags");
    cart->add_option("--threshold", cfg.threshold, "Flag pairs with P above this and ci_low > 0");
    auto* sw = app.add_subcommand("switching", "Chain-switching report for one miner across two chains");
    sw->add_option("--miner", cfg.miner, "Miner label present on both chains");
    auto* simc = app.add_subcommand("simulate", "Run the mining-network simulator");
    simc->add_option("--config", cfg.config, "Simulator config (JSON)");
    simc->add_flag("--with-orphans", cfg.with_orphans, "Export orphans as uncle rows");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    cfg.seed_given = seed_opt->count() > 0;

    const std::map<CLI::App*, std::function<Report(Session&)>> handlers = {
        {stats, stats_report},         {entropy, entropy_report}, {adv, advantage_report},
        {succ, succession_report},     {metric, metric_report},   {deb, debias_report},
        {lat, latency_report},         {env, envelope_report},    {cmp, compare_envelope_report},
        {cart, cartels_report},        {sw, switching_report},
    };

    CLI::App* sub = app.get_subcommands().front();
    const fs::path out_dir = cfg.out;
    try {
        const auto formats = parse_report_formats(cfg.format);
        Session session(cfg, err);
        std::vector<std::string> outputs;
        Report rep;
        if (sub == simc) {
            rep = simulate_report(session, out_dir, outputs);
        } else {
            rep = handlers.at(sub)(session);
        }
        const auto written = write_report(out_dir, rep, formats);
        outputs.insert(outputs.end(), written.begin(), written.end());

        json manifest = {{"tool", "minerscope"},
                         {"version", version()},
                         {"subcommand", sub->get_name()},
                         {"created", iso8601_now()},
                         {"inputs", session.inputs()},
                         {"parameters", parameters_json(cfg)},
                         {"seed", cfg.seed},
                         {"outputs", outputs}};
        if (sub == simc) manifest["seed"] = rep.json["config"]["seed"];
        std::ofstream mf(out_dir / "manifest.json", std::ios::binary);
        if (!mf) throw DataError("cannot write " + (out_dir / "manifest.json").string());
        mf << manifest.dump(2) << "\n";
        out << sub->get_name() << ": wrote " << outputs.size() + 1 << " file(s) to " << out_dir.string() << "\n";
        return kExitOk;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        // Parameter problems surfaced by the library are usage errors when
        // they come from a flag, data errors when they come from a file.
        err << "error: " << e.what() << "\n";
        return sub == simc ? kExitDataError : kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitDataError;
    }
}

}  // namespace minerscope::cli
