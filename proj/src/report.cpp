#include "minerscope/report.hpp"

#include "minerscope/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace minerscope {

using nlohmann::json;

std::vector<ReportFormat> parse_report_formats(std::string_view list) {
    std::vector<ReportFormat> out;
    while (!list.empty()) {
        const auto comma = list.find(',');
        auto item = list.substr(0, comma);
        list = comma == std::string_view::npos ? std::string_view{} : list.substr(comma + 1);
        if (item == "json") {
            out.push_back(ReportFormat::kJson);
        } else if (item == "csv") {
            out.push_back(ReportFormat::kCsv);
        } else if (item == "tsv") {
            out.push_back(ReportFormat::kTsv);
        } else {
            throw ConfigError("unknown output format '" + std::string(item) + "' (expected json, csv or tsv)");
        }
    }
    if (out.empty()) throw ConfigError("no output format given");
    return out;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

std::string tsv_cell(std::string s) {
    for (auto& c : s) {
        if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    }
    return s;
}

std::string fmt(double v) { return format_number(v); }

}  // namespace

std::string render_table(const Table& table, ReportFormat format) {
    const bool tsv = format == ReportFormat::kTsv;
    const char sep = tsv ? '\t' : ',';
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += sep;
            out += tsv ? tsv_cell(cells[i]) : csv_cell(cells[i]);
        }
        out += '\n';
    };
    line(table.columns);
    for (const auto& r : table.rows) line(r);
    return out;
}

std::vector<std::string> write_report(const std::filesystem::path& dir, const Report& report,
                                      const std::vector<ReportFormat>& formats) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> written;
    auto put = [&](const std::string& file, const std::string& body) {
        std::ofstream f(dir / file, std::ios::binary);
        if (!f) throw DataError("cannot write " + (dir / file).string());
        f << body;
        written.push_back(file);
    };
    for (auto format : formats) {
        if (format == ReportFormat::kJson) {
            put(report.name + ".json", report.json.dump(2) + "\n");
            continue;
        }
        const char* ext = format == ReportFormat::kCsv ? ".csv" : ".tsv";
        for (const auto& [suffix, table] : report.tables) {
            const auto stem = suffix.empty() ? report.name : report.name + "_" + suffix;
            put(stem + ext, render_table(table, format));
        }
    }
    return written;
}

json to_json(const SummaryStats& s) {
    return {{"record_count", s.record_count}, {"max_size", s.max_size},       {"avg_size", s.avg_size},
            {"avg_interval", s.avg_interval}, {"avg_goodput", s.avg_goodput}, {"max_goodput", s.max_goodput}};
}

json to_json(const PowerDistribution& p) {
    json miners = json::array();
    for (std::size_t i = 0; i < p.labels.size(); ++i) miners.push_back({{"miner", p.labels[i]}, {"share", p.shares[i]}});
    return {{"total_blocks", p.total_blocks}, {"miners", miners}};
}

json to_json(const AdvantageTestResult& r) {
    return {{"miner", r.miner}, {"p1", r.p1}, {"p2", r.p2}, {"n1", r.n1},
            {"n2", r.n2},       {"z", r.z},   {"p_value", r.p_value}, {"significant", r.significant}};
}

json to_json(const AdvantageMetric& m) {
    return {{"D", m.D},
            {"ci_low", m.ci_low},
            {"ci_high", m.ci_high},
            {"normalization", to_string(m.normalization)},
            {"resamples_used", m.resamples_used}};
}

json to_json(const DebiasResult& r, const std::vector<std::string>& labels) {
    json miners = json::array();
    for (std::size_t i = 0; i < r.O.size(); ++i) {
        miners.push_back({{"miner", labels.at(i)}, {"O", r.O[i]}, {"alpha", r.alpha[i]}});
    }
    return {{"miners", miners},
            {"scale", r.scale},
            {"residual", r.residual},
            {"iterations", r.iterations},
            {"warnings", r.warnings}};
}

json to_json(const LatencyEstimate& l) {
    return {{"avg_interval_min", l.avg_interval_min},
            {"latency_min", l.latency_min},
            {"ci_low", l.ci_low},
            {"ci_high", l.ci_high},
            {"resamples_used", l.resamples_used}};
}

json to_json(const EnvelopeCurve& c) {
    json bins = json::array();
    for (const auto& b : c.bins) {
        bins.push_back({{"lo_bytes", b.lo_bytes},
                        {"hi_bytes", b.hi_bytes},
                        {"defined", b.defined},
                        {"D", b.D},
                        {"ci_low", b.ci_low},
                        {"ci_high", b.ci_high},
                        {"pair_count", b.pair_count},
                        {"miners_used", b.miners_used},
                        {"p_vs_baseline", b.p_vs_baseline},
                        {"significant", b.significant}});
    }
    const auto& e = c.safe_envelope;
    return {{"bins", bins},
            {"baseline_bin", c.baseline_bin},
            {"safe_envelope",
             {{"bounded", e.bounded},
              {"lo_bytes", e.lo_bytes},
              {"hi_bytes", e.hi_bytes},
              {"first_significant_bin", e.first_significant_bin}}},
            {"note", c.note}};
}

json to_json(const SnapshotComparison& c) {
    json bins = json::array();
    for (const auto& b : c.bins) {
        bins.push_back({{"lo_bytes", b.lo_bytes},
                        {"hi_bytes", b.hi_bytes},
                        {"delta", b.delta},
                        {"ci_low", b.ci_low},
                        {"ci_high", b.ci_high},
                        {"verdict", to_string(b.verdict)}});
    }
    return {{"bins", bins}, {"improved", c.improved}, {"worsened", c.worsened}, {"indeterminate", c.indeterminate}};
}

json to_json(const PairEntry& e) {
    return {{"a", e.a},           {"b", e.b},             {"P", e.P},
            {"ci_low", e.ci_low}, {"ci_high", e.ci_high}, {"defined", e.defined}, {"flagged", e.flagged}};
}

json to_json(const SwitchReport& r) {
    json timeline = json::array();
    for (const auto& t : r.timeline) timeline.push_back({t.window_start, t.count_a, t.count_b});
    return {{"miner", r.miner},
            {"window_seconds", r.window_seconds},
            {"correlation", r.correlation},
            {"exclusivity", r.exclusivity},
            {"windows", r.windows},
            {"active_windows", r.active_windows},
            {"flagged", r.flagged},
            {"timeline", timeline}};
}

json matrix_json(const std::vector<std::string>& labels, const SquareMatrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.n; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.n; ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return {{"labels", labels}, {"rows", rows}};
}

Table matrix_table(const std::vector<std::string>& labels, const SquareMatrix& m) {
    Table t;
    t.columns.push_back("miner");
    t.columns.insert(t.columns.end(), labels.begin(), labels.end());
    for (std::size_t i = 0; i < m.n; ++i) {
        std::vector<std::string> row{labels[i]};
        for (std::size_t j = 0; j < m.n; ++j) row.push_back(fmt(m(i, j)));
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace minerscope
