#pragma once

#include "minerscope/anomalies.hpp"
#include "minerscope/debias.hpp"
#include "minerscope/decentralization.hpp"
#include "minerscope/ingest.hpp"
#include "minerscope/propagation.hpp"
#include "minerscope/succession.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace minerscope {

enum class ReportFormat { kJson, kCsv, kTsv };

/// Parses a comma-separated list such as "json,csv". Throws ConfigError.
std::vector<ReportFormat> parse_report_formats(std::string_view list);

/// Flat table for the CSV/TSV writers. Cells are already formatted.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

/// Shortest round-trip decimal; empty for NaN.
std::string format_number(double v);

/// CSV quotes cells containing the separator, quotes or newlines; TSV
/// replaces tabs and newlines in cells with spaces.
std::string render_table(const Table& table, ReportFormat format);

/// One subcommand's output: a JSON document plus named tables.
struct Report {
    std::string name;
    nlohmann::json json;
    std::vector<std::pair<std::string, Table>> tables;
};

/// Writes `<name>.json` and/or `<name>[_table].csv|tsv` under `dir`.
/// Returns the written paths relative to `dir`.
std::vector<std::string> write_report(const std::filesystem::path& dir, const Report& report,
                                      const std::vector<ReportFormat>& formats);

nlohmann::json to_json(const SummaryStats& s);
nlohmann::json to_json(const PowerDistribution& p);
nlohmann::json to_json(const AdvantageTestResult& r);
nlohmann::json to_json(const AdvantageMetric& m);
nlohmann::json to_json(const DebiasResult& r, const std::vector<std::string>& labels);
nlohmann::json to_json(const LatencyEstimate& l);
nlohmann::json to_json(const EnvelopeCurve& c);
nlohmann::json to_json(const SnapshotComparison& c);
nlohmann::json to_json(const PairEntry& e);
nlohmann::json to_json(const SwitchReport& r);

/// Row-labelled matrix as {"labels": [...], "rows": [[...], ...]}.
nlohmann::json matrix_json(const std::vector<std::string>& labels, const SquareMatrix& m);

Table matrix_table(const std::vector<std::string>& labels, const SquareMatrix& m);

}  // namespace minerscope
