#include "minerscope/ingest.hpp"

#include "minerscope/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <istream>
#include <iterator>
#include <map>
#include <sstream>
#include <unordered_set>

namespace minerscope {

namespace {

bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t extra = 0;
        if (c < 0x80) {
            extra = 0;
        } else if ((c >> 5) == 0x6) {
            extra = 1;
            if (c < 0xC2) return false;
        } else if ((c >> 4) == 0xE) {
            extra = 2;
        } else if ((c >> 3) == 0x1E && c <= 0xF4) {
            extra = 3;
        } else {
            return false;
        }
        if (i + extra >= s.size() && extra > 0) return false;
        for (std::size_t k = 1; k <= extra; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc >> 6) != 0x2) return false;
        }
        i += extra + 1;
    }
    return true;
}

template <typename T>
T parse_integer(std::string_view field, std::size_t line, const char* name) {
    T value{};
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || field.empty()) {
        throw ParseError(line, std::string("invalid ") + name + " '" + std::string(field) + "'");
    }
    return value;
}

// Splits one CSV line; supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv(std::string_view line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"') {
            if (!cur.empty() || was_quoted) throw ParseError(line_no, "stray quote");
            quoted = true;
            was_quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
            was_quoted = false;
        } else {
            if (was_quoted) throw ParseError(line_no, "text after closing quote");
            cur.push_back(ch);
        }
    }
    if (quoted) throw ParseError(line_no, "unterminated quote");
    fields.push_back(std::move(cur));
    return fields;
}

bool needs_quotes(std::string_view s) {
    return s.find_first_of(",\"\r\n") != std::string_view::npos ||
           (!s.empty() && (s.front() == ' ' || s.back() == ' '));
}

void append_csv_field(std::string& out, std::string_view s) {
    if (!needs_quotes(s)) {
        out.append(s);
        return;
    }
    out.push_back('"');
    for (char ch : s) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
}

class HeightChecker {
public:
    void check(const BlockRecord& rec, std::size_t line) {
        if (rec.uncle) return;
        if (have_prev_) {
            if (rec.height <= prev_) {
                throw IntegrityError("line " + std::to_string(line) + ": duplicate or out-of-order main-chain height " +
                                     std::to_string(rec.height));
            }
            if (rec.height != prev_ + 1) {
                throw IntegrityError("line " + std::to_string(line) + ": main-chain height gap between " +
                                     std::to_string(prev_) + " and " + std::to_string(rec.height));
            }
        }
        prev_ = rec.height;
        have_prev_ = true;
    }

private:
    std::uint64_t prev_ = 0;
    bool have_prev_ = false;
};

std::string_view strip_cr(std::string_view s) {
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    return s;
}

std::vector<BlockRecord> parse_csv(std::string_view text) {
    std::vector<BlockRecord> out;
    HeightChecker heights;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool header_seen = false;
    bool has_uncle = false;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto end = nl == std::string_view::npos ? text.size() : nl;
        const auto line = strip_cr(text.substr(pos, end - pos));
        ++line_no;
        pos = end + 1;
        if (line.empty()) {
            if (nl == std::string_view::npos) break;
            continue;
        }
        if (!header_seen) {
            const auto cols = split_csv(line, line_no);
            std::vector<std::string> norm;
            for (const auto& c : cols) norm.push_back(normalize_label(c));
            const std::vector<std::string> base{"height", "timestamp", "size", "miner"};
            if (norm == base) {
                has_uncle = false;
            } else if (norm.size() == 5 && std::equal(base.begin(), base.end(), norm.begin()) && norm[4] == "uncle") {
                has_uncle = true;
            } else {
                throw ParseError(line_no, "expected header 'height,timestamp,size,miner[,uncle]'");
            }
            header_seen = true;
            continue;
        }
        const auto fields = split_csv(line, line_no);
        const std::size_t want = has_uncle ? 5 : 4;
        if (fields.size() != want) {
            throw ParseError(line_no, "expected " + std::to_string(want) + " fields, got " +
                                          std::to_string(fields.size()));
        }
        BlockRecord rec;
        rec.height = parse_integer<std::uint64_t>(fields[0], line_no, "height");
        rec.timestamp = parse_integer<std::int64_t>(fields[1], line_no, "timestamp");
        rec.size = parse_integer<std::uint64_t>(fields[2], line_no, "size");
        rec.miner = normalize_label(fields[3]);
        if (has_uncle) {
            const auto u = parse_integer<int>(fields[4], line_no, "uncle flag");
            if (u != 0 && u != 1) throw ParseError(line_no, "uncle flag must be 0 or 1");
            rec.uncle = u == 1;
        }
        heights.check(rec, line_no);
        out.push_back(std::move(rec));
        if (nl == std::string_view::npos) break;
    }
    if (!header_seen) throw ParseError(1, "missing CSV header");
    return out;
}

template <typename T>
T json_integer(const nlohmann::json& obj, const char* key, std::size_t line) {
    const auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(line, std::string("missing key '") + key + "'");
    if (!it->is_number_integer()) throw ParseError(line, std::string("key '") + key + "' must be an integer");
    if constexpr (std::is_unsigned_v<T>) {
        if (it->is_number_unsigned()) return it->template get<T>();
        if (it->template get<std::int64_t>() < 0) throw ParseError(line, std::string("key '") + key + "' is negative");
    }
    return it->template get<T>();
}

std::vector<BlockRecord> parse_jsonl(std::string_view text) {
    std::vector<BlockRecord> out;
    HeightChecker heights;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        const auto end = nl == std::string_view::npos ? text.size() : nl;
        const auto line = strip_cr(text.substr(pos, end - pos));
        ++line_no;
        pos = end + 1;
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
        }
        if (!obj.is_object()) throw ParseError(line_no, "expected a JSON object");
        BlockRecord rec;
        rec.height = json_integer<std::uint64_t>(obj, "height", line_no);
        rec.timestamp = json_integer<std::int64_t>(obj, "timestamp", line_no);
        rec.size = json_integer<std::uint64_t>(obj, "size", line_no);
        const auto miner = obj.find("miner");
        if (miner == obj.end() || !miner->is_string()) throw ParseError(line_no, "key 'miner' must be a string");
        rec.miner = normalize_label(miner->get<std::string>());
        if (const auto u = obj.find("uncle"); u != obj.end()) {
            if (u->is_boolean()) {
                rec.uncle = u->get<bool>();
            } else if (u->is_number_integer() && (u->get<int>() == 0 || u->get<int>() == 1)) {
                rec.uncle = u->get<int>() == 1;
            } else {
                throw ParseError(line_no, "key 'uncle' must be 0 or 1");
            }
        }
        heights.check(rec, line_no);
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace

DumpFormat parse_format(std::string_view name) {
    if (name == "csv") return DumpFormat::kCsv;
    if (name == "jsonl" || name == "json-lines" || name == "jsonlines") return DumpFormat::kJsonLines;
    throw ConfigError("unknown dump format '" + std::string(name) + "'");
}

std::string normalize_label(std::string_view raw) {
    const auto first = raw.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = raw.find_last_not_of(" \t\r\n");
    return std::string(raw.substr(first, last - first + 1));
}

int ChainDataset::miner_index(std::string_view label) const {
    for (std::size_t i = 0; i < miners.size(); ++i) {
        if (miners[i] == label) return static_cast<int>(i);
    }
    return -1;
}

std::size_t ChainDataset::retained_claimed_count() const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [](const BlockRecord& r) { return !r.unclaimed(); }));
}

std::vector<BlockRecord> parse_dump(std::string_view text, DumpFormat format) {
    if (!valid_utf8(text)) throw ParseError(0, "input is not valid UTF-8");
    return format == DumpFormat::kCsv ? parse_csv(text) : parse_jsonl(text);
}

std::vector<BlockRecord> parse_dump(std::istream& in, DumpFormat format) {
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_dump(std::string_view(text), format);
}

std::string serialize_dump(const std::vector<BlockRecord>& records, DumpFormat format, bool with_uncle_column) {
    const bool uncle_col =
        with_uncle_column || std::any_of(records.begin(), records.end(), [](const BlockRecord& r) { return r.uncle; });
    std::string out;
    if (format == DumpFormat::kCsv) {
        out += uncle_col ? "height,timestamp,size,miner,uncle\n" : "height,timestamp,size,miner\n";
        for (const auto& r : records) {
            out += std::to_string(r.height);
            out += ',';
            out += std::to_string(r.timestamp);
            out += ',';
            out += std::to_string(r.size);
            out += ',';
            append_csv_field(out, r.miner);
            if (uncle_col) out += r.uncle ? ",1" : ",0";
            out += '\n';
        }
        return out;
    }
    for (const auto& r : records) {
        nlohmann::ordered_json obj;
        obj["height"] = r.height;
        obj["timestamp"] = r.timestamp;
        obj["size"] = r.size;
        obj["miner"] = r.miner;
        if (uncle_col) obj["uncle"] = r.uncle ? 1 : 0;
        out += obj.dump();
        out += '\n';
    }
    return out;
}

namespace {

ChainDataset sanitize_impl(const std::vector<BlockRecord>& main, const std::vector<BlockRecord>& uncles,
                           double min_share, bool keep_unclaimed, std::uint64_t prior_small,
                           std::uint64_t prior_unclaimed) {
    if (main.empty()) throw DataError("no main-chain records to sanitize");
    if (!(min_share >= 0.0 && min_share < 1.0)) throw ConfigError("min_share must lie in [0, 1)");

    std::map<std::string, std::uint64_t> counts;
    for (const auto& r : main) {
        if (!r.unclaimed()) ++counts[r.miner];
    }
    const double total = static_cast<double>(main.size());
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (const auto& [label, n] : counts) {
        if (static_cast<double>(n) >= min_share * total) kept.emplace_back(label, n);
    }
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });

    ChainDataset ds;
    ds.min_share_threshold = min_share;
    ds.dropped_small = prior_small;
    ds.dropped_unclaimed = prior_unclaimed;
    std::unordered_set<std::string> retained;
    for (const auto& [label, n] : kept) {
        ds.miners.push_back(label);
        retained.insert(label);
    }
    for (const auto& r : main) {
        if (r.unclaimed()) {
            if (keep_unclaimed) {
                ds.records.push_back(r);
            } else {
                ++ds.dropped_unclaimed;
            }
        } else if (retained.contains(r.miner)) {
            ds.records.push_back(r);
        } else {
            ++ds.dropped_small;
        }
    }
    for (const auto& u : uncles) {
        if (retained.contains(u.miner)) ds.uncles.push_back(u);
    }
    if (ds.records.empty()) throw DataError("all records dropped during sanitizing");
    return ds;
}

}  // namespace

ChainDataset sanitize(const std::vector<BlockRecord>& records, double min_share, bool keep_unclaimed) {
    std::vector<BlockRecord> main;
    std::vector<BlockRecord> uncles;
    for (const auto& r : records) (r.uncle ? uncles : main).push_back(r);
    return sanitize_impl(main, uncles, min_share, keep_unclaimed, 0, 0);
}

ChainDataset sanitize(const ChainDataset& dataset, double min_share, bool keep_unclaimed) {
    return sanitize_impl(dataset.records, dataset.uncles, min_share, keep_unclaimed, dataset.dropped_small,
                         dataset.dropped_unclaimed);
}

SummaryStats summarize(const ChainDataset& dataset) {
    const auto& recs = dataset.records;
    if (recs.size() < 2) throw DataError("summary statistics need at least two records");
    SummaryStats st;
    st.record_count = recs.size();
    long double total_size = 0;
    for (const auto& r : recs) {
        total_size += r.size;
        st.max_size = std::max(st.max_size, r.size);
    }
    st.avg_size = static_cast<double>(total_size / recs.size());
    const auto span = recs.back().timestamp - recs.front().timestamp;
    if (span <= 0) throw DataError("degenerate timespan: last timestamp is not after the first");
    st.avg_interval = static_cast<double>(span) / static_cast<double>(recs.size() - 1);
    st.avg_goodput = st.avg_size / st.avg_interval;
    for (std::size_t k = 1; k < recs.size(); ++k) {
        if (recs[k].height != recs[k - 1].height + 1) continue;
        const auto dt = recs[k].timestamp - recs[k - 1].timestamp;
        if (dt <= 0) continue;
        st.max_goodput = std::max(st.max_goodput, static_cast<double>(recs[k].size) / static_cast<double>(dt));
    }
    return st;
}

double chain_block_interval(const ChainDataset& dataset) {
    const auto& recs = dataset.records;
    if (recs.size() < 2) throw DataError("block interval needs at least two records");
    const auto span = recs.back().timestamp - recs.front().timestamp;
    const auto heights = recs.back().height - recs.front().height;
    if (span <= 0 || heights == 0) throw DataError("degenerate timespan: last timestamp is not after the first");
    return static_cast<double>(span) / static_cast<double>(heights);
}

}  // namespace minerscope
