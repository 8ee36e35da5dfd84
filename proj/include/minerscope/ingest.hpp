#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace minerscope {

/// One block's metadata as exported by a block explorer.
struct BlockRecord {
    std::uint64_t height = 0;
    std::int64_t timestamp = 0;  ///< seconds since epoch, set by the miner
    std::uint64_t size = 0;      ///< bytes
    std::string miner;           ///< empty = unclaimed
    bool uncle = false;          ///< auxiliary uncle/orphan record

    bool unclaimed() const noexcept { return miner.empty(); }
    friend bool operator==(const BlockRecord&, const BlockRecord&) = default;
};

enum class DumpFormat { kCsv, kJsonLines };

DumpFormat parse_format(std::string_view name);

/// Sanitized main chain plus the miner index every analysis aligns to.
///
/// `miners` is ordered by descending main-chain share with ties broken
/// lexicographically; matrices and share vectors use this order.
struct ChainDataset {
    std::vector<BlockRecord> records;  // main chain, original order
    std::vector<BlockRecord> uncles;
    std::vector<std::string> miners;
    std::uint64_t dropped_small = 0;
    std::uint64_t dropped_unclaimed = 0;
    double min_share_threshold = 0.01;

    /// Index of `label` in `miners`, or -1 when not retained.
    int miner_index(std::string_view label) const;

    /// Main-chain records whose miner is in the index.
    std::size_t retained_claimed_count() const;
};

struct SummaryStats {
    std::uint64_t max_size = 0;
    double avg_size = 0.0;
    double avg_interval = 0.0;  // seconds
    double avg_goodput = 0.0;   // bytes/s
    double max_goodput = 0.0;   // bytes/s
    std::size_t record_count = 0;
};

/// Parses a CSV or JSON-lines dump. Main-chain heights must be strictly
/// consecutive; uncle rows are exempt. Throws ParseError / IntegrityError.
std::vector<BlockRecord> parse_dump(std::istream& in, DumpFormat format);
std::vector<BlockRecord> parse_dump(std::string_view text, DumpFormat format);

/// Inverse of parse_dump. The uncle column is written only when
/// `with_uncle_column` is set or any record is an uncle.
std::string serialize_dump(const std::vector<BlockRecord>& records, DumpFormat format,
                           bool with_uncle_column = false);

/// Drops miners below `min_share` of main-chain blocks (boundary retained)
/// and, unless `keep_unclaimed`, the unclaimed blocks.
ChainDataset sanitize(const std::vector<BlockRecord>& records, double min_share = 0.01,
                      bool keep_unclaimed = false);

/// Re-sanitizes an existing dataset; prior drop counts carry over.
ChainDataset sanitize(const ChainDataset& dataset, double min_share, bool keep_unclaimed);

SummaryStats summarize(const ChainDataset& dataset);

/// Average block interval measured over the height span of the records,
/// so it stays correct when sanitizing removed blocks in between.
double chain_block_interval(const ChainDataset& dataset);

/// Label normalization applied before counting: trims ASCII whitespace.
/// Case is preserved.
std::string normalize_label(std::string_view raw);

}  // namespace minerscope
