#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace qac {

/// One row of a raw search log.
struct LogRecord {
    std::string session_id;
    std::string query_text;
    std::int64_t timestamp = 0;

    bool operator==(const LogRecord&) const = default;
};

/// Normalized query text (tokens joined by single spaces) with its count.
struct Query {
    std::string text;
    std::uint64_t frequency = 0;

    bool operator==(const Query&) const = default;
};

/// Frequency table keyed by normalized text. Ordered so iteration is deterministic.
using QueryCounts = std::map<std::string, std::uint64_t>;

/// Records partitioned by the half-open windows
/// [-inf, b0), [b0, b1), [b1, b2), [b2, +inf).
struct CorpusSplit {
    std::vector<LogRecord> background;
    std::vector<LogRecord> train;
    std::vector<LogRecord> validation;
    std::vector<LogRecord> test;
};

struct TrainingPair {
    std::string prefix;
    std::string positive;
    std::vector<std::string> negatives;

    bool operator==(const TrainingPair&) const = default;
};

/// A prefix cut out of a full query, together with the query it came from.
struct PrefixSample {
    std::string prefix;
    std::string target;
};

inline constexpr std::uint64_t kMinBackgroundFrequency = 3;
inline constexpr std::size_t kDefaultSuffixLimit = 100000;
inline constexpr char kUnitSeparator = '\x1f';

/// Lowercases ASCII, trims, and splits on runs of whitespace. Punctuation stays
/// inside tokens. All-whitespace input yields an empty list.
std::vector<std::string> normalize_query(std::string_view raw);

/// normalize_query joined back with single spaces.
std::string normalized_text(std::string_view raw);

std::vector<std::string> split_tokens(std::string_view normalized);
std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin = 0,
                        std::size_t end = static_cast<std::size_t>(-1));

/// Collapses runs of identical query_text to their first record. Input must be
/// one session in time order, already normalized.
std::vector<LogRecord> dedupe_adjacent(const std::vector<LogRecord>& records);

/// Throws std::invalid_argument unless boundaries are strictly increasing.
CorpusSplit split_by_time(const std::vector<LogRecord>& records,
                          const std::array<std::int64_t, 3>& boundaries);

/// Per-query counts, dropping anything seen fewer than kMinBackgroundFrequency times.
QueryCounts count_frequencies(const std::vector<LogRecord>& background);

/// Word-aligned suffixes of every background query weighted by query frequency,
/// keeping the `limit` heaviest (ties broken by suffix text ascending).
QueryCounts extract_top_suffixes(const QueryCounts& background, std::size_t limit);

/// Draws a prefix by choosing a word uniformly, then a character cut inside it.
/// The cut may land at the end of the word, giving a complete-word prefix.
PrefixSample sample_prefix(std::string_view query, std::mt19937_64& rng);

using CandidateGenerator = std::function<std::vector<std::string>(const std::string& prefix)>;

/// One prefix per query; a pair is emitted only when the query itself is among
/// the first k generated candidates.
std::vector<TrainingPair> make_training_pairs(const std::vector<std::string>& queries,
                                              const CandidateGenerator& generator,
                                              std::size_t k, std::uint64_t seed);

/// Normalizes every record, drops empty ones, orders each session by time and
/// removes adjacent duplicates. Output is grouped by session, sessions in
/// first-seen order.
std::vector<LogRecord> preprocess(const std::vector<LogRecord>& raw);

// --- log and table I/O -------------------------------------------------------

struct LogColumns {
    std::size_t session = 0;
    std::size_t query = 1;
    std::size_t timestamp = 2;
};

/// AOL 2006 layout: AnonID, Query, QueryTime, ItemRank, ClickURL.
inline constexpr LogColumns kAolColumns{0, 1, 2};

/// Accepts epoch seconds or ISO-8601 "YYYY-MM-DD[T ]HH:MM:SS[Z]" (UTC).
/// Throws std::invalid_argument on anything else.
std::int64_t parse_timestamp(std::string_view text);

/// Reads a tab-separated log. A first line whose timestamp column does not
/// parse is treated as a header and skipped; later malformed lines throw.
std::vector<LogRecord> read_log(std::istream& in, const LogColumns& columns = {});

void write_counts(std::ostream& out, const QueryCounts& counts);
QueryCounts read_counts(std::istream& in);

void write_pairs(std::ostream& out, const std::vector<TrainingPair>& pairs);
std::vector<TrainingPair> read_pairs(std::istream& in);

void write_samples(std::ostream& out, const std::vector<PrefixSample>& samples);
std::vector<PrefixSample> read_samples(std::istream& in);

}  // namespace qac
