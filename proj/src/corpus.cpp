#include "qac/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <ctime>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

namespace qac {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

char ascii_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

std::uint64_t parse_count(std::string_view text) {
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw std::invalid_argument("bad count field: '" + std::string(text) + "'");
    }
    return value;
}

int parse_fixed_int(std::string_view text, std::size_t pos, std::size_t len) {
    if (pos + len > text.size()) throw std::invalid_argument("truncated timestamp");
    int value = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        char c = text[i];
        if (c < '0' || c > '9') throw std::invalid_argument("non-digit in timestamp");
        value = value * 10 + (c - '0');
    }
    return value;
}

// Byte offsets that start a UTF-8 code point, plus the end offset.
std::vector<std::size_t> code_point_cuts(std::string_view word) {
    std::vector<std::size_t> cuts;
    for (std::size_t i = 1; i <= word.size(); ++i) {
        if (i == word.size() || (static_cast<unsigned char>(word[i]) & 0xC0) != 0x80) {
            cuts.push_back(i);
        }
    }
    return cuts;
}

}  // namespace

std::vector<std::string> normalize_query(std::string_view raw) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : raw) {
        if (is_space(c)) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(ascii_lower(c));
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::string normalized_text(std::string_view raw) { return join_tokens(normalize_query(raw)); }

std::vector<std::string> split_tokens(std::string_view normalized) {
    return normalize_query(normalized);
}

std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin,
                        std::size_t end) {
    end = std::min(end, tokens.size());
    std::string out;
    for (std::size_t i = begin; i < end; ++i) {
        if (i > begin) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

std::vector<LogRecord> dedupe_adjacent(const std::vector<LogRecord>& records) {
    std::vector<LogRecord> out;
    out.reserve(records.size());
    for (const auto& record : records) {
        if (!out.empty() && out.back().query_text == record.query_text) continue;
        out.push_back(record);
    }
    return out;
}

CorpusSplit split_by_time(const std::vector<LogRecord>& records,
                          const std::array<std::int64_t, 3>& boundaries) {
    if (!(boundaries[0] < boundaries[1] && boundaries[1] < boundaries[2])) {
        throw std::invalid_argument("split boundaries must be strictly increasing");
    }
    CorpusSplit split;
    for (const auto& record : records) {
        if (record.timestamp < boundaries[0]) {
            split.background.push_back(record);
        } else if (record.timestamp < boundaries[1]) {
            split.train.push_back(record);
        } else if (record.timestamp < boundaries[2]) {
            split.validation.push_back(record);
        } else {
            split.test.push_back(record);
        }
    }
    return split;
}

QueryCounts count_frequencies(const std::vector<LogRecord>& background) {
    QueryCounts counts;
    for (const auto& record : background) {
        if (!record.query_text.empty()) ++counts[record.query_text];
    }
    std::erase_if(counts, [](const auto& kv) { return kv.second < kMinBackgroundFrequency; });
    return counts;
}

QueryCounts extract_top_suffixes(const QueryCounts& background, std::size_t limit) {
    std::unordered_map<std::string, std::uint64_t> weights;
    for (const auto& [text, frequency] : background) {
        // Every token start is a suffix start.
        for (std::size_t i = 0; i < text.size(); ++i) {
            if (i == 0 || text[i - 1] == ' ') weights[text.substr(i)] += frequency;
        }
    }
    std::vector<std::pair<std::string, std::uint64_t>> ranked(weights.begin(), weights.end());
    auto heavier = [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    };
    if (ranked.size() > limit) {
        std::nth_element(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(limit),
                         ranked.end(), heavier);
        ranked.resize(limit);
    }
    return QueryCounts(ranked.begin(), ranked.end());
}

PrefixSample sample_prefix(std::string_view query, std::mt19937_64& rng) {
    auto tokens = normalize_query(query);
    if (tokens.empty()) return {};
    std::uniform_int_distribution<std::size_t> pick_word(0, tokens.size() - 1);
    std::size_t word = pick_word(rng);
    auto cuts = code_point_cuts(tokens[word]);
    std::uniform_int_distribution<std::size_t> pick_cut(0, cuts.size() - 1);
    std::size_t cut = cuts[pick_cut(rng)];

    std::string prefix = join_tokens(tokens, 0, word);
    if (word > 0) prefix.push_back(' ');
    prefix += tokens[word].substr(0, cut);
    return {std::move(prefix), join_tokens(tokens)};
}

std::vector<TrainingPair> make_training_pairs(const std::vector<std::string>& queries,
                                              const CandidateGenerator& generator,
                                              std::size_t k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<TrainingPair> pairs;
    for (const auto& query : queries) {
        auto sample = sample_prefix(query, rng);
        if (sample.target.empty()) continue;
        auto candidates = generator(sample.prefix);
        if (candidates.size() > k) candidates.resize(k);
        auto hit = std::find(candidates.begin(), candidates.end(), sample.target);
        if (hit == candidates.end()) continue;

        TrainingPair pair{sample.prefix, sample.target, {}};
        for (auto& candidate : candidates) {
            if (candidate != sample.target) pair.negatives.push_back(std::move(candidate));
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

std::vector<LogRecord> preprocess(const std::vector<LogRecord>& raw) {
    std::unordered_map<std::string, std::size_t> session_slot;
    std::vector<std::vector<LogRecord>> sessions;
    for (const auto& record : raw) {
        std::string text = normalized_text(record.query_text);
        if (text.empty()) continue;
        auto [it, inserted] = session_slot.try_emplace(record.session_id, sessions.size());
        if (inserted) sessions.emplace_back();
        sessions[it->second].push_back({record.session_id, std::move(text), record.timestamp});
    }
    std::vector<LogRecord> out;
    for (auto& session : sessions) {
        std::stable_sort(session.begin(), session.end(),
                         [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
        for (auto& record : dedupe_adjacent(session)) out.push_back(std::move(record));
    }
    return out;
}

std::int64_t parse_timestamp(std::string_view text) {
    while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
    while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
    if (text.empty()) throw std::invalid_argument("empty timestamp");

    bool numeric = std::all_of(text.begin(), text.end(), [](char c) {
        return (c >= '0' && c <= '9') || c == '.' || c == '-';
    }) && text.find('-', 1) == std::string_view::npos;
    if (numeric) {
        std::string_view whole = text.substr(0, text.find('.'));
        std::int64_t value = 0;
        auto [ptr, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), value);
        if (ec != std::errc{} || ptr != whole.data() + whole.size()) {
            throw std::invalid_argument("bad epoch timestamp: '" + std::string(text) + "'");
        }
        return value;
    }

    // YYYY-MM-DD[T ]HH:MM:SS with optional trailing Z
    if (text.size() < 19 || text[4] != '-' || text[7] != '-' ||
        (text[10] != 'T' && text[10] != ' ') || text[13] != ':' || text[16] != ':') {
        throw std::invalid_argument("unrecognized timestamp: '" + std::string(text) + "'");
    }
    std::string_view rest = text.substr(19);
    if (!rest.empty() && rest != "Z") {
        throw std::invalid_argument("unsupported timestamp suffix: '" + std::string(text) + "'");
    }
    std::tm tm{};
    tm.tm_year = parse_fixed_int(text, 0, 4) - 1900;
    tm.tm_mon = parse_fixed_int(text, 5, 2) - 1;
    tm.tm_mday = parse_fixed_int(text, 8, 2);
    tm.tm_hour = parse_fixed_int(text, 11, 2);
    tm.tm_min = parse_fixed_int(text, 14, 2);
    tm.tm_sec = parse_fixed_int(text, 17, 2);
    if (tm.tm_mon < 0 || tm.tm_mon > 11 || tm.tm_mday < 1 || tm.tm_mday > 31 ||
        tm.tm_hour > 23 || tm.tm_min > 59 || tm.tm_sec > 60) {
        throw std::invalid_argument("timestamp out of range: '" + std::string(text) + "'");
    }
    return static_cast<std::int64_t>(timegm(&tm));
}

std::vector<LogRecord> read_log(std::istream& in, const LogColumns& columns) {
    std::size_t needed = std::max({columns.session, columns.query, columns.timestamp}) + 1;
    std::vector<LogRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = strip_cr(line);
        if (view.empty()) continue;
        auto fields = split_tabs(view);
        if (fields.size() < needed) {
            throw std::runtime_error("log line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(needed) + " columns");
        }
        std::int64_t timestamp = 0;
        try {
            timestamp = parse_timestamp(fields[columns.timestamp]);
        } catch (const std::invalid_argument&) {
            if (line_no == 1) continue;  // header
            throw std::runtime_error("log line " + std::to_string(line_no) + ": bad timestamp");
        }
        records.push_back({std::string(fields[columns.session]),
                           std::string(fields[columns.query]), timestamp});
    }
    return records;
}

void write_counts(std::ostream& out, const QueryCounts& counts) {
    for (const auto& [text, frequency] : counts) out << text << '\t' << frequency << '\n';
}

QueryCounts read_counts(std::istream& in) {
    QueryCounts counts;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view view = strip_cr(line);
        if (view.empty()) continue;
        auto tab = view.rfind('\t');
        if (tab == std::string_view::npos) throw std::runtime_error("counts line without tab");
        counts[std::string(view.substr(0, tab))] += parse_count(view.substr(tab + 1));
    }
    return counts;
}

void write_pairs(std::ostream& out, const std::vector<TrainingPair>& pairs) {
    for (const auto& pair : pairs) {
        out << pair.prefix << '\t' << pair.positive << '\t';
        for (std::size_t i = 0; i < pair.negatives.size(); ++i) {
            if (i > 0) out << kUnitSeparator;
            out << pair.negatives[i];
        }
        out << '\n';
    }
}

std::vector<TrainingPair> read_pairs(std::istream& in) {
    std::vector<TrainingPair> pairs;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view view = strip_cr(line);
        if (view.empty()) continue;
        auto fields = split_tabs(view);
        if (fields.size() != 3) throw std::runtime_error("pairs line must have 3 columns");
        TrainingPair pair{std::string(fields[0]), std::string(fields[1]), {}};
        std::string_view negatives = fields[2];
        while (!negatives.empty()) {
            auto sep = negatives.find(kUnitSeparator);
            pair.negatives.emplace_back(negatives.substr(0, sep));
            if (sep == std::string_view::npos) break;
            negatives.remove_prefix(sep + 1);
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

void write_samples(std::ostream& out, const std::vector<PrefixSample>& samples) {
    for (const auto& sample : samples) out << sample.prefix << '\t' << sample.target << '\n';
}

std::vector<PrefixSample> read_samples(std::istream& in) {
    std::vector<PrefixSample> samples;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view view = strip_cr(line);
        if (view.empty()) continue;
        auto tab = view.find('\t');
        if (tab == std::string_view::npos) throw std::runtime_error("case line without tab");
        samples.push_back({std::string(view.substr(0, tab)), std::string(view.substr(tab + 1))});
    }
    return samples;
}

}  // namespace qac
