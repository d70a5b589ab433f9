#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qac/prefix_index.hpp"

namespace qac {

enum class Source { QueryIndex, SuffixIndex };

enum class GenerationMode { Mpc, Lwg, Mcg };

struct Candidate {
    std::string text;
    Source source = Source::QueryIndex;
    /// Prefix words that took part in the suffix match; 0 for query-index hits.
    std::size_t context_words_matched = 0;
    std::uint64_t frequency = 0;
    std::optional<double> neural_score;

    bool operator==(const Candidate&) const = default;
};

inline constexpr std::size_t kDefaultCandidateCap = 10;

/// Lowercases, trims leading whitespace and collapses internal runs of
/// whitespace to one space. Trailing whitespace collapses to a single space
/// and is kept, since it marks the last word as complete.
std::string normalize_prefix(std::string_view raw);

/// Splits a normalized prefix on single spaces. The last element is the word
/// being typed and is empty when the prefix ends with a space.
std::vector<std::string> prefix_words(std::string_view prefix);

// All generators take a prefix already passed through normalize_prefix, look
// up at most k entries per index probe, drop repeated texts keeping the first
// occurrence, and cap the result at k.

/// Most frequent background queries starting with the whole prefix.
std::vector<Candidate> mpc(const PrefixIndex& query_index, std::string_view prefix, std::size_t k);

/// mpc, then suffixes matching the last (possibly partial) word, each
/// prepended with the preceding words.
std::vector<Candidate> lwg(const PrefixIndex& query_index, const PrefixIndex& suffix_index,
                           std::string_view prefix, std::size_t k);

/// mpc, then suffix matches for progressively shorter tails of the prefix:
/// drop the first word, look up what is left, prepend the dropped words, and
/// repeat until nothing is left. A one-word prefix is looked up whole.
std::vector<Candidate> mcg(const PrefixIndex& query_index, const PrefixIndex& suffix_index,
                           std::string_view prefix, std::size_t k);

std::vector<Candidate> generate(GenerationMode mode, const PrefixIndex& query_index,
                                const PrefixIndex& suffix_index, std::string_view prefix,
                                std::size_t k);

std::string_view to_string(Source source);
std::string_view to_string(GenerationMode mode);
/// Throws std::invalid_argument for unknown names.
GenerationMode parse_generation_mode(std::string_view name);

}  // namespace qac
