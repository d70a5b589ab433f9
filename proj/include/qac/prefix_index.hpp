#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qac {

struct LookupResult {
    std::string text;
    std::uint64_t frequency = 0;

    bool operator==(const LookupResult&) const = default;
};

/// Immutable prefix-to-completions map.
///
/// Entries are kept sorted by text, so the entries sharing a prefix form one
/// contiguous range found by binary search. A min segment tree over each
/// entry's global rank in (frequency desc, text asc) order lets top_k pull
/// the best k entries of any range in O(k log n) without touching the rest
/// of the subtree.
///
/// Matching is byte-wise on the normalized string, spaces included.
class PrefixIndex {
public:
    PrefixIndex() = default;

    /// Duplicate texts are merged by summing their frequencies. Throws
    /// std::invalid_argument on an empty text or a zero total frequency.
    static PrefixIndex build(std::vector<std::pair<std::string, std::uint64_t>> entries);

    /// At most k entries starting with `prefix`, by (frequency desc, text asc).
    std::vector<LookupResult> top_k(std::string_view prefix, std::size_t k) const;

    /// True when at least one entry starts with `prefix`.
    bool contains_prefix(std::string_view prefix) const;

    std::size_t size() const noexcept { return texts_.size(); }
    bool empty() const noexcept { return texts_.empty(); }

    /// Entries in text order.
    std::vector<LookupResult> entries() const;

    void save(std::ostream& out) const;
    void save(const std::filesystem::path& path) const;
    /// Throws std::runtime_error on bad magic, truncation or invalid entries.
    static PrefixIndex load(std::istream& in);
    static PrefixIndex load(const std::filesystem::path& path);

private:
    std::pair<std::size_t, std::size_t> prefix_range(std::string_view prefix) const;
    /// Position (in text order) of the best-ranked entry in [lo, hi).
    std::size_t best_in(std::size_t lo, std::size_t hi) const;

    std::vector<std::string> texts_;
    std::vector<std::uint64_t> frequencies_;
    std::vector<std::uint32_t> rank_;        // text position -> global rank
    std::vector<std::uint32_t> by_rank_;     // global rank -> text position
    std::vector<std::uint32_t> tree_;        // min-rank segment tree, size 2 * leaves
    std::size_t leaves_ = 0;
};

}  // namespace qac
