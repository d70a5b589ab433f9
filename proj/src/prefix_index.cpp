#include "qac/prefix_index.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "binary_io.hpp"

namespace qac {

namespace {

constexpr char kIndexMagic[] = "QACIDX1";  // 7 chars + NUL = 8 bytes on disk
constexpr std::size_t kIndexMagicSize = 8;

struct Span {
    std::uint32_t rank;
    std::size_t lo;
    std::size_t hi;
};

}  // namespace

PrefixIndex PrefixIndex::build(std::vector<std::pair<std::string, std::uint64_t>> entries) {
    for (const auto& entry : entries) {
        if (entry.first.empty()) throw std::invalid_argument("prefix index entries must be non-empty");
    }
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    PrefixIndex index;
    for (auto& [text, frequency] : entries) {
        if (!index.texts_.empty() && index.texts_.back() == text) {
            index.frequencies_.back() += frequency;
        } else {
            index.texts_.push_back(std::move(text));
            index.frequencies_.push_back(frequency);
        }
    }
    const std::size_t n = index.texts_.size();
    if (n >= std::numeric_limits<std::uint32_t>::max()) {
        throw std::invalid_argument("prefix index too large");
    }
    for (auto frequency : index.frequencies_) {
        if (frequency == 0) throw std::invalid_argument("prefix index frequencies must be >= 1");
    }

    // Texts are already ascending, so a stable sort on frequency alone yields
    // the (frequency desc, text asc) order.
    index.by_rank_.resize(n);
    for (std::size_t i = 0; i < n; ++i) index.by_rank_[i] = static_cast<std::uint32_t>(i);
    std::stable_sort(index.by_rank_.begin(), index.by_rank_.end(),
                     [&](std::uint32_t a, std::uint32_t b) {
                         return index.frequencies_[a] > index.frequencies_[b];
                     });
    index.rank_.resize(n);
    for (std::size_t r = 0; r < n; ++r) index.rank_[index.by_rank_[r]] = static_cast<std::uint32_t>(r);

    index.leaves_ = n;
    index.tree_.assign(2 * n, 0);
    std::copy(index.rank_.begin(), index.rank_.end(), index.tree_.begin() + static_cast<std::ptrdiff_t>(n));
    for (std::size_t i = n; i-- > 1;) {
        index.tree_[i] = std::min(index.tree_[2 * i], index.tree_[2 * i + 1]);
    }
    return index;
}

std::pair<std::size_t, std::size_t> PrefixIndex::prefix_range(std::string_view prefix) const {
    auto first = std::lower_bound(texts_.begin(), texts_.end(), prefix,
                                  [](const std::string& text, std::string_view p) { return text < p; });
    auto last = std::partition_point(first, texts_.end(), [&](const std::string& text) {
        return std::string_view(text).starts_with(prefix);
    });
    return {static_cast<std::size_t>(first - texts_.begin()),
            static_cast<std::size_t>(last - texts_.begin())};
}

std::size_t PrefixIndex::best_in(std::size_t lo, std::size_t hi) const {
    std::uint32_t best = std::numeric_limits<std::uint32_t>::max();
    for (lo += leaves_, hi += leaves_; lo < hi; lo >>= 1, hi >>= 1) {
        if (lo & 1) best = std::min(best, tree_[lo++]);
        if (hi & 1) best = std::min(best, tree_[--hi]);
    }
    return by_rank_[best];
}

std::vector<LookupResult> PrefixIndex::top_k(std::string_view prefix, std::size_t k) const {
    std::vector<LookupResult> results;
    if (k == 0 || texts_.empty()) return results;
    auto [lo, hi] = prefix_range(prefix);
    if (lo >= hi) return results;

    auto worse = [](const Span& a, const Span& b) { return a.rank > b.rank; };
    std::vector<Span> frontier;
    frontier.reserve(2 * k + 1);
    auto push = [&](std::size_t a, std::size_t b) {
        if (a >= b) return;
        frontier.push_back({rank_[best_in(a, b)], a, b});
        std::push_heap(frontier.begin(), frontier.end(), worse);
    };

    push(lo, hi);
    while (!frontier.empty() && results.size() < k) {
        std::pop_heap(frontier.begin(), frontier.end(), worse);
        Span span = frontier.back();
        frontier.pop_back();
        std::size_t pos = by_rank_[span.rank];
        results.push_back({texts_[pos], frequencies_[pos]});
        push(span.lo, pos);
        push(pos + 1, span.hi);
    }
    return results;
}

bool PrefixIndex::contains_prefix(std::string_view prefix) const {
    auto [lo, hi] = prefix_range(prefix);
    return lo < hi;
}

std::vector<LookupResult> PrefixIndex::entries() const {
    std::vector<LookupResult> out;
    out.reserve(texts_.size());
    for (std::size_t i = 0; i < texts_.size(); ++i) out.push_back({texts_[i], frequencies_[i]});
    return out;
}

void PrefixIndex::save(std::ostream& out) const {
    out.write(kIndexMagic, kIndexMagicSize);
    detail::write_u64(out, texts_.size());
    for (std::size_t i = 0; i < texts_.size(); ++i) {
        detail::write_string(out, texts_[i]);
        detail::write_u64(out, frequencies_[i]);
    }
    if (!out) throw std::runtime_error("failed writing prefix index");
}

void PrefixIndex::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    save(out);
}

PrefixIndex PrefixIndex::load(std::istream& in) {
    detail::expect_magic(in, kIndexMagic, kIndexMagicSize);
    std::uint64_t count = detail::read_u64(in);
    std::vector<std::pair<std::string, std::uint64_t>> entries;
    entries.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
    for (std::uint64_t i = 0; i < count; ++i) {
        std::string text = detail::read_string(in);
        std::uint64_t frequency = detail::read_u64(in);
        entries.emplace_back(std::move(text), frequency);
    }
    try {
        return build(std::move(entries));
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("corrupt prefix index: ") + e.what());
    }
}

PrefixIndex PrefixIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return load(in);
}

}  // namespace qac
