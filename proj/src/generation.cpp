#include "qac/generation.hpp"

#include <algorithm>
#include <stdexcept>

#include "qac/corpus.hpp"

namespace qac {

namespace {

class CandidateList {
public:
    explicit CandidateList(std::size_t cap) : cap_(cap) { items_.reserve(cap); }

    bool full() const { return items_.size() >= cap_; }

    void add(Candidate candidate) {
        if (full()) return;
        auto same = [&](const Candidate& c) { return c.text == candidate.text; };
        if (std::any_of(items_.begin(), items_.end(), same)) return;
        items_.push_back(std::move(candidate));
    }

    std::vector<Candidate> release() && { return std::move(items_); }

private:
    std::size_t cap_;
    std::vector<Candidate> items_;
};

void add_query_hits(CandidateList& list, const PrefixIndex& query_index, std::string_view prefix,
                    std::size_t k) {
    for (auto& hit : query_index.top_k(prefix, k)) {
        list.add({std::move(hit.text), Source::QueryIndex, 0, hit.frequency, std::nullopt});
    }
}

// Suffix hits for words[first..], each prefixed with words[0..first).
void add_suffix_hits(CandidateList& list, const PrefixIndex& suffix_index,
                     const std::vector<std::string>& words, std::size_t first, std::size_t k) {
    std::string tail = join_tokens(words, first);
    if (tail.empty()) return;
    std::string head;
    for (std::size_t i = 0; i < first; ++i) {
        head += words[i];
        head.push_back(' ');
    }
    std::size_t context = static_cast<std::size_t>(
        std::count_if(words.begin() + static_cast<std::ptrdiff_t>(first), words.end(),
                      [](const std::string& w) { return !w.empty(); }));
    for (auto& hit : suffix_index.top_k(tail, k)) {
        list.add({head + hit.text, Source::SuffixIndex, context, hit.frequency, std::nullopt});
    }
}

}  // namespace

std::string normalize_prefix(std::string_view raw) {
    std::string out;
    bool pending_space = false;
    for (char c : raw) {
        bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
        if (space) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
    }
    if (pending_space) out.push_back(' ');
    return out;
}

std::vector<std::string> prefix_words(std::string_view prefix) {
    std::vector<std::string> words;
    std::size_t start = 0;
    while (true) {
        std::size_t space = prefix.find(' ', start);
        if (space == std::string_view::npos) {
            words.emplace_back(prefix.substr(start));
            return words;
        }
        words.emplace_back(prefix.substr(start, space - start));
        start = space + 1;
    }
}

std::vector<Candidate> mpc(const PrefixIndex& query_index, std::string_view prefix, std::size_t k) {
    CandidateList list(k);
    add_query_hits(list, query_index, prefix, k);
    return std::move(list).release();
}

std::vector<Candidate> lwg(const PrefixIndex& query_index, const PrefixIndex& suffix_index,
                           std::string_view prefix, std::size_t k) {
    CandidateList list(k);
    add_query_hits(list, query_index, prefix, k);
    if (!list.full()) {
        auto words = prefix_words(prefix);
        add_suffix_hits(list, suffix_index, words, words.size() - 1, k);
    }
    return std::move(list).release();
}

std::vector<Candidate> mcg(const PrefixIndex& query_index, const PrefixIndex& suffix_index,
                           std::string_view prefix, std::size_t k) {
    CandidateList list(k);
    add_query_hits(list, query_index, prefix, k);
    auto words = prefix_words(prefix);
    for (std::size_t first = words.size() == 1 ? 0 : 1; first < words.size() && !list.full();
         ++first) {
        add_suffix_hits(list, suffix_index, words, first, k);
    }
    return std::move(list).release();
}

std::vector<Candidate> generate(GenerationMode mode, const PrefixIndex& query_index,
                                const PrefixIndex& suffix_index, std::string_view prefix,
                                std::size_t k) {
    switch (mode) {
        case GenerationMode::Mpc: return mpc(query_index, prefix, k);
        case GenerationMode::Lwg: return lwg(query_index, suffix_index, prefix, k);
        case GenerationMode::Mcg: return mcg(query_index, suffix_index, prefix, k);
    }
    return {};
}

std::string_view to_string(Source source) {
    return source == Source::QueryIndex ? "query" : "suffix";
}

std::string_view to_string(GenerationMode mode) {
    switch (mode) {
        case GenerationMode::Mpc: return "mpc";
        case GenerationMode::Lwg: return "lwg";
        case GenerationMode::Mcg: return "mcg";
    }
    return "?";
}

GenerationMode parse_generation_mode(std::string_view name) {
    if (name == "mpc") return GenerationMode::Mpc;
    if (name == "lwg") return GenerationMode::Lwg;
    if (name == "mcg") return GenerationMode::Mcg;
    throw std::invalid_argument("unknown generation mode: " + std::string(name));
}

}  // namespace qac
