#include <algorithm>
#include <stdexcept>

#include "qac/model.hpp"

namespace qac {

namespace {
const std::vector<std::string> kSpecials = {"<sos>", "<eos>", "<unk>"};
}

Vocabulary::Vocabulary() : tokens_(kSpecials) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) ids_.emplace(tokens_[i], static_cast<TokenId>(i));
}

Vocabulary Vocabulary::build(const std::unordered_map<std::string, std::uint64_t>& token_counts,
                             std::size_t max_size) {
    if (max_size < kSpecialCount) throw std::invalid_argument("vocabulary size below special count");
    std::vector<std::pair<std::string, std::uint64_t>> ranked;
    for (const auto& [token, count] : token_counts) {
        if (std::find(kSpecials.begin(), kSpecials.end(), token) != kSpecials.end()) continue;
        ranked.emplace_back(token, count);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::vector<std::string> tokens = kSpecials;
    for (const auto& [token, count] : ranked) {
        if (tokens.size() >= max_size) break;
        tokens.push_back(token);
    }
    return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_pairs(const std::vector<TrainingPair>& pairs, std::size_t max_size) {
    std::unordered_map<std::string, std::uint64_t> counts;
    auto count = [&](const std::string& text) {
        for (auto& token : split_tokens(text)) ++counts[token];
    };
    for (const auto& pair : pairs) {
        count(pair.positive);
        for (const auto& negative : pair.negatives) count(negative);
    }
    return build(counts, max_size);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
    if (tokens.size() < kSpecialCount || !std::equal(kSpecials.begin(), kSpecials.end(), tokens.begin())) {
        throw std::invalid_argument("vocabulary must start with <sos>, <eos>, <unk>");
    }
    Vocabulary vocab;
    vocab.tokens_ = std::move(tokens);
    vocab.ids_.clear();
    vocab.ids_.reserve(vocab.tokens_.size());
    for (std::size_t i = 0; i < vocab.tokens_.size(); ++i) {
        if (!vocab.ids_.emplace(vocab.tokens_[i], static_cast<TokenId>(i)).second) {
            throw std::invalid_argument("duplicate vocabulary token: " + vocab.tokens_[i]);
        }
    }
    return vocab;
}

TokenId Vocabulary::id(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    return it == ids_.end() ? kUnk : it->second;
}

std::vector<TokenId> Vocabulary::encode(std::string_view text, std::size_t max_tokens) const {
    std::vector<TokenId> ids;
    for (auto& token : split_tokens(text)) {
        if (ids.size() >= max_tokens) break;
        ids.push_back(id(token));
    }
    return ids;
}

}  // namespace qac
