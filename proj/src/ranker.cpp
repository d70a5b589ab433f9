#include "qac/ranker.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace qac {

namespace {

void score_and_sort(std::vector<Candidate>::iterator first, std::vector<Candidate>::iterator last,
                    const LanguageModel& model, ScorerKind scorer) {
    for (auto it = first; it != last; ++it) {
        auto words = model.vocab.encode(it->text);
        it->neural_score = score(scorer, words, model.params);
    }
    // stable_sort keeps input order among equal scores.
    std::stable_sort(first, last, [](const Candidate& a, const Candidate& b) {
        return *a.neural_score > *b.neural_score;
    });
}

}  // namespace

bool needs_model(RankMode mode) { return mode != RankMode::Frequency; }

std::vector<Candidate> rank_candidates(std::vector<Candidate> candidates, const LanguageModel* model,
                                       RankMode mode, ScorerKind scorer) {
    if (mode == RankMode::Frequency) return candidates;
    if (model == nullptr) throw std::invalid_argument("neural ranking requires a model");

    auto first = candidates.begin();
    if (mode == RankMode::Hybrid) {
        first = std::stable_partition(candidates.begin(), candidates.end(), [](const Candidate& c) {
            return c.source == Source::QueryIndex;
        });
    }
    score_and_sort(first, candidates.end(), *model, scorer);
    return candidates;
}

std::string_view to_string(RankMode mode) {
    switch (mode) {
        case RankMode::Frequency: return "frequency";
        case RankMode::Neural: return "neural";
        case RankMode::Hybrid: return "hybrid";
    }
    return "?";
}

RankMode parse_rank_mode(std::string_view name) {
    if (name == "frequency") return RankMode::Frequency;
    if (name == "neural") return RankMode::Neural;
    if (name == "hybrid") return RankMode::Hybrid;
    throw std::invalid_argument("unknown ranking mode: " + std::string(name));
}

}  // namespace qac
