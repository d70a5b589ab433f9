#pragma once

#include <string_view>
#include <vector>

#include "qac/generation.hpp"
#include "qac/model.hpp"
#include "qac/prefix_index.hpp"
#include "qac/ranker.hpp"

namespace qac {

struct PipelineConfig {
    GenerationMode generator = GenerationMode::Mcg;
    RankMode ranking = RankMode::Frequency;
    ScorerKind scorer = ScorerKind::Unnormalized;
    std::size_t k = kDefaultCandidateCap;
};

/// Generate-then-rank over borrowed indexes and an optional model. Holds no
/// mutable state, so one instance can serve concurrent callers.
class Pipeline {
public:
    Pipeline(const PrefixIndex& query_index, const PrefixIndex& suffix_index,
             const LanguageModel* model = nullptr)
        : query_index_(query_index), suffix_index_(suffix_index), model_(model) {}

    /// `prefix` must already be normalized (see normalize_prefix).
    std::vector<Candidate> generate(std::string_view prefix, const PipelineConfig& config) const;
    std::vector<Candidate> rank(std::vector<Candidate> candidates, const PipelineConfig& config) const;
    std::vector<Candidate> run(std::string_view prefix, const PipelineConfig& config) const {
        return rank(generate(prefix, config), config);
    }

    const PrefixIndex& query_index() const noexcept { return query_index_; }
    const PrefixIndex& suffix_index() const noexcept { return suffix_index_; }
    const LanguageModel* model() const noexcept { return model_; }

private:
    const PrefixIndex& query_index_;
    const PrefixIndex& suffix_index_;
    const LanguageModel* model_;
};

}  // namespace qac
