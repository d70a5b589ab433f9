#pragma once

#include <string_view>
#include <vector>

#include "qac/generation.hpp"
#include "qac/model.hpp"
#include "qac/scoring.hpp"

namespace qac {

enum class RankMode { Frequency, Neural, Hybrid };

/// Reorders one generation call's candidates.
///  - Frequency: input order (generation already emits frequency order).
///  - Neural: every candidate scored, sorted by score desc, ties by input position.
///  - Hybrid: query-index candidates keep their order and come first; only
///    suffix-index candidates are scored and sorted.
/// Scored candidates carry neural_score. `model` may be null for Frequency.
std::vector<Candidate> rank_candidates(std::vector<Candidate> candidates, const LanguageModel* model,
                                       RankMode mode, ScorerKind scorer);

bool needs_model(RankMode mode);

std::string_view to_string(RankMode mode);
RankMode parse_rank_mode(std::string_view name);

}  // namespace qac
