#include "qac/pipeline.hpp"

namespace qac {

std::vector<Candidate> Pipeline::generate(std::string_view prefix, const PipelineConfig& config) const {
    return qac::generate(config.generator, query_index_, suffix_index_, prefix, config.k);
}

std::vector<Candidate> Pipeline::rank(std::vector<Candidate> candidates,
                                      const PipelineConfig& config) const {
    return rank_candidates(std::move(candidates), model_, config.ranking, config.scorer);
}

}  // namespace qac
