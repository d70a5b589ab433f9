#pragma once

#include <string>
#include <vector>

#include "qac/corpus.hpp"
#include "qac/pipeline.hpp"

namespace qac {

struct EvalCase {
    std::string prefix;
    std::string target;
    bool seen = false;
};

struct PartitionMetrics {
    double all = 0.0;
    double seen = 0.0;
    double unseen = 0.0;
};

struct PartitionCounts {
    std::size_t all = 0;
    std::size_t seen = 0;
    std::size_t unseen = 0;
};

struct EvalReport {
    PartitionMetrics recall;
    PartitionMetrics mrr;
    PartitionCounts counts;
};

/// Ranked candidate texts, one list per case.
using RankedLists = std::vector<std::vector<std::string>>;

/// 1-based position of target within the first k entries, 0 if absent.
std::size_t rank_of(const std::vector<std::string>& list, const std::string& target, std::size_t k);

/// Fraction of cases whose target is in the top k. Empty partitions give 0.
PartitionMetrics recall_at_k(const std::vector<EvalCase>& cases, const RankedLists& lists, std::size_t k);

/// Mean of 1/rank for targets within the top k, 0 otherwise.
PartitionMetrics mrr_at_k(const std::vector<EvalCase>& cases, const RankedLists& lists, std::size_t k);

PartitionCounts count_partitions(const std::vector<EvalCase>& cases);

/// A case is seen when the query index has at least one entry for its prefix.
std::vector<EvalCase> partition_seen(const std::vector<PrefixSample>& samples,
                                     const PrefixIndex& query_index);

struct EvalResult {
    EvalReport report;
    RankedLists lists;
};

EvalResult evaluate(const std::vector<EvalCase>& cases, const Pipeline& pipeline,
                    const PipelineConfig& config);

std::string report_header();
/// Tab-separated: generator, ranking, scorer, recall all/seen/unseen,
/// mrr all/seen/unseen, case counts all/seen/unseen.
std::string report_row(const PipelineConfig& config, const EvalReport& report);

}  // namespace qac
