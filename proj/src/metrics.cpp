#include "qac/metrics.hpp"

#include <cstdio>
#include <stdexcept>

namespace qac {

namespace {

template <typename PerCase>
PartitionMetrics average(const std::vector<EvalCase>& cases, const RankedLists& lists, PerCase per_case) {
    if (cases.size() != lists.size()) throw std::invalid_argument("one ranked list per case required");
    double sum_all = 0.0, sum_seen = 0.0, sum_unseen = 0.0;
    std::size_t n_seen = 0, n_unseen = 0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        double value = per_case(cases[i], lists[i]);
        sum_all += value;
        if (cases[i].seen) {
            sum_seen += value;
            ++n_seen;
        } else {
            sum_unseen += value;
            ++n_unseen;
        }
    }
    auto mean = [](double sum, std::size_t n) { return n == 0 ? 0.0 : sum / static_cast<double>(n); };
    return {mean(sum_all, cases.size()), mean(sum_seen, n_seen),
            mean(sum_unseen, n_unseen)};
}

std::string fixed4(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.4f", value);
    return buffer;
}

}  // namespace

std::size_t rank_of(const std::vector<std::string>& list, const std::string& target, std::size_t k) {
    for (std::size_t i = 0; i < list.size() && i < k; ++i) {
        if (list[i] == target) return i + 1;
    }
    return 0;
}

PartitionMetrics recall_at_k(const std::vector<EvalCase>& cases, const RankedLists& lists, std::size_t k) {
    return average(cases, lists, [k](const EvalCase& c, const std::vector<std::string>& list) {
        return rank_of(list, c.target, k) > 0 ? 1.0 : 0.0;
    });
}

PartitionMetrics mrr_at_k(const std::vector<EvalCase>& cases, const RankedLists& lists, std::size_t k) {
    return average(cases, lists, [k](const EvalCase& c, const std::vector<std::string>& list) {
        std::size_t rank = rank_of(list, c.target, k);
        return rank > 0 ? 1.0 / static_cast<double>(rank) : 0.0;
    });
}

PartitionCounts count_partitions(const std::vector<EvalCase>& cases) {
    PartitionCounts counts;
    for (const auto& c : cases) ++(c.seen ? counts.seen : counts.unseen);
    counts.all = cases.size();
    return counts;
}

std::vector<EvalCase> partition_seen(const std::vector<PrefixSample>& samples,
                                     const PrefixIndex& query_index) {
    std::vector<EvalCase> cases;
    cases.reserve(samples.size());
    for (const auto& sample : samples) {
        cases.push_back({sample.prefix, sample.target, !query_index.top_k(sample.prefix, 1).empty()});
    }
    return cases;
}

EvalResult evaluate(const std::vector<EvalCase>& cases, const Pipeline& pipeline,
                    const PipelineConfig& config) {
    EvalResult result;
    result.lists.reserve(cases.size());
    for (const auto& c : cases) {
        std::vector<std::string> texts;
        for (auto& candidate : pipeline.run(c.prefix, config)) texts.push_back(std::move(candidate.text));
        result.lists.push_back(std::move(texts));
    }
    result.report.recall = recall_at_k(cases, result.lists, config.k);
    result.report.mrr = mrr_at_k(cases, result.lists, config.k);
    result.report.counts = count_partitions(cases);
    return result;
}

std::string report_header() {
    return "generator\tranking\tscorer\trecall_all\trecall_seen\trecall_unseen\t"
           "mrr_all\tmrr_seen\tmrr_unseen\tn_all\tn_seen\tn_unseen";
}

std::string report_row(const PipelineConfig& config, const EvalReport& report) {
    std::string row;
    row += std::string(to_string(config.generator)) + '\t' + std::string(to_string(config.ranking)) + '\t';
    row += config.ranking == RankMode::Frequency ? "-" : std::string(to_string(config.scorer));
    for (double v : {report.recall.all, report.recall.seen, report.recall.unseen, report.mrr.all,
                     report.mrr.seen, report.mrr.unseen}) {
        row += '\t' + fixed4(v);
    }
    for (std::size_t n : {report.counts.all, report.counts.seen, report.counts.unseen}) {
        row += '\t' + std::to_string(n);
    }
    return row;
}

}  // namespace qac
