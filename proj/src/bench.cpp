#include "qac/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

#include "qac/ranker.hpp"

namespace qac {

namespace {

double percentile(const std::vector<double>& sorted, double p) {
    auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(sorted.size())));
    return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

std::string fixed(double value, int digits) {
    char buffer[48];
    std::snprintf(buffer, sizeof buffer, "%.*f", digits, value);
    return buffer;
}

}  // namespace

LatencyReport summarize_latencies(std::vector<double> samples_ms) {
    if (samples_ms.empty()) throw std::invalid_argument("no latency samples");
    std::sort(samples_ms.begin(), samples_ms.end());
    LatencyReport report;
    report.runs = samples_ms.size();
    report.mean_ms = std::accumulate(samples_ms.begin(), samples_ms.end(), 0.0) /
                     static_cast<double>(samples_ms.size());
    report.p50_ms = percentile(samples_ms, 0.50);
    report.p95_ms = percentile(samples_ms, 0.95);
    report.p99_ms = percentile(samples_ms, 0.99);
    return report;
}

std::vector<Candidate> make_bench_fixture(const Vocabulary& vocab, std::size_t count, double mean_words,
                                          std::uint64_t seed) {
    if (vocab.size() <= Vocabulary::kSpecialCount) throw std::invalid_argument("vocabulary has no words");
    if (count == 0 || mean_words < 1.0) throw std::invalid_argument("bad fixture shape");
    // Spread round(count * mean_words) words as evenly as possible.
    auto total = static_cast<std::size_t>(std::llround(mean_words * static_cast<double>(count)));
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(Vocabulary::kSpecialCount, vocab.size() - 1);
    std::vector<Candidate> fixture;
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t words = total / count + (i >= count - total % count ? 1 : 0);
        std::string text;
        for (std::size_t w = 0; w < words; ++w) {
            if (w > 0) text.push_back(' ');
            text += vocab.token(static_cast<TokenId>(pick(rng)));
        }
        fixture.push_back({std::move(text), Source::SuffixIndex, 1, count - i, std::nullopt});
    }
    return fixture;
}

LatencyReport bench_ranking(const LanguageModel& model, ScorerKind scorer,
                            const std::vector<Candidate>& fixture, std::size_t runs, std::size_t warmup) {
    if (runs == 0) throw std::invalid_argument("runs must be >= 1");
    for (std::size_t i = 0; i < warmup; ++i) {
        auto ranked = rank_candidates(fixture, &model, RankMode::Neural, scorer);
        (void)ranked;
    }
    std::vector<double> samples;
    samples.reserve(runs);
    for (std::size_t i = 0; i < runs; ++i) {
        auto start = std::chrono::steady_clock::now();
        auto ranked = rank_candidates(fixture, &model, RankMode::Neural, scorer);
        auto stop = std::chrono::steady_clock::now();
        if (ranked.size() != fixture.size()) throw std::logic_error("ranking changed the candidate count");
        samples.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    }
    LatencyReport report = summarize_latencies(std::move(samples));
    report.candidates = fixture.size();
    std::size_t words = 0;
    for (const auto& c : fixture) words += split_tokens(c.text).size();
    report.mean_words = fixture.empty() ? 0.0 : static_cast<double>(words) / static_cast<double>(fixture.size());
    return report;
}

LanguageModel make_random_model(std::size_t vocab_size, std::size_t dim, std::size_t num_layers,
                                std::uint64_t seed) {
    if (vocab_size <= Vocabulary::kSpecialCount) throw std::invalid_argument("vocabulary too small");
    std::vector<std::string> tokens = Vocabulary().tokens();
    for (std::size_t i = tokens.size(); i < vocab_size; ++i) tokens.push_back("w" + std::to_string(i));
    return {Vocabulary::from_tokens(std::move(tokens)), init_params(vocab_size, dim, num_layers, seed)};
}

std::vector<SweepRow> sweep_bench(const std::vector<std::size_t>& dims,
                                  const std::vector<std::size_t>& layers, const SweepData& data,
                                  const TrainConfig& config, std::size_t runs) {
    auto fixture = make_bench_fixture(data.vocab);
    std::vector<SweepRow> rows;
    for (std::size_t num_layers : layers) {
        for (std::size_t dim : dims) {
            TrainConfig local = config;
            local.dim = dim;
            local.num_layers = num_layers;
            LanguageModel model{data.vocab, init_params(data.vocab.size(), dim, num_layers, config.seed)};
            if (!data.train_pairs.empty() && local.epochs > 0) {
                model.params = train_from(std::move(model.params), data.train_pairs, data.validation_pairs,
                                          local)
                                   .params;
            }
            auto latency = bench_ranking(model, ScorerKind::Unnormalized, fixture, runs,
                                         std::min(runs, kDefaultWarmupRuns));
            rows.push_back({dim, num_layers, latency.mean_ms,
                            pairs_mrr(data.validation_pairs, model.params, ScorerKind::Unnormalized)});
        }
    }
    return rows;
}

std::string latency_header() {
    return "method\tmean_ms\tp50_ms\tp95_ms\tp99_ms\truns\tcandidates\tmean_words";
}

std::string latency_row(const std::string& method, const LatencyReport& report) {
    return method + '\t' + fixed(report.mean_ms, 4) + '\t' + fixed(report.p50_ms, 4) + '\t' +
           fixed(report.p95_ms, 4) + '\t' + fixed(report.p99_ms, 4) + '\t' + std::to_string(report.runs) +
           '\t' + std::to_string(report.candidates) + '\t' + fixed(report.mean_words, 2);
}

}  // namespace qac
