#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qac/generation.hpp"
#include "qac/model.hpp"
#include "qac/scoring.hpp"
#include "qac/training.hpp"

namespace qac {

struct LatencyReport {
    double mean_ms = 0.0;
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    double p99_ms = 0.0;
    std::size_t runs = 0;
    std::size_t candidates = 0;
    double mean_words = 0.0;
};

inline constexpr std::size_t kDefaultBenchRuns = 1000;
inline constexpr std::size_t kDefaultWarmupRuns = 50;

/// Mean plus nearest-rank percentiles of the raw samples.
LatencyReport summarize_latencies(std::vector<double> samples_ms);

/// `count` candidates drawn from the vocabulary (specials excluded) whose word
/// counts average `mean_words`; deterministic in `seed`.
std::vector<Candidate> make_bench_fixture(const Vocabulary& vocab, std::size_t count = 10,
                                          double mean_words = 3.2, std::uint64_t seed = 7);

/// Times neural ranking (scoring plus sort) of the whole fixture, one call
/// per run, after `warmup` untimed calls.
LatencyReport bench_ranking(const LanguageModel& model, ScorerKind scorer,
                            const std::vector<Candidate>& fixture, std::size_t runs = kDefaultBenchRuns,
                            std::size_t warmup = kDefaultWarmupRuns);

/// A model with `vocab_size` synthetic tokens and Xavier-initialized weights,
/// for latency work that does not need trained parameters.
LanguageModel make_random_model(std::size_t vocab_size, std::size_t dim, std::size_t num_layers,
                                std::uint64_t seed);

struct SweepRow {
    std::size_t dim = 0;
    std::size_t layers = 0;
    double mean_ms = 0.0;
    double validation_mrr = 0.0;
};

struct SweepData {
    Vocabulary vocab;
    std::vector<EncodedPair> train_pairs;
    std::vector<EncodedPair> validation_pairs;
};

/// One row per (dim, layers). Each configuration is trained on data.train_pairs
/// (or left at its initialization when that is empty, or when config.epochs
/// is 0), timed on a fixture from data.vocab with the unnormalized scorer, and
/// scored by MRR@10 on data.validation_pairs.
std::vector<SweepRow> sweep_bench(const std::vector<std::size_t>& dims,
                                  const std::vector<std::size_t>& layers, const SweepData& data,
                                  const TrainConfig& config, std::size_t runs = kDefaultBenchRuns);

std::string latency_header();
std::string latency_row(const std::string& method, const LatencyReport& report);

}  // namespace qac
