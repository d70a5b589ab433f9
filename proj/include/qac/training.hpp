#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "qac/corpus.hpp"
#include "qac/model.hpp"
#include "qac/optimizer.hpp"
#include "qac/scoring.hpp"

namespace qac {

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 64;
    std::size_t max_tokens = 16;  // per-query truncation
    std::uint64_t seed = 1;
    ScorerKind scorer = ScorerKind::Unnormalized;
    std::size_t dim = 100;
    std::size_t num_layers = 1;
    AdamWConfig optimizer;
};

/// A training pair mapped to word ids (no markers).
struct EncodedPair {
    std::vector<TokenId> positive;
    std::vector<std::vector<TokenId>> negatives;
};

std::vector<EncodedPair> encode_pairs(const std::vector<TrainingPair>& pairs, const Vocabulary& vocab,
                                      std::size_t max_tokens);

/// rows x cols matrix drawn uniformly from +-sqrt(6 / (rows + cols)).
std::vector<double> xavier_init(std::size_t rows, std::size_t cols, std::mt19937_64& rng);
std::vector<double> xavier_init(std::size_t rows, std::size_t cols, std::uint64_t seed);

/// Xavier-initialized weights, zero biases, normalizer b = log(vocab_size).
ModelParams init_params(std::size_t vocab_size, std::size_t dim, std::size_t num_layers,
                        std::uint64_t seed);

/// log(1 + exp(-(s_pos - s_neg))) in softplus form; finite for any finite input.
double pairwise_loss(double s_pos, double s_neg);

/// Adds the gradient of sum_neg pairwise_loss(s_pos, s_neg) to `grads` and
/// returns that loss. Supports the unnormalized and lstm_emb scorers.
/// Embedding rows not used by the pair receive no contribution.
double backward(const EncodedPair& pair, const ModelParams& params, ScorerKind scorer,
                ModelParams& grads);

/// MRR@k of the positive among its candidate list, ranked by score. Ties go
/// against the positive.
double pairs_mrr(const std::vector<EncodedPair>& pairs, const ModelParams& params, ScorerKind scorer,
                 std::size_t k = 10);

struct EpochMetrics {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
    double validation_mrr = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochMetrics> epochs;
    std::size_t best_epoch = 0;  // 0 when no epoch ran
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Shuffled mini-batch AdamW over mean pairwise loss. Returns the parameters
/// of the epoch with the best validation MRR@10 (the last epoch when there is
/// no validation data). Throws std::runtime_error on a non-finite loss.
TrainResult train(const std::vector<EncodedPair>& train_pairs,
                  const std::vector<EncodedPair>& validation_pairs, std::size_t vocab_size,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Same, starting from the given parameters instead of a fresh init.
TrainResult train_from(ModelParams initial, const std::vector<EncodedPair>& train_pairs,
                       const std::vector<EncodedPair>& validation_pairs, const TrainConfig& config,
                       const EpochCallback& on_epoch = {});

}  // namespace qac
