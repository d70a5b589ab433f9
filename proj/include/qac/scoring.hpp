#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "qac/model.hpp"

namespace qac {

enum class ScorerKind { Unnormalized, Normalized, LstmEmb };

// Every scorer takes the word ids of a query without markers; <sos> is fed
// first from zero LSTM state and <eos> is the final scored position, so a
// query of n words has L = n + 1 scored positions.

/// sum over positions of (v_i . h_{i-1} - b). Cost does not depend on the
/// vocabulary size.
double score_unnormalized(std::span<const TokenId> words, const ModelParams& params);

/// Exact log-probability: sum over positions of (v_i . h_{i-1} - logsumexp_j v_j . h_{i-1}).
double score_normalized(std::span<const TokenId> words, const ModelParams& params);

/// Final hidden state (after consuming <eos>) dotted with emb_weights.
double score_lstm_emb(std::span<const TokenId> words, const ModelParams& params);

double score(ScorerKind kind, std::span<const TokenId> words, const ModelParams& params);

/// log sum_j exp(v_j . h), with max subtraction.
double log_partition(std::span<const double> hidden, const ModelParams& params);

/// Top-layer hidden state after each consumed token of `inputs`.
std::vector<std::vector<double>> hidden_states(std::span<const TokenId> inputs,
                                               const ModelParams& params);

/// <sos> + words + <eos>.
std::vector<TokenId> with_markers(std::span<const TokenId> words);

std::string_view to_string(ScorerKind kind);
ScorerKind parse_scorer(std::string_view name);

}  // namespace qac
