#include "qac/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qac {

namespace {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

// Stacked LSTM state for one sequence.
class Unroller {
public:
    explicit Unroller(const ModelParams& params)
        : params_(params),
          dim_(params.dim),
          h_(params.layers.size(), std::vector<double>(params.dim, 0.0)),
          c_(params.layers.size(), std::vector<double>(params.dim, 0.0)) {}

    void feed(TokenId token) {
        if (token >= params_.vocab_size) throw std::out_of_range("token id outside vocabulary");
        std::span<const double> input = params_.row(token);
        for (std::size_t l = 0; l < params_.layers.size(); ++l) {
            lstm_step(params_.layers[l], dim_, input, h_[l], c_[l], h_[l], c_[l]);
            input = h_[l];
        }
    }

    std::span<const double> top() const { return h_.back(); }

private:
    const ModelParams& params_;
    std::size_t dim_;
    std::vector<std::vector<double>> h_;
    std::vector<std::vector<double>> c_;
};

}  // namespace

std::vector<TokenId> with_markers(std::span<const TokenId> words) {
    std::vector<TokenId> sequence;
    sequence.reserve(words.size() + 2);
    sequence.push_back(Vocabulary::kSos);
    sequence.insert(sequence.end(), words.begin(), words.end());
    sequence.push_back(Vocabulary::kEos);
    return sequence;
}

double log_partition(std::span<const double> hidden, const ModelParams& params) {
    const std::size_t n = params.vocab_size;
    const std::size_t d = params.dim;
    thread_local std::vector<double> logits;
    logits.resize(n);
    double peak = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
        logits[j] = dot(params.embedding.data() + j * d, hidden.data(), d);
        peak = std::max(peak, logits[j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += std::exp(logits[j] - peak);
    return peak + std::log(sum);
}

double score_unnormalized(std::span<const TokenId> words, const ModelParams& params) {
    Unroller lstm(params);
    lstm.feed(Vocabulary::kSos);
    double total = 0.0;
    for (std::size_t i = 0; i <= words.size(); ++i) {
        TokenId next = i < words.size() ? words[i] : Vocabulary::kEos;
        if (next >= params.vocab_size) throw std::out_of_range("token id outside vocabulary");
        total += dot(params.row(next).data(), lstm.top().data(), params.dim) - params.normalizer;
        if (i < words.size()) lstm.feed(next);
    }
    return total;
}

double score_normalized(std::span<const TokenId> words, const ModelParams& params) {
    Unroller lstm(params);
    lstm.feed(Vocabulary::kSos);
    double total = 0.0;
    for (std::size_t i = 0; i <= words.size(); ++i) {
        TokenId next = i < words.size() ? words[i] : Vocabulary::kEos;
        if (next >= params.vocab_size) throw std::out_of_range("token id outside vocabulary");
        total += dot(params.row(next).data(), lstm.top().data(), params.dim) -
                 log_partition(lstm.top(), params);
        if (i < words.size()) lstm.feed(next);
    }
    return total;
}

double score_lstm_emb(std::span<const TokenId> words, const ModelParams& params) {
    Unroller lstm(params);
    lstm.feed(Vocabulary::kSos);
    for (TokenId word : words) lstm.feed(word);
    lstm.feed(Vocabulary::kEos);
    return dot(lstm.top().data(), params.emb_weights.data(), params.dim);
}

double score(ScorerKind kind, std::span<const TokenId> words, const ModelParams& params) {
    switch (kind) {
        case ScorerKind::Unnormalized: return score_unnormalized(words, params);
        case ScorerKind::Normalized: return score_normalized(words, params);
        case ScorerKind::LstmEmb: return score_lstm_emb(words, params);
    }
    return 0.0;
}

std::vector<std::vector<double>> hidden_states(std::span<const TokenId> inputs,
                                               const ModelParams& params) {
    Unroller lstm(params);
    std::vector<std::vector<double>> states;
    states.reserve(inputs.size());
    for (TokenId token : inputs) {
        lstm.feed(token);
        states.emplace_back(lstm.top().begin(), lstm.top().end());
    }
    return states;
}

std::string_view to_string(ScorerKind kind) {
    switch (kind) {
        case ScorerKind::Unnormalized: return "unnormalized";
        case ScorerKind::Normalized: return "normalized";
        case ScorerKind::LstmEmb: return "lstm_emb";
    }
    return "?";
}

ScorerKind parse_scorer(std::string_view name) {
    if (name == "unnormalized") return ScorerKind::Unnormalized;
    if (name == "normalized") return ScorerKind::Normalized;
    if (name == "lstm_emb") return ScorerKind::LstmEmb;
    throw std::invalid_argument("unknown scorer: " + std::string(name));
}

}  // namespace qac
