#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qac/corpus.hpp"

namespace qac {

using TokenId = std::uint32_t;

/// Token <-> id bijection. Ids 0..2 are reserved for <sos>, <eos>, <unk> and
/// count toward the size budget.
class Vocabulary {
public:
    static constexpr TokenId kSos = 0;
    static constexpr TokenId kEos = 1;
    static constexpr TokenId kUnk = 2;
    static constexpr std::size_t kSpecialCount = 3;
    static constexpr std::size_t kDefaultMaxSize = 30000;

    Vocabulary();

    /// Keeps the max_size - 3 most frequent tokens, ties by token text.
    static Vocabulary build(const std::unordered_map<std::string, std::uint64_t>& token_counts,
                            std::size_t max_size = kDefaultMaxSize);
    static Vocabulary from_pairs(const std::vector<TrainingPair>& pairs,
                                 std::size_t max_size = kDefaultMaxSize);
    /// Tokens in id order, specials first. Throws on duplicates or bad specials.
    static Vocabulary from_tokens(std::vector<std::string> tokens);

    TokenId id(std::string_view token) const;
    const std::string& token(TokenId id) const { return tokens_.at(id); }
    std::size_t size() const noexcept { return tokens_.size(); }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

    /// Word ids of a normalized text, <unk> for unknown words, at most max_tokens.
    std::vector<TokenId> encode(std::string_view text,
                                std::size_t max_tokens = static_cast<std::size_t>(-1)) const;

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> ids_;
};

/// One LSTM layer with input and hidden size `dim`. Gate blocks are stacked
/// row-wise in the order input, forget, output, candidate.
struct LstmLayer {
    std::vector<double> input_weights;      // 4*dim x dim, row-major
    std::vector<double> recurrent_weights;  // 4*dim x dim, row-major
    std::vector<double> bias;               // 4*dim
};

/// Scorer parameters. The same struct doubles as a gradient buffer.
struct ModelParams {
    std::size_t vocab_size = 0;
    std::size_t dim = 0;
    std::vector<double> embedding;  // vocab_size x dim, row-major; tied input/output
    std::vector<LstmLayer> layers;
    double normalizer = 0.0;        // b: stands in for the per-step log-partition
    std::vector<double> emb_weights;  // LSTMEmb scoring vector

    static ModelParams zeros(std::size_t vocab_size, std::size_t dim, std::size_t num_layers = 1);

    std::span<const double> row(TokenId id) const {
        return {embedding.data() + static_cast<std::size_t>(id) * dim, dim};
    }
    std::span<double> row(TokenId id) {
        return {embedding.data() + static_cast<std::size_t>(id) * dim, dim};
    }

    /// Throws std::invalid_argument if any block disagrees with vocab_size/dim.
    void check_shapes() const;
    bool all_finite() const;
    void set_zero();

    /// Visits every block as (name, span). The scalar normalizer is passed as
    /// a one-element span; `decayed` is false for biases and the normalizer.
    template <typename Self, typename Fn>
    static void for_each_block(Self& self, Fn&& fn) {
        fn("embedding", std::span(self.embedding), true);
        for (auto& layer : self.layers) {
            fn("input_weights", std::span(layer.input_weights), true);
            fn("recurrent_weights", std::span(layer.recurrent_weights), true);
            fn("bias", std::span(layer.bias), false);
        }
        fn("normalizer", std::span(&self.normalizer, 1), false);
        fn("emb_weights", std::span(self.emb_weights), true);
    }
};

struct LanguageModel {
    Vocabulary vocab;
    ModelParams params;

    /// Writes "QACLM1\0" for single-layer models, "QACLM2\0" plus a layer
    /// count otherwise.
    void save(std::ostream& out) const;
    void save(const std::filesystem::path& path) const;
    static LanguageModel load(std::istream& in);
    static LanguageModel load(const std::filesystem::path& path);
};

/// One step of a standard LSTM cell:
///   i = sig(Wi x + Ui h + bi), f = sig(Wf x + Uf h + bf), o = sig(Wo x + Uo h + bo),
///   g = tanh(Wg x + Ug h + bg), c' = f*c + i*g, h' = o*tanh(c').
/// `gates` receives the activated i, f, o, g (4*dim) when non-empty.
void lstm_step(const LstmLayer& layer, std::size_t dim, std::span<const double> x,
               std::span<const double> h, std::span<const double> c, std::span<double> h_out,
               std::span<double> c_out, std::span<double> gates = {});

}  // namespace qac
