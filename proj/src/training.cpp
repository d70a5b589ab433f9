#include "qac/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace qac {

namespace {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// sigma(-delta), evaluated without overflow.
double sigmoid_neg(double delta) {
    if (delta >= 0.0) {
        double e = std::exp(-delta);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(delta));
}

// Activations of one layer over a whole sequence, stored time-major.
struct LayerTape {
    std::vector<double> input;   // T x d
    std::vector<double> h_prev;  // T x d
    std::vector<double> c_prev;  // T x d
    std::vector<double> gates;   // T x 4d (activated i, f, o, g)
    std::vector<double> cell;    // T x d
    std::vector<double> hidden;  // T x d
};

struct Tape {
    std::vector<TokenId> inputs;
    std::vector<LayerTape> layers;
};

Tape run_forward(std::vector<TokenId> inputs, const ModelParams& params) {
    const std::size_t d = params.dim;
    const std::size_t steps = inputs.size();
    Tape tape;
    tape.inputs = std::move(inputs);
    tape.layers.resize(params.layers.size());
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& lt = tape.layers[l];
        lt.input.resize(steps * d);
        lt.h_prev.resize(steps * d);
        lt.c_prev.resize(steps * d);
        lt.gates.resize(steps * 4 * d);
        lt.cell.resize(steps * d);
        lt.hidden.resize(steps * d);
    }
    std::vector<double> zero(d, 0.0);
    for (std::size_t t = 0; t < steps; ++t) {
        TokenId token = tape.inputs[t];
        if (token >= params.vocab_size) throw std::out_of_range("token id outside vocabulary");
        const double* x = params.embedding.data() + static_cast<std::size_t>(token) * d;
        for (std::size_t l = 0; l < params.layers.size(); ++l) {
            auto& lt = tape.layers[l];
            const double* h = t == 0 ? zero.data() : lt.hidden.data() + (t - 1) * d;
            const double* c = t == 0 ? zero.data() : lt.cell.data() + (t - 1) * d;
            std::copy(x, x + d, lt.input.begin() + static_cast<std::ptrdiff_t>(t * d));
            std::copy(h, h + d, lt.h_prev.begin() + static_cast<std::ptrdiff_t>(t * d));
            std::copy(c, c + d, lt.c_prev.begin() + static_cast<std::ptrdiff_t>(t * d));
            lstm_step(params.layers[l], d, {x, d}, {h, d}, {c, d}, {lt.hidden.data() + t * d, d},
                      {lt.cell.data() + t * d, d}, {lt.gates.data() + t * 4 * d, 4 * d});
            x = lt.hidden.data() + t * d;
        }
    }
    return tape;
}

// Backpropagates d(loss)/d(top hidden) through all layers and time steps.
void run_backward(const Tape& tape, std::vector<double> top_grad, const ModelParams& params,
                  ModelParams& grads) {
    const std::size_t d = params.dim;
    const std::size_t steps = tape.inputs.size();
    std::vector<double> upstream = std::move(top_grad);  // T x d, gradient w.r.t. layer output
    std::vector<double> dh_next(d), dc_next(d), da(4 * d);

    for (std::size_t l = params.layers.size(); l-- > 0;) {
        const auto& layer = params.layers[l];
        auto& glayer = grads.layers[l];
        const auto& lt = tape.layers[l];
        std::vector<double> below(steps * d, 0.0);  // gradient w.r.t. this layer's input
        std::fill(dh_next.begin(), dh_next.end(), 0.0);
        std::fill(dc_next.begin(), dc_next.end(), 0.0);

        for (std::size_t t = steps; t-- > 0;) {
            const double* gates = lt.gates.data() + t * 4 * d;
            const double* cell = lt.cell.data() + t * d;
            const double* c_prev = lt.c_prev.data() + t * d;
            for (std::size_t j = 0; j < d; ++j) {
                double i = gates[j], f = gates[d + j], o = gates[2 * d + j], g = gates[3 * d + j];
                double tanh_c = std::tanh(cell[j]);
                double dh = upstream[t * d + j] + dh_next[j];
                double d_o = dh * tanh_c;
                double dc = dc_next[j] + dh * o * (1.0 - tanh_c * tanh_c);
                double d_i = dc * g;
                double d_g = dc * i;
                double d_f = dc * c_prev[j];
                dc_next[j] = dc * f;
                da[j] = d_i * i * (1.0 - i);
                da[d + j] = d_f * f * (1.0 - f);
                da[2 * d + j] = d_o * o * (1.0 - o);
                da[3 * d + j] = d_g * (1.0 - g * g);
            }
            const double* x = lt.input.data() + t * d;
            const double* h_prev = lt.h_prev.data() + t * d;
            double* dx = below.data() + t * d;
            std::fill(dh_next.begin(), dh_next.end(), 0.0);
            for (std::size_t r = 0; r < 4 * d; ++r) {
                double a = da[r];
                if (a == 0.0) continue;
                axpy(a, x, glayer.input_weights.data() + r * d, d);
                axpy(a, h_prev, glayer.recurrent_weights.data() + r * d, d);
                glayer.bias[r] += a;
                axpy(a, layer.input_weights.data() + r * d, dx, d);
                axpy(a, layer.recurrent_weights.data() + r * d, dh_next.data(), d);
            }
        }
        upstream = std::move(below);
    }
    for (std::size_t t = 0; t < steps; ++t) {
        axpy(1.0, upstream.data() + t * d, grads.row(tape.inputs[t]).data(), d);
    }
}

// Score of one sequence, plus the gradient of `weight * score` added to grads
// when weight is non-zero.
double score_with_gradient(const std::vector<TokenId>& words, const ModelParams& params,
                           ScorerKind scorer, double weight, ModelParams* grads) {
    const std::size_t d = params.dim;
    if (scorer == ScorerKind::Unnormalized) {
        std::vector<TokenId> inputs{Vocabulary::kSos};
        inputs.insert(inputs.end(), words.begin(), words.end());
        Tape tape = run_forward(inputs, params);
        const auto& top = tape.layers.back().hidden;
        const std::size_t steps = inputs.size();
        double total = 0.0;
        std::vector<double> top_grad(grads ? steps * d : 0, 0.0);
        for (std::size_t t = 0; t < steps; ++t) {
            TokenId target = t + 1 < steps ? inputs[t + 1] : Vocabulary::kEos;
            const double* v = params.row(target).data();
            total += dot(v, top.data() + t * d, d) - params.normalizer;
            if (grads) {
                axpy(weight, top.data() + t * d, grads->row(target).data(), d);
                axpy(weight, v, top_grad.data() + t * d, d);
            }
        }
        if (grads) {
            grads->normalizer -= weight * static_cast<double>(steps);
            run_backward(tape, std::move(top_grad), params, *grads);
        }
        return total;
    }
    if (scorer == ScorerKind::LstmEmb) {
        std::vector<TokenId> inputs{Vocabulary::kSos};
        inputs.insert(inputs.end(), words.begin(), words.end());
        inputs.push_back(Vocabulary::kEos);
        Tape tape = run_forward(inputs, params);
        const std::size_t steps = inputs.size();
        const double* last = tape.layers.back().hidden.data() + (steps - 1) * d;
        double total = dot(last, params.emb_weights.data(), d);
        if (grads) {
            axpy(weight, last, grads->emb_weights.data(), d);
            std::vector<double> top_grad(steps * d, 0.0);
            axpy(weight, params.emb_weights.data(), top_grad.data() + (steps - 1) * d, d);
            run_backward(tape, std::move(top_grad), params, *grads);
        }
        return total;
    }
    throw std::invalid_argument("backward supports the unnormalized and lstm_emb scorers only");
}

}  // namespace

std::vector<EncodedPair> encode_pairs(const std::vector<TrainingPair>& pairs, const Vocabulary& vocab,
                                      std::size_t max_tokens) {
    std::vector<EncodedPair> encoded;
    encoded.reserve(pairs.size());
    for (const auto& pair : pairs) {
        EncodedPair e{vocab.encode(pair.positive, max_tokens), {}};
        for (const auto& negative : pair.negatives) e.negatives.push_back(vocab.encode(negative, max_tokens));
        encoded.push_back(std::move(e));
    }
    return encoded;
}

std::vector<double> xavier_init(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("xavier_init: empty shape");
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    std::vector<double> values(rows * cols);
    for (auto& v : values) v = dist(rng);
    return values;
}

std::vector<double> xavier_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return xavier_init(rows, cols, rng);
}

ModelParams init_params(std::size_t vocab_size, std::size_t dim, std::size_t num_layers,
                        std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ModelParams params = ModelParams::zeros(vocab_size, dim, num_layers);
    params.embedding = xavier_init(vocab_size, dim, rng);
    for (auto& layer : params.layers) {
        // Each gate block is its own dim x dim matrix.
        for (auto* block : {&layer.input_weights, &layer.recurrent_weights}) {
            block->clear();
            for (int gate = 0; gate < 4; ++gate) {
                auto values = xavier_init(dim, dim, rng);
                block->insert(block->end(), values.begin(), values.end());
            }
        }
    }
    params.emb_weights = xavier_init(dim, 1, rng);
    params.normalizer = std::log(static_cast<double>(vocab_size));
    return params;
}

double pairwise_loss(double s_pos, double s_neg) {
    // softplus(-delta) = max(-delta, 0) + log1p(exp(-|delta|))
    double delta = s_pos - s_neg;
    return std::max(-delta, 0.0) + std::log1p(std::exp(-std::abs(delta)));
}

double backward(const EncodedPair& pair, const ModelParams& params, ScorerKind scorer,
                ModelParams& grads) {
    double s_pos = score_with_gradient(pair.positive, params, scorer, 0.0, nullptr);
    // Identical sequences share one backward pass with their summed weight.
    std::map<std::vector<TokenId>, double> weights;
    double loss = 0.0;
    double pos_weight = 0.0;
    for (const auto& negative : pair.negatives) {
        double s_neg = score_with_gradient(negative, params, scorer, 0.0, nullptr);
        loss += pairwise_loss(s_pos, s_neg);
        double w = sigmoid_neg(s_pos - s_neg);
        weights[negative] += w;
        pos_weight -= w;
    }
    weights[pair.positive] += pos_weight;
    for (const auto& [sequence, weight] : weights) {
        if (weight == 0.0) continue;
        score_with_gradient(sequence, params, scorer, weight, &grads);
    }
    return loss;
}

double pairs_mrr(const std::vector<EncodedPair>& pairs, const ModelParams& params, ScorerKind scorer,
                 std::size_t k) {
    if (pairs.empty()) return 0.0;
    double total = 0.0;
    for (const auto& pair : pairs) {
        double s_pos = score(scorer, pair.positive, params);
        std::size_t rank = 1;
        for (const auto& negative : pair.negatives) {
            if (score(scorer, negative, params) >= s_pos) ++rank;
        }
        if (rank <= k) total += 1.0 / static_cast<double>(rank);
    }
    return total / static_cast<double>(pairs.size());
}

TrainResult train(const std::vector<EncodedPair>& train_pairs,
                  const std::vector<EncodedPair>& validation_pairs, std::size_t vocab_size,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
    return train_from(init_params(vocab_size, config.dim, config.num_layers, config.seed), train_pairs,
                      validation_pairs, config, on_epoch);
}

TrainResult train_from(ModelParams initial, const std::vector<EncodedPair>& train_pairs,
                       const std::vector<EncodedPair>& validation_pairs, const TrainConfig& config,
                       const EpochCallback& on_epoch) {
    if (config.batch_size == 0) throw std::invalid_argument("batch size must be positive");
    initial.check_shapes();
    TrainResult result{initial, {}, 0};
    if (config.epochs == 0) return result;
    if (train_pairs.empty()) throw std::invalid_argument("no training pairs");

    ModelParams params = std::move(initial);
    ModelParams grads = ModelParams::zeros(params.vocab_size, params.dim, params.layers.size());
    AdamW optimizer(params, config.optimizer);
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(train_pairs.size());
    std::iota(order.begin(), order.end(), 0);
    double best_mrr = -1.0;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            std::size_t stop = std::min(order.size(), start + config.batch_size);
            grads.set_zero();
            double batch_loss = 0.0;
            for (std::size_t i = start; i < stop; ++i) {
                batch_loss += backward(train_pairs[order[i]], params, config.scorer, grads);
            }
            if (!std::isfinite(batch_loss)) {
                throw std::runtime_error("non-finite training loss in epoch " + std::to_string(epoch));
            }
            epoch_loss += batch_loss;
            double scale = 1.0 / static_cast<double>(stop - start);
            ModelParams::for_each_block(grads, [&](std::string_view, std::span<double> block, bool) {
                for (auto& g : block) g *= scale;
            });
            optimizer.step(params, grads);
        }

        EpochMetrics metrics{epoch, epoch_loss / static_cast<double>(train_pairs.size()),
                             pairs_mrr(validation_pairs, params, config.scorer)};
        result.epochs.push_back(metrics);
        if (on_epoch) on_epoch(metrics);
        bool better = validation_pairs.empty() || metrics.validation_mrr > best_mrr;
        if (better) {
            best_mrr = metrics.validation_mrr;
            result.params = params;
            result.best_epoch = epoch;
        }
    }
    return result;
}

}  // namespace qac
