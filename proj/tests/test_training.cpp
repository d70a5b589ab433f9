#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

#include "qac/optimizer.hpp"
#include "qac/training.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace qac;

namespace {

double pair_loss(const EncodedPair& pair, const ModelParams& p, ScorerKind kind) {
    double s_pos = score(kind, pair.positive, p);
    double loss = 0.0;
    for (const auto& n : pair.negatives) loss += pairwise_loss(s_pos, score(kind, n, p));
    return loss;
}

EncodedPair random_pair(std::mt19937_64& rng, std::size_t vocab, std::size_t negatives) {
    EncodedPair pair;
    do {
        pair.positive = fixtures::random_words(rng, vocab, 4);
    } while (pair.positive.empty());
    for (std::size_t i = 0; i < negatives; ++i) pair.negatives.push_back(fixtures::random_words(rng, vocab, 4));
    return pair;
}

bool bitwise_equal(const ModelParams& a, const ModelParams& b) {
    bool same = true;
    std::vector<std::span<const double>> blocks;
    ModelParams::for_each_block(a, [&](std::string_view, std::span<const double> s, bool) { blocks.push_back(s); });
    std::size_t i = 0;
    ModelParams::for_each_block(b, [&](std::string_view, std::span<const double> s, bool) {
        same = same && s.size() == blocks[i].size() &&
               std::memcmp(s.data(), blocks[i].data(), s.size() * sizeof(double)) == 0;
        ++i;
    });
    return same;
}

}  // namespace

TEST_CASE("xavier_init bounds, determinism and mean") {
    auto m = xavier_init(100, 100, 1);
    double limit = std::sqrt(6.0 / 200.0);
    for (double v : m) CHECK(std::abs(v) <= limit);
    CHECK(xavier_init(100, 100, 1) == m);
    CHECK(xavier_init(100, 100, 2) != m);
    auto big = xavier_init(100, 100, 3);
    double mean = std::accumulate(big.begin(), big.end(), 0.0) / static_cast<double>(big.size());
    CHECK(std::abs(mean) < 0.01);
}

TEST_CASE("init_params sets b to log N and zero biases") {
    auto p = init_params(50, 8, 2, 4);
    p.check_shapes();
    CHECK(p.normalizer == doctest::Approx(std::log(50.0)));
    for (const auto& layer : p.layers) {
        for (double b : layer.bias) CHECK(b == 0.0);
    }
    double gate_limit = std::sqrt(6.0 / 16.0);
    for (double w : p.layers[0].recurrent_weights) CHECK(std::abs(w) <= gate_limit);
}

TEST_CASE("pairwise_loss is a stable softplus") {
    CHECK(pairwise_loss(1.5, 1.5) == doctest::Approx(std::log(2.0)));
    CHECK(pairwise_loss(1e6, 0.0) == 0.0);
    CHECK(pairwise_loss(0.0, 100.0) == doctest::Approx(100.0));
    CHECK(std::isfinite(pairwise_loss(-1e300, 1e300)));
    CHECK(pairwise_loss(0.0, 3.0) == doctest::Approx(std::log1p(std::exp(3.0))));
}

TEST_CASE("analytic gradients match central differences") {
    std::mt19937_64 rng(21);
    for (std::uint64_t trial = 0; trial < 24; ++trial) {
        std::size_t n = 6 + trial % 5;
        std::size_t d = 2 + trial % 3;
        std::size_t layers = 1 + (trial / 2) % 2;
        ScorerKind kind = trial % 2 == 0 ? ScorerKind::Unnormalized : ScorerKind::LstmEmb;
        auto p = fixtures::random_params(n, d, layers, 500 + trial);
        auto pair = random_pair(rng, n, 2);

        auto analytic = ModelParams::zeros(n, d, layers);
        double loss = backward(pair, p, kind, analytic);
        CHECK(loss == doctest::Approx(pair_loss(pair, p, kind)));
        auto numeric = oracle::numeric_gradient(p, [&](const ModelParams& q) { return pair_loss(pair, q, kind); },
                                                1e-5);
        for (const auto& e : oracle::block_errors(analytic, numeric)) {
            INFO("trial " << trial << " block " << e.name << " |a|=" << e.analytic_norm);
            CHECK(e.relative < 1e-4);
        }
    }
}

TEST_CASE("identical candidates give zero gradient") {
    auto p = fixtures::random_params(8, 3, 1, 31);
    EncodedPair pair{{3, 4, 5}, {{3, 4, 5}, {3, 4, 5}}};
    for (auto kind : {ScorerKind::Unnormalized, ScorerKind::LstmEmb}) {
        auto g = ModelParams::zeros(8, 3);
        CHECK(backward(pair, p, kind, g) == doctest::Approx(2 * std::log(2.0)));
        ModelParams::for_each_block(g, [](std::string_view, std::span<const double> s, bool) {
            for (double v : s) CHECK(v == 0.0);
        });
    }
}

// d/db of softplus(-(s_pos - s_neg)) with ds/db = -L is sigma(-delta) * (L_pos - L_neg).
TEST_CASE("gradient of b is sum of sigma(-delta) times the length gap") {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 20; ++trial) {
        auto p = fixtures::random_params(9, 3, 1, 600 + trial);
        auto pair = random_pair(rng, 9, 3);
        auto g = ModelParams::zeros(9, 3);
        backward(pair, p, ScorerKind::Unnormalized, g);
        double s_pos = score_unnormalized(pair.positive, p);
        double want = 0.0;
        for (const auto& neg : pair.negatives) {
            double delta = s_pos - score_unnormalized(neg, p);
            double sig = 1.0 / (1.0 + std::exp(delta));
            want += sig * (static_cast<double>(pair.positive.size() + 1) - static_cast<double>(neg.size() + 1));
        }
        CHECK(g.normalizer == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("untouched embedding rows get exactly zero gradient") {
    auto p = fixtures::random_params(12, 3, 2, 33);
    EncodedPair pair{{3, 4}, {{5}, {4, 6}}};
    for (auto kind : {ScorerKind::Unnormalized, ScorerKind::LstmEmb}) {
        auto g = ModelParams::zeros(12, 3, 2);
        backward(pair, p, kind, g);
        for (TokenId id : {2u, 7u, 8u, 9u, 10u, 11u}) {
            for (double v : g.row(id)) CHECK(v == 0.0);
        }
        bool sos_touched = false;
        for (double v : g.row(Vocabulary::kSos)) sos_touched = sos_touched || v != 0.0;
        CHECK(sos_touched);
    }
}

TEST_CASE("normalized scorer is not trainable") {
    auto p = fixtures::random_params(5, 2, 1, 34);
    auto g = ModelParams::zeros(5, 2);
    CHECK_THROWS_AS(backward({{3}, {{4}}}, p, ScorerKind::Normalized, g), std::invalid_argument);
}

TEST_CASE("adamw examples") {
    AdamWConfig no_decay;
    no_decay.weight_decay = 0.0;
    std::vector<double> p{0.7, -1.2}, g{0.0, 0.0}, m(2, 0.0), v(2, 0.0);
    adamw_update(p, g, m, v, 1, no_decay, true);
    CHECK(p == std::vector<double>{0.7, -1.2});

    std::vector<double> x{3.0}, one{1.0}, mx{0.0}, vx{0.0};
    adamw_update(x, one, mx, vx, 1, no_decay, true);
    CHECK(3.0 - x[0] == doctest::Approx(no_decay.learning_rate).epsilon(1e-6));

    // Quadratic bowl 0.5*|w|^2: loss falls on every step.
    std::vector<double> w{1.0, -2.0, 0.5}, mw(3, 0.0), vw(3, 0.0);
    AdamWConfig fast;
    fast.learning_rate = 0.1;
    auto loss = [&] { return 0.5 * (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]); };
    double last = loss();
    for (std::size_t step = 1; step <= 5; ++step) {
        std::vector<double> grad = w;
        adamw_update(w, grad, mw, vw, step, fast, true);
        CHECK(loss() < last);
        last = loss();
    }

    // beta1 = beta2 = 0 and no decay: a signed step of size lr.
    AdamWConfig plain;
    plain.weight_decay = 0.0;
    plain.beta1 = 0.0;
    plain.beta2 = 0.0;
    std::vector<double> s{0.0, 0.0}, gs{3.0, -0.25}, ms(2, 0.0), vs(2, 0.0);
    adamw_update(s, gs, ms, vs, 1, plain, true);
    CHECK(s[0] == doctest::Approx(-plain.learning_rate).epsilon(1e-6));
    CHECK(s[1] == doctest::Approx(plain.learning_rate).epsilon(1e-6));
}

TEST_CASE("weight decay skips biases and b") {
    auto p = fixtures::random_params(5, 2, 1, 35);
    auto before = p;
    auto zero = ModelParams::zeros(5, 2);
    AdamW opt(p);
    opt.step(p, zero);
    CHECK(opt.step_count() == 1);
    CHECK(p.normalizer == before.normalizer);
    CHECK(p.layers[0].bias == before.layers[0].bias);
    double shrink = 1.0 - opt.config().learning_rate * opt.config().weight_decay;
    CHECK(p.embedding[0] == doctest::Approx(before.embedding[0] * shrink));
    CHECK(p.layers[0].input_weights[3] == doctest::Approx(before.layers[0].input_weights[3] * shrink));
}

TEST_CASE("training on the separable toy set") {
    auto toy = fixtures::toy_set(41);
    TrainConfig config;
    config.epochs = 5;
    config.dim = 16;
    config.seed = 3;
    std::vector<double> losses;
    auto result = train(toy.train, toy.validation, toy.vocab.size(), config,
                        [&](const EpochMetrics& m) { losses.push_back(m.mean_loss); });
    REQUIRE(result.epochs.size() == 5);
    double best = 0.0;
    for (const auto& e : result.epochs) best = std::max(best, e.validation_mrr);
    MESSAGE("toy validation MRR by epoch: " << result.epochs[0].validation_mrr << " ... " << best);
    CHECK(best >= 0.8);
    CHECK(pairs_mrr(toy.validation, result.params, config.scorer) == doctest::Approx(best));
    CHECK(losses[1] <= losses[0]);
    CHECK(losses[2] <= losses[1]);

    auto again = train(toy.train, toy.validation, toy.vocab.size(), config);
    CHECK(bitwise_equal(again.params, result.params));
}

TEST_CASE("zero epochs returns the initial parameters") {
    auto toy = fixtures::toy_set(42, 10, 5);
    TrainConfig config;
    config.epochs = 0;
    config.dim = 4;
    auto result = train(toy.train, toy.validation, toy.vocab.size(), config);
    CHECK(result.epochs.empty());
    CHECK(bitwise_equal(result.params, init_params(toy.vocab.size(), 4, 1, config.seed)));
}

TEST_CASE("pairs_mrr counts ties against the positive") {
    auto p = ModelParams::zeros(6, 2);
    // All-zero parameters score everything 0: the positive ranks last.
    std::vector<EncodedPair> pairs{{{3}, {{4}, {5}}}};
    CHECK(pairs_mrr(pairs, p, ScorerKind::LstmEmb) == doctest::Approx(1.0 / 3.0));
    CHECK(pairs_mrr({}, p, ScorerKind::LstmEmb) == 0.0);
}
