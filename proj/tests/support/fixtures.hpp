#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qac/corpus.hpp"
#include "qac/model.hpp"
#include "qac/prefix_index.hpp"
#include "qac/training.hpp"
#include "support/oracles.hpp"

namespace fixtures {

// ---------------------------------------------------------- random corpora

struct RandomCorpus {
    oracle::Entries queries;         // background queries with frequencies
    oracle::Entries suffixes;        // top suffixes of the background
    std::vector<std::string> tests;  // held-out queries, some never seen in background
};

// Short words with heavy prefix sharing, so partial words hit several entries.
inline const std::vector<std::string>& word_pool() {
    static const std::vector<std::string> pool{
        "a",   "ab",   "abc",  "abd", "b",      "ba",    "bad",   "bat",    "c",     "ca",
        "cab", "cat",  "to",   "top", "from",   "for",   "fly",   "flights", "sea",  "seattle",
        "dc",  "cheap", "cheapest", "new", "news", "york", "jobs",  "job",    "soft", "software"};
    return pool;
}

inline std::string random_query(std::mt19937_64& rng, std::size_t vocab) {
    const auto& pool = word_pool();
    std::uniform_int_distribution<std::size_t> length(1, 4);
    // Squaring a uniform draw skews toward the front of the pool.
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t n = length(rng);
    std::string text;
    for (std::size_t i = 0; i < n; ++i) {
        double u = unit(rng);
        auto w = static_cast<std::size_t>(u * u * static_cast<double>(std::min(vocab, pool.size())));
        if (i > 0) text.push_back(' ');
        text += pool[std::min(w, pool.size() - 1)];
    }
    return text;
}

inline RandomCorpus random_corpus(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> size(5, 100);
    std::uniform_int_distribution<std::size_t> vocab(6, word_pool().size());
    std::uniform_int_distribution<std::uint64_t> freq(1, 30);
    std::size_t vocab_size = vocab(rng);
    std::size_t n = size(rng);
    RandomCorpus corpus;
    std::vector<std::string> seen;
    while (corpus.queries.size() < n) {
        std::string q = random_query(rng, vocab_size);
        if (std::find(seen.begin(), seen.end(), q) != seen.end()) continue;
        seen.push_back(q);
        corpus.queries.emplace_back(q, freq(rng));
        if (seen.size() > 400) break;
    }
    // A small cap now and then so the suffix cut-off is exercised.
    std::uniform_int_distribution<std::size_t> cap(5, 60);
    std::size_t limit = seed % 4 == 0 ? cap(rng) : qac::kDefaultSuffixLimit;
    corpus.suffixes = oracle::suffixes(corpus.queries, limit);
    std::uniform_int_distribution<std::size_t> pick(0, corpus.queries.size() - 1);
    for (int i = 0; i < 60; ++i) {
        if (i % 2 == 0) {
            corpus.tests.push_back(corpus.queries[pick(rng)].first);
        } else {
            corpus.tests.push_back(random_query(rng, vocab_size));
        }
    }
    return corpus;
}

inline qac::PrefixIndex build(const oracle::Entries& entries) { return qac::PrefixIndex::build(entries); }

/// Normalized prefixes of several shapes: cut from held-out queries, whole
/// queries, trailing-space forms, single letters and the empty prefix.
inline std::vector<std::string> probe_prefixes(const RandomCorpus& corpus, std::uint64_t seed,
                                               std::size_t count) {
    std::mt19937_64 rng(seed);
    std::vector<std::string> out{""};
    std::uniform_int_distribution<int> shape(0, 4);
    std::uniform_int_distribution<std::size_t> pick(0, corpus.tests.size() - 1);
    while (out.size() < count) {
        const std::string& q = corpus.tests[pick(rng)];
        switch (shape(rng)) {
            case 0: out.push_back(q); break;
            case 1: out.push_back(q + " "); break;
            case 2: out.push_back(std::string(1, q[0])); break;
            default: out.push_back(qac::sample_prefix(q, rng).prefix); break;
        }
    }
    return out;
}

// ------------------------------------------------------- random models

/// Every scalar, biases and b included, uniform in [-scale, scale].
inline qac::ModelParams random_params(std::size_t vocab_size, std::size_t dim, std::size_t layers,
                                      std::uint64_t seed, double scale = 0.5) {
    qac::ModelParams p = qac::ModelParams::zeros(vocab_size, dim, layers);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    qac::ModelParams::for_each_block(p, [&](std::string_view, std::span<double> block, bool) {
        for (auto& x : block) x = u(rng);
    });
    return p;
}

inline std::vector<qac::TokenId> random_words(std::mt19937_64& rng, std::size_t vocab_size,
                                              std::size_t max_len) {
    std::uniform_int_distribution<std::size_t> len(0, max_len);
    std::uniform_int_distribution<qac::TokenId> id(0, static_cast<qac::TokenId>(vocab_size - 1));
    std::vector<qac::TokenId> words(len(rng));
    for (auto& w : words) w = id(rng);
    return words;
}

// -------------------------------------------------------- toy ranking set

struct ToySet {
    qac::Vocabulary vocab;
    std::vector<qac::EncodedPair> train;
    std::vector<qac::EncodedPair> validation;
};

/// Ten three-word candidates per list. The positive is the only one that
/// contains the marker word; everything else is drawn from filler words.
inline ToySet toy_set(std::uint64_t seed, std::size_t train_lists = 640, std::size_t validation_lists = 200) {
    std::vector<std::string> tokens = qac::Vocabulary().tokens();
    tokens.push_back("marker");
    for (int i = 0; i < 29; ++i) tokens.push_back("filler" + std::to_string(i));
    ToySet set{qac::Vocabulary::from_tokens(tokens), {}, {}};
    const qac::TokenId marker = set.vocab.id("marker");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<qac::TokenId> filler(marker + 1,
                                                       static_cast<qac::TokenId>(set.vocab.size() - 1));
    std::uniform_int_distribution<std::size_t> slot(0, 2);
    auto make = [&] {
        qac::EncodedPair pair;
        pair.positive = {filler(rng), filler(rng), filler(rng)};
        pair.positive[slot(rng)] = marker;
        for (int n = 0; n < 9; ++n) pair.negatives.push_back({filler(rng), filler(rng), filler(rng)});
        return pair;
    };
    for (std::size_t i = 0; i < train_lists; ++i) set.train.push_back(make());
    for (std::size_t i = 0; i < validation_lists; ++i) set.validation.push_back(make());
    return set;
}

// ------------------------------------------------------ 50-query corpus

inline const oracle::Entries& fixture_queries() {
    static const oracle::Entries queries{
        {"software engineer", 90},          {"software developer", 40},
        {"software engineer jobs", 25},     {"software testing", 12},
        {"research scientist", 60},         {"research scientist jobs", 14},
        {"data scientist", 55},             {"data science", 33},
        {"data engineer", 21},              {"machine learning", 48},
        {"machine learning engineer", 19},  {"cheapest flights", 70},
        {"cheapest flights to dc", 9},      {"flights from seattle to sfo", 11},
        {"flights from seattle to dc", 8},  {"from seattle to portland", 6},
        {"seattle to vancouver", 10},       {"seattle weather", 44},
        {"seattle seahawks", 37},           {"to airport", 5},
        {"to bermuda", 4},                  {"to dc", 7},
        {"apple", 80},                      {"apple store", 35},
        {"apple watch", 29},                {"apply for passport", 13},
        {"application form", 9},            {"amazon", 95},
        {"amazon prime", 41},               {"american airlines", 27},
        {"a b c", 3},                       {"abc news", 22},
        {"new york times", 50},             {"new york weather", 18},
        {"news today", 26},                 {"nearby restaurants", 15},
        {"best pizza near me", 17},         {"best buy", 39},
        {"bank of america", 34},            {"weather today", 43},
        {"weather tomorrow", 16},           {"walmart", 52},
        {"walmart hours", 10},              {"youtube", 99},
        {"youtube music", 24},              {"yahoo mail", 31},
        {"zillow", 28},                     {"zoom", 20},
        {"how to tie a tie", 8},            {"how to cook rice", 6},
    };
    return queries;
}

}  // namespace fixtures
