#pragma once

// Slow, direct re-implementations used as references by the tests. Nothing
// here calls into the library code it is checking.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qac/generation.hpp"
#include "qac/metrics.hpp"
#include "qac/model.hpp"

namespace oracle {

using Entries = std::vector<std::pair<std::string, std::uint64_t>>;

// ---------------------------------------------------------------- lookup

inline Entries merged(const Entries& entries) {
    std::map<std::string, std::uint64_t> sums;
    for (const auto& [text, freq] : entries) sums[text] += freq;
    return {sums.begin(), sums.end()};
}

inline std::vector<qac::LookupResult> scan_top_k(const Entries& entries, const std::string& prefix,
                                                 std::size_t k) {
    std::vector<qac::LookupResult> hits;
    for (const auto& [text, freq] : merged(entries)) {
        if (text.size() >= prefix.size() && text.compare(0, prefix.size(), prefix) == 0) {
            hits.push_back({text, freq});
        }
    }
    std::stable_sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
        if (a.frequency != b.frequency) return a.frequency > b.frequency;
        return a.text < b.text;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

// ------------------------------------------------------------ generation

inline std::size_t count_words(const std::string& text) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : text) {
        if (c == ' ') {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

inline std::vector<qac::Candidate> finish(std::vector<qac::Candidate> all, std::size_t k) {
    std::vector<qac::Candidate> out;
    for (auto& c : all) {
        bool dup = false;
        for (const auto& o : out) dup = dup || o.text == c.text;
        if (!dup) out.push_back(std::move(c));
    }
    if (out.size() > k) out.resize(k);
    return out;
}

inline void add_query(std::vector<qac::Candidate>& list, const Entries& queries, const std::string& prefix,
                      std::size_t k) {
    for (auto& hit : scan_top_k(queries, prefix, k)) {
        list.push_back({hit.text, qac::Source::QueryIndex, 0, hit.frequency, std::nullopt});
    }
}

inline void add_suffix(std::vector<qac::Candidate>& list, const Entries& suffixes, const std::string& head,
                       const std::string& tail, std::size_t k) {
    if (tail.empty()) return;
    for (auto& hit : scan_top_k(suffixes, tail, k)) {
        list.push_back({head + hit.text, qac::Source::SuffixIndex, count_words(tail), hit.frequency,
                        std::nullopt});
    }
}

inline std::vector<qac::Candidate> mpc(const Entries& queries, const std::string& prefix, std::size_t k) {
    std::vector<qac::Candidate> all;
    add_query(all, queries, prefix, k);
    return finish(std::move(all), k);
}

inline std::vector<qac::Candidate> lwg(const Entries& queries, const Entries& suffixes,
                                       const std::string& prefix, std::size_t k) {
    std::vector<qac::Candidate> all;
    add_query(all, queries, prefix, k);
    auto cut = prefix.rfind(' ');
    std::string head = cut == std::string::npos ? "" : prefix.substr(0, cut + 1);
    std::string last = cut == std::string::npos ? prefix : prefix.substr(cut + 1);
    add_suffix(all, suffixes, head, last, k);
    return finish(std::move(all), k);
}

// The removed-words loop, run over the string itself: strip the first word
// (with its trailing space) into rw and look up what is left. A prefix with
// no space at all is a single word and is looked up whole.
inline std::vector<qac::Candidate> mcg(const Entries& queries, const Entries& suffixes,
                                       const std::string& prefix, std::size_t k) {
    std::vector<qac::Candidate> all;
    add_query(all, queries, prefix, k);
    std::string p = prefix;
    std::string rw;
    if (p.find(' ') == std::string::npos) {
        add_suffix(all, suffixes, "", p, k);
    } else {
        while (!p.empty()) {
            auto space = p.find(' ');
            std::string w0 = space == std::string::npos ? p : p.substr(0, space + 1);
            p = space == std::string::npos ? "" : p.substr(space + 1);
            rw += w0;
            add_suffix(all, suffixes, rw, p, k);
        }
    }
    return finish(std::move(all), k);
}

inline std::vector<qac::Candidate> generate(qac::GenerationMode mode, const Entries& queries,
                                            const Entries& suffixes, const std::string& prefix,
                                            std::size_t k) {
    switch (mode) {
        case qac::GenerationMode::Mpc: return mpc(queries, prefix, k);
        case qac::GenerationMode::Lwg: return lwg(queries, suffixes, prefix, k);
        case qac::GenerationMode::Mcg: return mcg(queries, suffixes, prefix, k);
    }
    return {};
}

/// All word-aligned suffixes, weighted by query frequency, heaviest `limit`.
inline Entries suffixes(const Entries& queries, std::size_t limit) {
    Entries all;
    for (const auto& [text, freq] : queries) {
        std::size_t start = 0;
        while (true) {
            all.emplace_back(text.substr(start), freq);
            auto space = text.find(' ', start);
            if (space == std::string::npos) break;
            start = space + 1;
        }
    }
    Entries out = merged(all);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (out.size() > limit) out.resize(limit);
    return out;
}

// --------------------------------------------------------------- scoring

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// One layer, one step, every gate spelled out with index loops.
inline void lstm_step(const qac::LstmLayer& layer, std::size_t d, const std::vector<double>& x,
                      std::vector<double>& h, std::vector<double>& c) {
    auto pre = [&](int gate, std::size_t j) {
        std::size_t row = static_cast<std::size_t>(gate) * d + j;
        double a = layer.bias[row];
        for (std::size_t m = 0; m < d; ++m) a += layer.input_weights[row * d + m] * x[m];
        for (std::size_t m = 0; m < d; ++m) a += layer.recurrent_weights[row * d + m] * h[m];
        return a;
    };
    std::vector<double> hn(d), cn(d);
    for (std::size_t j = 0; j < d; ++j) {
        double i = sigmoid(pre(0, j));
        double f = sigmoid(pre(1, j));
        double o = sigmoid(pre(2, j));
        double g = std::tanh(pre(3, j));
        cn[j] = f * c[j] + i * g;
        hn[j] = o * std::tanh(cn[j]);
    }
    h = hn;
    c = cn;
}

struct Run {
    std::vector<std::vector<double>> before;  // top hidden state before each scored position
    std::vector<std::uint32_t> targets;       // token scored at each position
    std::vector<double> final_hidden;         // top hidden after <eos>
};

inline Run unroll(const std::vector<std::uint32_t>& words, const qac::ModelParams& p) {
    std::size_t d = p.dim;
    std::vector<std::uint32_t> seq{qac::Vocabulary::kSos};
    seq.insert(seq.end(), words.begin(), words.end());
    seq.push_back(qac::Vocabulary::kEos);
    std::vector<std::vector<double>> h(p.layers.size(), std::vector<double>(d, 0.0));
    std::vector<std::vector<double>> c = h;
    Run run;
    for (std::size_t t = 0; t < seq.size(); ++t) {
        std::vector<double> x(d);
        for (std::size_t m = 0; m < d; ++m) x[m] = p.embedding[seq[t] * d + m];
        for (std::size_t l = 0; l < p.layers.size(); ++l) {
            lstm_step(p.layers[l], d, x, h[l], c[l]);
            x = h[l];
        }
        if (t + 1 < seq.size()) {
            run.before.push_back(x);
            run.targets.push_back(seq[t + 1]);
        } else {
            run.final_hidden = x;
        }
    }
    return run;
}

inline double logit(const qac::ModelParams& p, std::uint32_t token, const std::vector<double>& h) {
    double s = 0.0;
    for (std::size_t m = 0; m < p.dim; ++m) s += p.embedding[token * p.dim + m] * h[m];
    return s;
}

inline double unnormalized(const std::vector<std::uint32_t>& words, const qac::ModelParams& p) {
    Run run = unroll(words, p);
    double total = 0.0;
    for (std::size_t t = 0; t < run.targets.size(); ++t) {
        total += logit(p, run.targets[t], run.before[t]) - p.normalizer;
    }
    return total;
}

/// Plain log(sum(exp)), no shifting; fine for the small weights used in tests.
inline double log_sum_exp(const qac::ModelParams& p, const std::vector<double>& h) {
    double sum = 0.0;
    for (std::uint32_t j = 0; j < p.vocab_size; ++j) sum += std::exp(logit(p, j, h));
    return std::log(sum);
}

inline double normalized(const std::vector<std::uint32_t>& words, const qac::ModelParams& p) {
    Run run = unroll(words, p);
    double total = 0.0;
    for (std::size_t t = 0; t < run.targets.size(); ++t) {
        total += logit(p, run.targets[t], run.before[t]) - log_sum_exp(p, run.before[t]);
    }
    return total;
}

inline double lstm_emb(const std::vector<std::uint32_t>& words, const qac::ModelParams& p) {
    Run run = unroll(words, p);
    double s = 0.0;
    for (std::size_t m = 0; m < p.dim; ++m) s += run.final_hidden[m] * p.emb_weights[m];
    return s;
}

/// Sum of the next-token distribution at every scored position.
inline std::vector<double> softmax_sums(const std::vector<std::uint32_t>& words, const qac::ModelParams& p) {
    Run run = unroll(words, p);
    std::vector<double> sums;
    for (const auto& h : run.before) {
        double z = log_sum_exp(p, h);
        double s = 0.0;
        for (std::uint32_t j = 0; j < p.vocab_size; ++j) s += std::exp(logit(p, j, h) - z);
        sums.push_back(s);
    }
    return sums;
}

// ------------------------------------------------------------- gradients

/// Central differences of f over every scalar of every block.
inline qac::ModelParams numeric_gradient(const qac::ModelParams& params,
                                         const std::function<double(const qac::ModelParams&)>& f,
                                         double eps) {
    qac::ModelParams grads = qac::ModelParams::zeros(params.vocab_size, params.dim, params.layers.size());
    qac::ModelParams probe = params;
    std::vector<std::span<double>> probe_blocks, grad_blocks;
    qac::ModelParams::for_each_block(probe, [&](std::string_view, std::span<double> b, bool) {
        probe_blocks.push_back(b);
    });
    qac::ModelParams::for_each_block(grads, [&](std::string_view, std::span<double> b, bool) {
        grad_blocks.push_back(b);
    });
    for (std::size_t b = 0; b < probe_blocks.size(); ++b) {
        for (std::size_t i = 0; i < probe_blocks[b].size(); ++i) {
            double saved = probe_blocks[b][i];
            probe_blocks[b][i] = saved + eps;
            double up = f(probe);
            probe_blocks[b][i] = saved - eps;
            double down = f(probe);
            probe_blocks[b][i] = saved;
            grad_blocks[b][i] = (up - down) / (2.0 * eps);
        }
    }
    return grads;
}

struct BlockError {
    std::string name;
    double relative = 0.0;
    double analytic_norm = 0.0;
    double numeric_norm = 0.0;
};

/// ||a - n|| / max(||a||, ||n||) per block; blocks where both norms are below
/// `floor` count as agreeing.
inline std::vector<BlockError> block_errors(const qac::ModelParams& analytic, const qac::ModelParams& numeric,
                                            double floor = 1e-9) {
    std::vector<std::pair<std::string, std::span<const double>>> a, n;
    qac::ModelParams::for_each_block(analytic, [&](std::string_view name, std::span<const double> b, bool) {
        a.emplace_back(std::string(name), b);
    });
    qac::ModelParams::for_each_block(numeric, [&](std::string_view name, std::span<const double> b, bool) {
        n.emplace_back(std::string(name), b);
    });
    std::vector<BlockError> out;
    for (std::size_t b = 0; b < a.size(); ++b) {
        double diff = 0.0, na = 0.0, nn = 0.0;
        for (std::size_t i = 0; i < a[b].second.size(); ++i) {
            double x = a[b].second[i], y = n[b].second[i];
            diff += (x - y) * (x - y);
            na += x * x;
            nn += y * y;
        }
        diff = std::sqrt(diff);
        na = std::sqrt(na);
        nn = std::sqrt(nn);
        double scale = std::max(na, nn);
        out.push_back({a[b].first, scale < floor ? 0.0 : diff / scale, na, nn});
    }
    return out;
}

// --------------------------------------------------------------- metrics

struct Metric {
    double all = 0.0, seen = 0.0, unseen = 0.0;
};

// Walks the cases once per partition, summing in case order.
inline Metric brute_metric(const std::vector<qac::EvalCase>& cases, const qac::RankedLists& lists,
                           std::size_t k, bool reciprocal) {
    auto over = [&](int which) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < cases.size(); ++i) {
            if (which == 1 && !cases[i].seen) continue;
            if (which == 2 && cases[i].seen) continue;
            ++n;
            std::size_t limit = std::min(k, lists[i].size());
            for (std::size_t r = 0; r < limit; ++r) {
                if (lists[i][r] == cases[i].target) {
                    sum += reciprocal ? 1.0 / static_cast<double>(r + 1) : 1.0;
                    break;
                }
            }
        }
        return n == 0 ? 0.0 : sum / static_cast<double>(n);
    };
    return {over(0), over(1), over(2)};
}

/// Highest MRR@k any per-case reordering of the lists can reach, by trying
/// every permutation of every list.
inline double best_mrr(const std::vector<qac::EvalCase>& cases, const qac::RankedLists& lists, std::size_t k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        std::vector<std::string> list = lists[i];
        std::sort(list.begin(), list.end());
        double best = 0.0;
        do {
            for (std::size_t r = 0; r < std::min(k, list.size()); ++r) {
                if (list[r] == cases[i].target) {
                    best = std::max(best, 1.0 / static_cast<double>(r + 1));
                    break;
                }
            }
        } while (std::next_permutation(list.begin(), list.end()));
        sum += best;
    }
    return cases.empty() ? 0.0 : sum / static_cast<double>(cases.size());
}

}  // namespace oracle
