#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>

#include "qac/bench.hpp"
#include "qac/corpus.hpp"
#include "qac/metrics.hpp"
#include "qac/service.hpp"
#include "qac/training.hpp"

using namespace qac;
namespace fs = std::filesystem;

namespace {

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::vector<std::pair<std::string, std::uint64_t>> as_entries(const QueryCounts& counts) {
    return {counts.begin(), counts.end()};
}

std::vector<TrainingPair> load_pairs(const fs::path& path) {
    auto in = open_in(path);
    return read_pairs(in);
}

// Token counts over every text in the pairs, or over background queries
// weighted by frequency when a counts file is given.
Vocabulary build_vocab(const std::vector<TrainingPair>& pairs, const std::optional<fs::path>& counts_path,
                       std::size_t size) {
    std::unordered_map<std::string, std::uint64_t> counts;
    if (counts_path) {
        auto in = open_in(*counts_path);
        for (const auto& [text, freq] : read_counts(in)) {
            for (const auto& w : split_tokens(text)) counts[w] += freq;
        }
    } else {
        for (const auto& p : pairs) {
            for (const auto& w : split_tokens(p.positive)) ++counts[w];
            for (const auto& n : p.negatives) {
                for (const auto& w : split_tokens(n)) ++counts[w];
            }
        }
    }
    return Vocabulary::build(counts, size);
}

// Validation pairs from the file when given, otherwise the tail of `pairs`.
std::vector<TrainingPair> validation_split(std::vector<TrainingPair>& pairs, const std::optional<fs::path>& path,
                                           double holdout) {
    if (path) return load_pairs(*path);
    auto keep = pairs.size() - static_cast<std::size_t>(static_cast<double>(pairs.size()) * holdout);
    std::vector<TrainingPair> tail(pairs.begin() + static_cast<std::ptrdiff_t>(keep), pairs.end());
    pairs.resize(keep);
    return tail;
}

// --- prepare -----------------------------------------------------------------

struct PrepareArgs {
    fs::path log;
    bool aol = false;
    std::string background_end, train_end, validation_end;
    fs::path out_dir = ".";
    std::size_t suffix_limit = kDefaultSuffixLimit;
    std::size_t k = kDefaultCandidateCap;
    std::uint64_t seed = 1;
};

int run_prepare(const PrepareArgs& a) {
    auto in = open_in(a.log);
    auto records = preprocess(read_log(in, a.aol ? kAolColumns : LogColumns{}));
    auto split = split_by_time(records, {parse_timestamp(a.background_end), parse_timestamp(a.train_end),
                                         parse_timestamp(a.validation_end)});
    auto background = count_frequencies(split.background);
    auto suffixes = extract_top_suffixes(background, a.suffix_limit);
    if (background.empty()) throw std::runtime_error("no background query reaches the frequency threshold");

    fs::create_directories(a.out_dir);
    {
        auto out = open_out(a.out_dir / "background.tsv");
        write_counts(out, background);
    }
    {
        auto out = open_out(a.out_dir / "suffixes.tsv");
        write_counts(out, suffixes);
    }
    auto qi = PrefixIndex::build(as_entries(background));
    auto si = PrefixIndex::build(as_entries(suffixes));
    qi.save(a.out_dir / "query.idx");
    si.save(a.out_dir / "suffix.idx");

    Pipeline pipeline(qi, si);
    PipelineConfig config{GenerationMode::Mcg, RankMode::Frequency, ScorerKind::Unnormalized, a.k};
    CandidateGenerator generator = [&](const std::string& prefix) {
        std::vector<std::string> texts;
        for (const auto& c : pipeline.generate(prefix, config)) texts.push_back(c.text);
        return texts;
    };
    auto texts = [](const std::vector<LogRecord>& rs) {
        std::vector<std::string> out;
        out.reserve(rs.size());
        for (const auto& r : rs) out.push_back(r.query_text);
        return out;
    };
    auto train_pairs = make_training_pairs(texts(split.train), generator, a.k, a.seed);
    auto validation_pairs = make_training_pairs(texts(split.validation), generator, a.k, a.seed + 1);
    {
        auto out = open_out(a.out_dir / "pairs.tsv");
        write_pairs(out, train_pairs);
    }
    {
        auto out = open_out(a.out_dir / "validation_pairs.tsv");
        write_pairs(out, validation_pairs);
    }
    std::mt19937_64 rng(a.seed + 2);
    std::vector<PrefixSample> test;
    for (const auto& r : split.test) test.push_back(sample_prefix(r.query_text, rng));
    {
        auto out = open_out(a.out_dir / "test_cases.tsv");
        write_samples(out, test);
    }

    std::cerr << "records " << records.size() << " (background " << split.background.size() << ", train "
              << split.train.size() << ", validation " << split.validation.size() << ", test "
              << split.test.size() << ")\n"
              << "background queries " << background.size() << ", suffixes " << suffixes.size() << "\n"
              << "pairs train " << train_pairs.size() << ", validation " << validation_pairs.size()
              << ", test cases " << test.size() << "\n";
    return 0;
}

// --- index / generate ----------------------------------------------------------

int run_index(const fs::path& counts_path, const fs::path& out) {
    auto in = open_in(counts_path);
    auto index = PrefixIndex::build(as_entries(read_counts(in)));
    index.save(out);
    std::cerr << "indexed " << index.size() << " entries\n";
    return 0;
}

struct GenerateArgs {
    std::string mode = "mcg";
    std::string prefix;
    std::size_t k = kDefaultCandidateCap;
    fs::path query_index, suffix_index;
};

int run_generate(const GenerateArgs& a) {
    auto qi = PrefixIndex::load(a.query_index);
    auto si = PrefixIndex::load(a.suffix_index);
    for (const auto& c : generate(parse_generation_mode(a.mode), qi, si, normalize_prefix(a.prefix), a.k)) {
        std::cout << c.text << '\t' << to_string(c.source) << '\t' << c.frequency << '\n';
    }
    return 0;
}

// --- train ---------------------------------------------------------------------

struct TrainArgs {
    fs::path pairs;
    std::optional<fs::path> validation_pairs;
    std::optional<fs::path> counts;
    std::size_t vocab_size = Vocabulary::kDefaultMaxSize;
    std::string scorer = "unnormalized";
    double holdout = 0.1;
    fs::path out;
    TrainConfig config;
};

int run_train(TrainArgs a) {
    auto pairs = load_pairs(a.pairs);
    auto validation = validation_split(pairs, a.validation_pairs, a.holdout);
    if (pairs.empty()) throw std::runtime_error("no training pairs");

    a.config.scorer = parse_scorer(a.scorer);
    LanguageModel model{build_vocab(pairs, a.counts, a.vocab_size), {}};
    auto train_enc = encode_pairs(pairs, model.vocab, a.config.max_tokens);
    auto val_enc = encode_pairs(validation, model.vocab, a.config.max_tokens);
    std::cerr << "vocab " << model.vocab.size() << ", pairs " << train_enc.size() << " train / " << val_enc.size()
              << " validation\n";
    std::cout << "epoch\tloss\tval_mrr\n";
    auto result = train(train_enc, val_enc, model.vocab.size(), a.config, [](const EpochMetrics& e) {
        std::printf("%zu\t%.6f\t%.6f\n", e.epoch, e.mean_loss, e.validation_mrr);
        std::fflush(stdout);
    });
    model.params = std::move(result.params);
    model.save(a.out);
    std::cerr << "kept epoch " << result.best_epoch << ", wrote " << a.out.string() << "\n";
    return 0;
}

// --- eval ------------------------------------------------------------------------

struct EvalArgs {
    std::optional<fs::path> model;
    fs::path query_index, suffix_index, cases;
    std::string mode = "frequency", generator = "mcg", scorer = "unnormalized";
    std::size_t k = kDefaultCandidateCap;
};

int run_eval(const EvalArgs& a) {
    PipelineConfig config{parse_generation_mode(a.generator), parse_rank_mode(a.mode), parse_scorer(a.scorer), a.k};
    std::optional<LanguageModel> model;
    if (a.model) model = LanguageModel::load(*a.model);
    if (needs_model(config.ranking) && !model) throw std::runtime_error("--mode " + a.mode + " needs --model");
    auto qi = PrefixIndex::load(a.query_index);
    auto si = PrefixIndex::load(a.suffix_index);
    auto in = open_in(a.cases);
    auto cases = partition_seen(read_samples(in), qi);
    Pipeline pipeline(qi, si, model ? &*model : nullptr);
    auto result = evaluate(cases, pipeline, config);
    std::cout << report_header() << '\n' << report_row(config, result.report) << '\n';
    return 0;
}

// --- bench / sweep ------------------------------------------------------------------

struct BenchArgs {
    std::optional<fs::path> model;
    std::size_t vocab_size = Vocabulary::kDefaultMaxSize;
    std::size_t dim = 100;
    std::size_t layers = 1;
    std::size_t runs = kDefaultBenchRuns;
    std::size_t warmup = kDefaultWarmupRuns;
    std::vector<std::string> scorers{"unnormalized", "normalized", "lstm_emb"};
};

int run_bench(const BenchArgs& a) {
    auto model = a.model ? LanguageModel::load(*a.model) : make_random_model(a.vocab_size, a.dim, a.layers, 1);
    auto fixture = make_bench_fixture(model.vocab);
    std::cout << latency_header() << '\n';
    for (const auto& name : a.scorers) {
        auto report = bench_ranking(model, parse_scorer(name), fixture, a.runs, a.warmup);
        std::cout << latency_row(name, report) << '\n' << std::flush;
    }
    return 0;
}

struct SweepArgs {
    fs::path pairs;
    std::optional<fs::path> validation_pairs;
    std::optional<fs::path> counts;
    std::size_t vocab_size = Vocabulary::kDefaultMaxSize;
    std::vector<std::size_t> dims{32, 64, 100, 128, 256};
    std::vector<std::size_t> layers{1};
    std::size_t runs = kDefaultBenchRuns;
    double holdout = 0.1;
    TrainConfig config;
};

int run_sweep(SweepArgs a) {
    auto pairs = load_pairs(a.pairs);
    auto validation = validation_split(pairs, a.validation_pairs, a.holdout);
    auto vocab = build_vocab(pairs, a.counts, a.vocab_size);
    auto train_enc = encode_pairs(pairs, vocab, a.config.max_tokens);
    auto val_enc = encode_pairs(validation, vocab, a.config.max_tokens);
    SweepData data{std::move(vocab), std::move(train_enc), std::move(val_enc)};
    std::cout << "dim\tlayers\tmean_ms\tval_mrr\n";
    for (const auto& row : sweep_bench(a.dims, a.layers, data, a.config, a.runs)) {
        std::printf("%zu\t%zu\t%.4f\t%.4f\n", row.dim, row.layers, row.mean_ms, row.validation_mrr);
    }
    return 0;
}

// --- serve ------------------------------------------------------------------------------

struct ServeArgs {
    std::optional<fs::path> config;
    std::optional<fs::path> query_index, suffix_index, model, static_dir;
    std::optional<std::string> generator, ranking, scorer, host, cors_origin;
    std::optional<std::size_t> k;
    std::optional<int> port;
};

int run_serve(const ServeArgs& a) {
    ServiceConfig config = a.config ? load_service_config(*a.config) : ServiceConfig{};
    if (a.query_index) config.query_index = *a.query_index;
    if (a.suffix_index) config.suffix_index = *a.suffix_index;
    if (a.model) config.model = *a.model;
    if (a.static_dir) config.static_dir = *a.static_dir;
    if (a.generator) config.defaults.generator = parse_generation_mode(*a.generator);
    if (a.ranking) config.defaults.ranking = parse_rank_mode(*a.ranking);
    if (a.scorer) config.defaults.scorer = parse_scorer(*a.scorer);
    if (a.k) config.defaults.k = *a.k;
    if (a.host) config.host = *a.host;
    if (a.cors_origin) config.cors_origin = *a.cors_origin;
    apply_environment(config);
    if (a.port) config.port = *a.port;
    if (config.query_index.empty() || config.suffix_index.empty()) {
        throw std::runtime_error("both --query-index and --suffix-index are required (or a config file)");
    }

    auto service = CompletionService::load(config);
    HttpServer server(*service, config.cors_origin, config.static_dir);
    int port = server.bind(config.host, config.port);
    if (port < 0) throw std::runtime_error("cannot bind " + config.host + ":" + std::to_string(config.port));
    std::cerr << "listening on http://" << config.host << ":" << port << "\n";
    return server.listen() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Query auto-completion: candidate generation, neural ranking and evaluation"};
    app.require_subcommand(1);

    PrepareArgs prep;
    auto* prepare = app.add_subcommand("prepare", "Split a log and write counts, indexes, pairs and test cases");
    prepare->add_option("--log", prep.log, "Tab-separated log")->required()->check(CLI::ExistingFile);
    prepare->add_flag("--aol", prep.aol, "AOL column layout (AnonID, Query, QueryTime, ...)");
    prepare->add_option("--background-end", prep.background_end, "End of the background window")->required();
    prepare->add_option("--train-end", prep.train_end, "End of the training window")->required();
    prepare->add_option("--validation-end", prep.validation_end, "End of the validation window")->required();
    prepare->add_option("--out-dir", prep.out_dir, "Output directory")->capture_default_str();
    prepare->add_option("--suffix-limit", prep.suffix_limit, "Suffixes kept")->capture_default_str();
    prepare->add_option("--k", prep.k, "Candidates per training prefix")->capture_default_str();
    prepare->add_option("--seed", prep.seed, "Prefix sampling seed")->capture_default_str();

    fs::path counts_path, index_out;
    auto* index = app.add_subcommand("index", "Build a prefix index from a text<TAB>frequency file");
    index->add_option("--counts", counts_path)->required()->check(CLI::ExistingFile);
    index->add_option("--out", index_out)->required();

    GenerateArgs gen;
    auto* generate_cmd = app.add_subcommand("generate", "Print candidates as text<TAB>source<TAB>frequency");
    generate_cmd->add_option("--mode", gen.mode)->check(CLI::IsMember({"mpc", "lwg", "mcg"}))->capture_default_str();
    generate_cmd->add_option("--prefix", gen.prefix)->required();
    generate_cmd->add_option("--k", gen.k)->capture_default_str();
    generate_cmd->add_option("--query-index", gen.query_index)->required()->check(CLI::ExistingFile);
    generate_cmd->add_option("--suffix-index", gen.suffix_index)->required()->check(CLI::ExistingFile);

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train the ranking language model on pairs");
    train_cmd->add_option("--pairs", tr.pairs)->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--validation-pairs", tr.validation_pairs)->check(CLI::ExistingFile);
    train_cmd->add_option("--holdout", tr.holdout, "Fraction held out when no validation pairs are given")
        ->check(CLI::Range(0.0, 0.9))
        ->capture_default_str();
    train_cmd->add_option("--counts", tr.counts, "Build the vocabulary from background counts")
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--vocab-size", tr.vocab_size)->capture_default_str();
    train_cmd->add_option("--dim", tr.config.dim)->capture_default_str();
    train_cmd->add_option("--layers", tr.config.num_layers)->check(CLI::Range(1, 4))->capture_default_str();
    train_cmd->add_option("--epochs", tr.config.epochs)->capture_default_str();
    train_cmd->add_option("--batch-size", tr.config.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
    train_cmd->add_option("--max-tokens", tr.config.max_tokens)->capture_default_str();
    train_cmd->add_option("--lr", tr.config.optimizer.learning_rate)->capture_default_str();
    train_cmd->add_option("--weight-decay", tr.config.optimizer.weight_decay)->capture_default_str();
    train_cmd->add_option("--seed", tr.config.seed)->capture_default_str();
    train_cmd->add_option("--scorer", tr.scorer)
        ->check(CLI::IsMember({"unnormalized", "lstm_emb"}))
        ->capture_default_str();
    train_cmd->add_option("--out", tr.out)->required();

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "Recall@k and MRR@k over test cases, split by seen/unseen");
    eval->add_option("--model", ev.model)->check(CLI::ExistingFile);
    eval->add_option("--mode", ev.mode)->check(CLI::IsMember({"frequency", "neural", "hybrid"}))->capture_default_str();
    eval->add_option("--generator", ev.generator)->check(CLI::IsMember({"mpc", "lwg", "mcg"}))->capture_default_str();
    eval->add_option("--scorer", ev.scorer)
        ->check(CLI::IsMember({"unnormalized", "normalized", "lstm_emb"}))
        ->capture_default_str();
    eval->add_option("--cases", ev.cases, "prefix<TAB>target file")->required()->check(CLI::ExistingFile);
    eval->add_option("--query-index", ev.query_index)->required()->check(CLI::ExistingFile);
    eval->add_option("--suffix-index", ev.suffix_index)->required()->check(CLI::ExistingFile);
    eval->add_option("--k", ev.k)->capture_default_str();

    BenchArgs be;
    auto* bench = app.add_subcommand("bench", "Ranking latency per scorer");
    bench->add_option("--model", be.model, "Trained model; a random one is used otherwise")->check(CLI::ExistingFile);
    bench->add_option("--vocab-size", be.vocab_size, "Random model vocabulary")->capture_default_str();
    bench->add_option("--dim", be.dim, "Random model hidden size")->capture_default_str();
    bench->add_option("--layers", be.layers, "Random model layers")->capture_default_str();
    bench->add_option("--runs", be.runs)->check(CLI::PositiveNumber)->capture_default_str();
    bench->add_option("--warmup", be.warmup)->capture_default_str();
    bench->add_option("--scorers", be.scorers)->delimiter(',')->capture_default_str();

    SweepArgs sw;
    auto* sweep = app.add_subcommand("sweep", "Latency and validation MRR across hidden sizes and layers");
    sweep->add_option("--pairs", sw.pairs)->required()->check(CLI::ExistingFile);
    sweep->add_option("--validation-pairs", sw.validation_pairs)->check(CLI::ExistingFile);
    sweep->add_option("--holdout", sw.holdout, "Fraction held out when no validation pairs are given")
        ->check(CLI::Range(0.0, 0.9))
        ->capture_default_str();
    sweep->add_option("--counts", sw.counts)->check(CLI::ExistingFile);
    sweep->add_option("--vocab-size", sw.vocab_size)->capture_default_str();
    sweep->add_option("--dims", sw.dims)->delimiter(',')->capture_default_str();
    sweep->add_option("--layers", sw.layers)->delimiter(',')->capture_default_str();
    sweep->add_option("--epochs", sw.config.epochs)->capture_default_str();
    sweep->add_option("--runs", sw.runs)->check(CLI::PositiveNumber)->capture_default_str();
    sweep->add_option("--seed", sw.config.seed)->capture_default_str();

    ServeArgs sv;
    auto* serve = app.add_subcommand("serve", "HTTP completion service");
    serve->add_option("--config", sv.config, "key = value config file")->check(CLI::ExistingFile);
    serve->add_option("--query-index", sv.query_index)->check(CLI::ExistingFile);
    serve->add_option("--suffix-index", sv.suffix_index)->check(CLI::ExistingFile);
    serve->add_option("--model", sv.model)->check(CLI::ExistingFile);
    serve->add_option("--static-dir", sv.static_dir)->check(CLI::ExistingDirectory);
    serve->add_option("--generator", sv.generator)->check(CLI::IsMember({"mpc", "lwg", "mcg"}));
    serve->add_option("--ranking", sv.ranking)->check(CLI::IsMember({"frequency", "neural", "hybrid"}));
    serve->add_option("--scorer", sv.scorer)->check(CLI::IsMember({"unnormalized", "normalized", "lstm_emb"}));
    serve->add_option("--k", sv.k)->check(CLI::Range(1, static_cast<int>(kMaxServiceK)));
    serve->add_option("--host", sv.host);
    serve->add_option("--port", sv.port, "Overrides QAC_PORT")->check(CLI::Range(0, 65535));
    serve->add_option("--cors-origin", sv.cors_origin);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*prepare) return run_prepare(prep);
        if (*index) return run_index(counts_path, index_out);
        if (*generate_cmd) return run_generate(gen);
        if (*train_cmd) return run_train(tr);
        if (*eval) return run_eval(ev);
        if (*bench) return run_bench(be);
        if (*sweep) return run_sweep(sw);
        if (*serve) return run_serve(sv);
    } catch (const std::exception& e) {
        std::cerr << "qac: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
