#include "qac/service.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <istream>

#include <httplib.h>

namespace qac {

namespace {

std::string trim(std::string_view text) {
    auto first = text.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    auto last = text.find_last_not_of(" \t\r");
    return std::string(text.substr(first, last - first + 1));
}

std::size_t parse_k(const std::string& text) {
    std::size_t used = 0;
    long long value = 0;
    try {
        value = std::stoll(text, &used);
    } catch (const std::exception&) {
        throw ServiceError(400, "k must be an integer");
    }
    if (used != text.size()) throw ServiceError(400, "k must be an integer");
    if (value < 1 || value > static_cast<long long>(kMaxServiceK)) {
        throw ServiceError(400, "k must lie in [1, " + std::to_string(kMaxServiceK) + "]");
    }
    return static_cast<std::size_t>(value);
}

template <typename Parse>
auto parse_option(const std::string& value, Parse parse) {
    try {
        return parse(value);
    } catch (const std::invalid_argument& e) {
        throw ServiceError(400, e.what());
    }
}

std::int64_t micros_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start)
        .count();
}

}  // namespace

ServiceConfig parse_service_config(std::istream& in) {
    ServiceConfig config;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) continue;
        auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(body.substr(0, eq));
        std::string value = trim(body.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        if (key == "query_index") config.query_index = value;
        else if (key == "suffix_index") config.suffix_index = value;
        else if (key == "model") config.model = value;
        else if (key == "generator") config.defaults.generator = parse_generation_mode(value);
        else if (key == "ranking") config.defaults.ranking = parse_rank_mode(value);
        else if (key == "scorer") config.defaults.scorer = parse_scorer(value);
        else if (key == "k") config.defaults.k = static_cast<std::size_t>(std::stoul(value));
        else if (key == "host") config.host = value;
        else if (key == "port") config.port = std::stoi(value);
        else if (key == "cors_origin") config.cors_origin = value;
        else if (key == "static_dir") config.static_dir = value;
        else throw std::invalid_argument("unknown config key: " + key);
    }
    if (config.defaults.k < 1 || config.defaults.k > kMaxServiceK) {
        throw std::invalid_argument("config k must lie in [1, 50]");
    }
    if (needs_model(config.defaults.ranking) && !config.model) {
        throw std::invalid_argument("ranking mode " + std::string(to_string(config.defaults.ranking)) +
                                    " requires a model path");
    }
    return config;
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    return parse_service_config(in);
}

void apply_environment(ServiceConfig& config) {
    if (const char* port = std::getenv("QAC_PORT"); port != nullptr && *port != '\0') {
        config.port = std::stoi(port);
    }
}

nlohmann::json to_json(const CompletionResponse& response) {
    nlohmann::json candidates = nlohmann::json::array();
    for (const auto& c : response.candidates) {
        nlohmann::json item = {{"text", c.text}, {"source", std::string(to_string(c.source))},
                               {"frequency", c.frequency}};
        if (c.neural_score) item["score"] = *c.neural_score;
        candidates.push_back(std::move(item));
    }
    return {{"prefix", response.prefix},
            {"candidates", std::move(candidates)},
            {"gen_us", response.gen_us},
            {"rank_us", response.rank_us}};
}

std::unique_ptr<CompletionService> CompletionService::load(const ServiceConfig& config) {
    PrefixIndex query_index = PrefixIndex::load(config.query_index);
    PrefixIndex suffix_index = PrefixIndex::load(config.suffix_index);
    std::optional<LanguageModel> model;
    if (config.model) model = LanguageModel::load(*config.model);
    return std::make_unique<CompletionService>(std::move(query_index), std::move(suffix_index),
                                               std::move(model), config.defaults);
}

CompletionService::CompletionService(PrefixIndex query_index, PrefixIndex suffix_index,
                                     std::optional<LanguageModel> model, PipelineConfig defaults)
    : query_index_(std::move(query_index)),
      suffix_index_(std::move(suffix_index)),
      model_(std::move(model)),
      defaults_(defaults),
      pipeline_(query_index_, suffix_index_, model_ ? &*model_ : nullptr) {}

CompletionResponse CompletionService::complete(std::string_view raw_prefix,
                                               const CompletionOptions& options) const {
    PipelineConfig config = defaults_;
    if (options.k) config.k = *options.k;
    if (options.generator) config.generator = *options.generator;
    if (options.ranking) config.ranking = *options.ranking;
    if (options.scorer) config.scorer = *options.scorer;
    if (config.k < 1 || config.k > kMaxServiceK) {
        throw ServiceError(400, "k must lie in [1, " + std::to_string(kMaxServiceK) + "]");
    }
    if (needs_model(config.ranking) && !model_) {
        throw ServiceError(503, "ranking mode " + std::string(to_string(config.ranking)) +
                                    " needs a model and none is loaded");
    }

    CompletionResponse response;
    response.prefix = std::string(raw_prefix);
    std::string prefix = normalize_prefix(raw_prefix);
    auto start = std::chrono::steady_clock::now();
    auto generated = pipeline_.generate(prefix, config);
    response.gen_us = micros_since(start);
    start = std::chrono::steady_clock::now();
    response.candidates = pipeline_.rank(std::move(generated), config);
    response.rank_us = micros_since(start);
    return response;
}

nlohmann::json CompletionService::health() const {
    nlohmann::json status = {
        {"status", "ok"},
        {"query_index", {{"format", "QACIDX1"}, {"entries", query_index_.size()}}},
        {"suffix_index", {{"format", "QACIDX1"}, {"entries", suffix_index_.size()}}},
        {"defaults",
         {{"generator", std::string(to_string(defaults_.generator))},
          {"ranking", std::string(to_string(defaults_.ranking))},
          {"scorer", std::string(to_string(defaults_.scorer))},
          {"k", defaults_.k}}},
    };
    if (model_) {
        status["model"] = {{"loaded", true},
                           {"format", model_->params.layers.size() == 1 ? "QACLM1" : "QACLM2"},
                           {"vocab_size", model_->params.vocab_size},
                           {"dim", model_->params.dim},
                           {"layers", model_->params.layers.size()}};
    } else {
        status["model"] = {{"loaded", false}};
    }
    return status;
}

struct HttpServer::Impl {
    httplib::Server server;
};

HttpServer::HttpServer(const CompletionService& service, std::string cors_origin,
                       std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>()) {
    auto& server = impl_->server;
    server.set_default_headers({{"Access-Control-Allow-Origin", cors_origin},
                                {"Access-Control-Allow-Methods", "GET, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});

    auto send_error = [](httplib::Response& res, int status, const std::string& message) {
        res.status = status;
        res.set_content(nlohmann::json{{"error", message}}.dump(), "application/json");
    };

    server.Get("/complete", [&service, send_error](const httplib::Request& req, httplib::Response& res) {
        try {
            CompletionOptions options;
            if (req.has_param("k")) options.k = parse_k(req.get_param_value("k"));
            if (req.has_param("generator")) {
                options.generator = parse_option(req.get_param_value("generator"), parse_generation_mode);
            }
            if (req.has_param("ranking")) {
                options.ranking = parse_option(req.get_param_value("ranking"), parse_rank_mode);
            }
            if (req.has_param("scorer")) {
                options.scorer = parse_option(req.get_param_value("scorer"), parse_scorer);
            }
            std::string prefix = req.has_param("prefix") ? req.get_param_value("prefix") : std::string();
            res.set_content(to_json(service.complete(prefix, options)).dump(), "application/json");
        } catch (const ServiceError& e) {
            send_error(res, e.status(), e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, e.what());
        }
    });
    server.Get("/health", [&service](const httplib::Request&, httplib::Response& res) {
        res.set_content(service.health().dump(), "application/json");
    });
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    if (static_dir) {
        if (!server.set_mount_point("/", static_dir->string())) {
            throw std::runtime_error("static directory not found: " + static_dir->string());
        }
    }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace qac
