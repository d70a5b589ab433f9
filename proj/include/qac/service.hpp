#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "qac/pipeline.hpp"

namespace qac {

struct ServiceConfig {
    std::filesystem::path query_index;
    std::filesystem::path suffix_index;
    std::optional<std::filesystem::path> model;
    PipelineConfig defaults;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string cors_origin = "*";
    std::optional<std::filesystem::path> static_dir;
};

/// key = value lines; '#' starts a comment, values may be double-quoted.
/// Keys: query_index, suffix_index, model, generator, ranking, scorer, k,
/// host, port, cors_origin, static_dir. Unknown keys are rejected.
ServiceConfig parse_service_config(std::istream& in);
ServiceConfig load_service_config(const std::filesystem::path& path);
/// Applies QAC_PORT when it is set.
void apply_environment(ServiceConfig& config);

struct CompletionResponse {
    std::string prefix;
    std::vector<Candidate> candidates;
    std::int64_t gen_us = 0;
    std::int64_t rank_us = 0;
};

nlohmann::json to_json(const CompletionResponse& response);

/// Request failure carrying the HTTP status to report.
class ServiceError : public std::runtime_error {
public:
    ServiceError(int status, const std::string& message) : std::runtime_error(message), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

/// Per-request overrides of the configured pipeline.
struct CompletionOptions {
    std::optional<std::size_t> k;
    std::optional<GenerationMode> generator;
    std::optional<RankMode> ranking;
    std::optional<ScorerKind> scorer;
};

inline constexpr std::size_t kMaxServiceK = 50;

/// Loaded indexes and model plus the default pipeline. Immutable after
/// construction; complete() and health() are safe to call concurrently.
class CompletionService {
public:
    /// Loads everything up front and throws if any file is missing or corrupt.
    /// A configured model that fails to load is an error; no model at all is
    /// fine until a request needs one.
    static std::unique_ptr<CompletionService> load(const ServiceConfig& config);

    CompletionService(PrefixIndex query_index, PrefixIndex suffix_index,
                      std::optional<LanguageModel> model, PipelineConfig defaults);
    CompletionService(const CompletionService&) = delete;
    CompletionService& operator=(const CompletionService&) = delete;

    /// Throws ServiceError(400) for k outside [1, 50] and ServiceError(503)
    /// when the ranking mode needs a model that is not loaded.
    CompletionResponse complete(std::string_view raw_prefix, const CompletionOptions& options = {}) const;

    nlohmann::json health() const;

    const PipelineConfig& defaults() const noexcept { return defaults_; }
    const Pipeline& pipeline() const noexcept { return pipeline_; }

private:
    PrefixIndex query_index_;
    PrefixIndex suffix_index_;
    std::optional<LanguageModel> model_;
    PipelineConfig defaults_;
    Pipeline pipeline_;
};

/// HTTP front end: GET /complete, GET /health, and static files under / when
/// a directory is configured.
class HttpServer {
public:
    HttpServer(const CompletionService& service, std::string cors_origin = "*",
               std::optional<std::filesystem::path> static_dir = std::nullopt);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds to the port (0 picks a free one) and returns the bound port, or -1.
    int bind(const std::string& host, int port);
    /// Blocks serving requests until stop().
    bool listen();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace qac
