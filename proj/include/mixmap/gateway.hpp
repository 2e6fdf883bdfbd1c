#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>

#include <json.hpp>

#include "mixmap/engine.hpp"
#include "mixmap/session.hpp"

namespace mixmap {

struct ServerConfig {
    std::filesystem::path data;
    std::filesystem::path schema;  // empty: generic column names
    std::filesystem::path model;
    std::filesystem::path embedding;
    std::filesystem::path input_embedding;  // optional
    std::filesystem::path session_log_dir;  // optional; one .jsonl per session
    bool train_on_start = false;
    bool embed_on_start = false;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::uint64_t seed = 0;
    std::size_t page_size = 10000;
    EngineConfig engine;
    TrainConfig train;
    TsneConfig tsne;

    // Unknown keys are rejected so typos surface at startup.
    static ServerConfig from_json(const nlohmann::json& j);
    static ServerConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
    void validate() const;
};

struct Fingerprints {
    std::string dataset;
    std::string model;
    std::string embedding;
    std::string input_embedding;

    nlohmann::json to_json() const;
};

// Loads (or computes) every artifact named by the config. Progress goes to `log`.
std::shared_ptr<const Engine> build_engine(const ServerConfig& config, std::ostream* log = nullptr);

Fingerprints engine_fingerprints(const Engine& engine);

struct ApiRequest {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
};

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

// Transport-independent request router. Each session is single-writer: a
// request that finds its session locked gets 409 instead of queueing.
class Api {
public:
    explicit Api(std::shared_ptr<const Engine> engine, std::size_t default_page_size = 10000,
                 std::filesystem::path session_log_dir = {});

    ApiResponse handle(const ApiRequest& request);

    const Fingerprints& fingerprints() const { return fingerprints_; }
    const Engine& engine() const { return *engine_; }

    struct SessionSlot {
        std::mutex mutex;
        std::unique_ptr<Session> session;
    };
    // Looks up a session slot; throws Error(not_found).
    std::shared_ptr<SessionSlot> slot(const std::string& id) const;

private:
    nlohmann::json route(const ApiRequest& request);
    nlohmann::json session_op(const std::string& id, const std::string& op, const nlohmann::json& body);
    nlohmann::json create_session(const nlohmann::json& body);
    nlohmann::json hits_json(const std::vector<NeighborHit>& hits) const;
    std::size_t page_size(const ApiRequest& request) const;

    std::shared_ptr<const Engine> engine_;
    Fingerprints fingerprints_;
    std::size_t default_page_size_;
    std::filesystem::path log_dir_;
    mutable std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<SessionSlot>> sessions_;
    std::uint64_t next_session_ = 1;
};

int http_status(ErrorKind kind);
nlohmann::json error_json(const Error& e);

// Pages are 0-based; the response names total and page count.
nlohmann::json paginate(const nlohmann::json& ids, const nlohmann::json& values, const char* values_key,
                        std::size_t page, std::size_t page_size);

// HTTP front end over an Api.
class HttpServer {
public:
    HttpServer(Api& api, std::string host, int port);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Binds (port 0 picks a free one) and serves on a background thread.
    void start();
    // Binds and serves on the calling thread until stop(); `on_ready` gets
    // the bound port.
    void run(const std::function<void(int)>& on_ready = {});
    void stop();
    int port() const { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::string host_;
    int port_;
};

}  // namespace mixmap
