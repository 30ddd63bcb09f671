#pragma once

// Service/CLI configuration file. Relative paths resolve against the
// directory holding the config file. Environment overrides:
//   PROMPTAID_LISTEN       host:port
//   PROMPTAID_GATEWAY_URL  base_url of every remote model backend
//   PROMPTAID_EMBED_URL    base_url of a remote embedding backend

#include "promptaid/embedding.hpp"
#include "promptaid/gateway.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace promptaid {

struct EmbeddingConfig {
    std::string type = "mock";
    std::size_t dimension = 16;
    std::string salt = "promptaid";
    RemoteEndpoint endpoint;
    /// JSON-lines cache sidecar; empty keeps the cache in memory only.
    std::filesystem::path cache_path;
};

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::vector<std::filesystem::path> datasets;
    std::vector<ModelSpec> models;
    std::filesystem::path corpus;
    EmbeddingConfig embedding;
    std::uint64_t default_seed = 7;
    std::filesystem::path session_file;
    int samples_per_type = 5;
    std::size_t paraphrase_candidates = 10;
    std::size_t parallelism = 1;
    /// base directory for relative paths (mock fixtures included)
    std::filesystem::path base_dir;
};

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return {};
    std::filesystem::path path(p);
    return path.is_relative() ? base / path : path;
}

inline std::pair<std::string, int> parse_listen(const std::string& s) {
    const auto colon = s.rfind(':');
    if (colon == std::string::npos) fail(ErrorCode::ConfigError, "listen address must be host:port", s);
    try {
        std::size_t used = 0;
        const auto port_text = s.substr(colon + 1);
        const int port = std::stoi(port_text, &used);
        if (used != port_text.size() || port < 0 || port > 65535) throw std::out_of_range("port");
        return {s.substr(0, colon), port};
    } catch (const std::exception&) {
        fail(ErrorCode::ConfigError, "bad port in listen address", s);
    }
}

} // namespace detail

inline ServiceConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
    ServiceConfig c;
    c.base_dir = base_dir;
    try {
        if (j.contains("listen")) std::tie(c.host, c.port) = detail::parse_listen(j.at("listen").get<std::string>());
        for (const auto& d : j.at("datasets")) c.datasets.push_back(detail::resolve(base_dir, d.get<std::string>()));
        for (const auto& m : j.at("models")) c.models.push_back(m.get<ModelSpec>());
        c.corpus = detail::resolve(base_dir, j.at("corpus").get<std::string>());
        if (j.contains("embedding")) {
            const auto& e = j.at("embedding");
            c.embedding.type = e.value("type", std::string("mock"));
            c.embedding.dimension = e.value("dimension", std::size_t{16});
            c.embedding.salt = e.value("salt", std::string("promptaid"));
            if (c.embedding.type == "remote") c.embedding.endpoint = e.get<RemoteEndpoint>();
            else if (c.embedding.type != "mock") fail(ErrorCode::ConfigError, "unknown embedding type", c.embedding.type);
            c.embedding.cache_path = detail::resolve(base_dir, e.value("cache", std::string{}));
        }
        c.default_seed = j.value("default_seed", std::uint64_t{7});
        c.session_file = detail::resolve(base_dir, j.value("session_file", std::string{}));
        c.samples_per_type = j.value("samples_per_type", 5);
        c.paraphrase_candidates = j.value("paraphrase_candidates", std::size_t{10});
        c.parallelism = j.value("parallelism", std::size_t{1});
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigError, std::string("bad config: ") + e.what());
    }
    if (c.datasets.empty()) fail(ErrorCode::ConfigError, "config needs at least one dataset");
    if (c.models.empty()) fail(ErrorCode::ConfigError, "config needs at least one model");
    std::set<std::string> ids;
    for (const auto& m : c.models)
        if (!ids.insert(m.id).second) fail(ErrorCode::ConfigError, "duplicate model id", m.id);
    if (c.samples_per_type < 1) fail(ErrorCode::ConfigError, "samples_per_type must be positive");
    if (c.embedding.dimension == 0) fail(ErrorCode::ConfigError, "embedding dimension must be positive");
    return c;
}

inline void apply_env_overrides(ServiceConfig& c) {
    if (const char* listen = std::getenv("PROMPTAID_LISTEN"); listen && *listen)
        std::tie(c.host, c.port) = detail::parse_listen(listen);
    if (const char* url = std::getenv("PROMPTAID_GATEWAY_URL"); url && *url)
        for (auto& m : c.models)
            if (auto* r = std::get_if<RemoteBackend>(&m.backend)) r->endpoint.base_url = url;
    if (const char* url = std::getenv("PROMPTAID_EMBED_URL"); url && *url)
        if (c.embedding.type == "remote") c.embedding.endpoint.base_url = url;
}

inline ServiceConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::MissingFile, "cannot open config", path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    json j;
    try {
        j = json::parse(buf.str());
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what(), path.string());
    }
    auto c = config_from_json(j, path.parent_path());
    apply_env_overrides(c);
    return c;
}

inline std::shared_ptr<EmbeddingBackend> make_embedding_backend(const EmbeddingConfig& e) {
    if (e.type == "remote") return std::make_shared<RemoteEmbeddingBackend>(e.endpoint, e.dimension);
    return std::make_shared<MockEmbeddingBackend>(e.dimension, e.salt);
}

inline std::vector<std::string> load_word_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::MissingFile, "cannot open word corpus", path.string());
    std::vector<std::string> words;
    std::set<std::string> seen;
    for (std::string line; std::getline(in, line);) {
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
        if (!line.empty() && seen.insert(line).second) words.push_back(line);
    }
    if (words.empty()) fail(ErrorCode::EmptyIndex, "word corpus is empty", path.string());
    return words;
}

} // namespace promptaid
