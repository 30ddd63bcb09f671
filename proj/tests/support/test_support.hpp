#pragma once

// Shared test plumbing: temp dirs, a live API server on an ephemeral port,
// random data generators, and golden-file comparison.

#include <promptaid/promptaid.hpp>

#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>
#include <unistd.h>

namespace testsupport {

namespace fs = std::filesystem;
using promptaid::json;

inline fs::path source_dir() { return fs::path(PROMPTAID_SOURCE_DIR); }
inline fs::path config_path() { return source_dir() / "config" / "workbench.json"; }
inline fs::path golden_dir() { return source_dir() / "tests" / "golden"; }

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("promptaid-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

/// The shipped config with the session file moved into `dir`.
inline promptaid::ServiceConfig workbench_config(const fs::path& dir) {
    auto cfg = promptaid::load_config(config_path());
    cfg.session_file = dir / "session.json";
    return cfg;
}

/// A Workbench behind a real HTTP server on 127.0.0.1:<ephemeral>.
class LiveServer {
public:
    explicit LiveServer(promptaid::ServiceConfig cfg) : wb_(std::move(cfg)) {
        promptaid::register_routes(server_, wb_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        if (port_ <= 0) throw std::runtime_error("cannot bind test server");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LiveServer() {
        server_.stop();
        thread_.join();
    }

    int port() const { return port_; }
    promptaid::Workbench& workbench() { return wb_; }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(120, 0);
        return c;
    }

    struct Reply {
        int status = 0;
        json body;
        std::string raw;
    };

    Reply get(const std::string& path) const {
        auto c = client();
        return unwrap(c.Get(path), path);
    }
    Reply post(const std::string& path, const json& body = json::object()) const {
        auto c = client();
        return unwrap(c.Post(path, body.dump(), "application/json"), path);
    }
    Reply del(const std::string& path) const {
        auto c = client();
        return unwrap(c.Delete(path), path);
    }

private:
    static Reply unwrap(const httplib::Result& r, const std::string& path) {
        if (!r) throw std::runtime_error("request failed: " + path + ": " + httplib::to_string(r.error()));
        return Reply{r->status, json::parse(r->body), r->body};
    }

    promptaid::Workbench wb_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

using Rng = std::mt19937_64;

inline std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
}

inline std::string random_word(Rng& rng, std::size_t min_len = 3, std::size_t max_len = 9) {
    std::string w;
    const auto n = uniform(rng, min_len, max_len);
    for (std::size_t i = 0; i < n; ++i) w.push_back(static_cast<char>('a' + rng() % 26));
    return w;
}

inline std::string random_sentence(Rng& rng, std::size_t words) {
    std::string s;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) s.push_back(' ');
        s += random_word(rng);
    }
    return s;
}

inline bool update_golden() {
    const char* v = std::getenv("UPDATE_GOLDEN");
    return v && *v && std::string(v) != "0";
}

inline std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Compares `actual` with the golden file, or rewrites it when
/// UPDATE_GOLDEN is set.
inline ::testing::AssertionResult matches_golden(const fs::path& golden, const std::string& actual) {
    if (update_golden()) {
        fs::create_directories(golden.parent_path());
        std::ofstream(golden, std::ios::binary | std::ios::trunc) << actual;
        return ::testing::AssertionSuccess();
    }
    if (!fs::exists(golden)) return ::testing::AssertionFailure() << "missing golden file " << golden;
    const auto expected = read_text(golden);
    if (expected == actual) return ::testing::AssertionSuccess();
    return ::testing::AssertionFailure() << golden.filename() << " differs\n--- expected\n"
                                         << expected << "\n--- actual\n"
                                         << actual;
}

} // namespace testsupport
