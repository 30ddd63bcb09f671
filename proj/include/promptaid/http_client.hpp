#pragma once

// Minimal JSON-over-HTTP client shared by the remote embedding and model
// backends. One retry on timeout, then the error surfaces.

#include "promptaid/core.hpp"

#include <httplib.h>

#include <atomic>
#include <string>

namespace promptaid {

struct RemoteEndpoint {
    std::string base_url;
    /// Sent verbatim as the Authorization header when non-empty.
    std::string auth;
    int timeout_ms = 30000;
};

inline void to_json(json& j, const RemoteEndpoint& e) {
    j = json{{"base_url", e.base_url}, {"auth", e.auth}, {"timeout_ms", e.timeout_ms}};
}
inline void from_json(const json& j, RemoteEndpoint& e) {
    j.at("base_url").get_to(e.base_url);
    e.auth = j.value("auth", std::string{});
    e.timeout_ms = j.value("timeout_ms", 30000);
}

inline constexpr int kTimeoutRetries = 1;

/// POST `body` to base_url + path and parse the JSON reply. `attempts` is
/// incremented once per HTTP request actually sent.
inline json post_json(const RemoteEndpoint& ep, const std::string& path, const json& body,
                      std::atomic<std::size_t>* attempts = nullptr) {
    const auto payload = body.dump();
    for (int attempt = 0;; ++attempt) {
        httplib::Client client(ep.base_url);
        const auto sec = ep.timeout_ms / 1000;
        const auto usec = (ep.timeout_ms % 1000) * 1000;
        client.set_connection_timeout(sec, usec);
        client.set_read_timeout(sec, usec);
        client.set_write_timeout(sec, usec);
        httplib::Headers headers;
        if (!ep.auth.empty()) headers.emplace("Authorization", ep.auth);
        if (attempts) attempts->fetch_add(1, std::memory_order_relaxed);
        auto res = client.Post(path, headers, payload, "application/json");
        if (!res) {
            const auto err = res.error();
            const bool timed_out = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout;
            if (timed_out && attempt < kTimeoutRetries) continue;
            fail(timed_out ? ErrorCode::Timeout : ErrorCode::GatewayUnavailable,
                 "request failed: " + httplib::to_string(err), ep.base_url + path);
        }
        if (res->status < 200 || res->status >= 300)
            fail(ErrorCode::GatewayUnavailable, "backend returned HTTP " + std::to_string(res->status),
                 ep.base_url + path);
        try {
            return json::parse(res->body);
        } catch (const json::exception&) {
            fail(ErrorCode::MalformedResponse, "backend reply is not JSON", ep.base_url + path);
        }
    }
}

} // namespace promptaid
