#pragma once

// Embedding acquisition: a deterministic mock backend, a remote HTTP backend,
// and a content-keyed cache that can persist to a JSON-lines sidecar.

#include "promptaid/core.hpp"
#include "promptaid/http_client.hpp"
#include "promptaid/random.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

namespace promptaid {

struct EmbeddingVector {
    std::vector<double> values;
    bool normalized = false;

    std::size_t dimension() const noexcept { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

inline double l2_norm(std::span<const double> v) noexcept {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline EmbeddingVector normalized(std::vector<double> v) {
    for (double x : v)
        if (!std::isfinite(x)) fail(ErrorCode::DegenerateInput, "non-finite embedding entry");
    const double n = l2_norm(v);
    if (n == 0.0) fail(ErrorCode::ZeroVector, "cannot normalize a zero vector");
    for (double& x : v) x /= n;
    return EmbeddingVector{std::move(v), true};
}

/// The mock embedding of `text`.
///
///   h   = FNV-1a-64 over the bytes of  salt + "\x1f" + text
///   rng = SplitMix64 seeded with h
///   v_i = (rng.next() >> 11) * 2^-53 * 2 - 1          for i = 0 .. d-1
///   return v / |v|_2
inline std::vector<double> mock_embedding(std::string_view salt, std::string_view text, std::size_t d) {
    std::string key;
    key.reserve(salt.size() + 1 + text.size());
    key.append(salt).push_back('\x1f');
    key.append(text);
    SplitMix64 rng(fnv1a64(key));
    std::vector<double> v(d);
    for (auto& x : v) x = rng.uniform_signed();
    const double n = l2_norm(v);
    for (auto& x : v) x /= n;
    return v;
}

class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    /// Stable identity; part of the cache key.
    virtual std::string id() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts) = 0;
    /// Backends whose output is already unit-length skip re-normalization.
    virtual bool returns_normalized() const { return false; }

    std::size_t call_count() const noexcept { return calls_.load(); }

protected:
    std::atomic<std::size_t> calls_{0};
};

class MockEmbeddingBackend final : public EmbeddingBackend {
public:
    explicit MockEmbeddingBackend(std::size_t dimension = 16, std::string salt = "promptaid")
        : dimension_(dimension), salt_(std::move(salt)) {
        if (dimension_ == 0) fail(ErrorCode::ConfigError, "embedding dimension must be positive");
    }
    std::string id() const override { return "mock:" + salt_ + ":" + std::to_string(dimension_); }
    std::size_t dimension() const override { return dimension_; }
    bool returns_normalized() const override { return true; }
    std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts) override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        std::vector<std::vector<double>> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(mock_embedding(salt_, t, dimension_));
        return out;
    }

private:
    std::size_t dimension_;
    std::string salt_;
};

/// POST /embed {"texts": [...]} -> {"vectors": [[...], ...]}
class RemoteEmbeddingBackend final : public EmbeddingBackend {
public:
    RemoteEmbeddingBackend(RemoteEndpoint endpoint, std::size_t dimension)
        : endpoint_(std::move(endpoint)), dimension_(dimension) {}

    std::string id() const override { return "remote:" + endpoint_.base_url + ":" + std::to_string(dimension_); }
    std::size_t dimension() const override { return dimension_; }

    std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts) override {
        const auto reply = post_json(endpoint_, "/embed", json{{"texts", texts}}, &calls_);
        std::vector<std::vector<double>> out;
        try {
            out = reply.at("vectors").get<std::vector<std::vector<double>>>();
        } catch (const json::exception& e) {
            fail(ErrorCode::MalformedResponse, "bad /embed reply: " + std::string(e.what()), endpoint_.base_url);
        }
        if (out.size() != texts.size())
            fail(ErrorCode::MalformedResponse, "/embed returned the wrong number of vectors", endpoint_.base_url);
        for (const auto& v : out)
            if (v.size() != dimension_)
                fail(ErrorCode::DimensionMismatch,
                     "expected dimension " + std::to_string(dimension_) + ", got " + std::to_string(v.size()),
                     endpoint_.base_url);
        return out;
    }

private:
    RemoteEndpoint endpoint_;
    std::size_t dimension_;
};

/// Normalized vectors keyed by (backend id, embedded string). Concurrent
/// lookups share a lock; inserts (and sidecar appends) are exclusive.
class EmbeddingCache {
public:
    EmbeddingCache() = default;

    /// Loads existing sidecar lines and appends new entries to the file.
    explicit EmbeddingCache(std::filesystem::path sidecar) : sidecar_(std::move(sidecar)) {
        std::ifstream in(sidecar_);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            try {
                const auto j = json::parse(line);
                map_[cache_key(j.at("backend").get<std::string>(), j.at("text").get<std::string>())] =
                    j.at("vector").get<std::vector<double>>();
            } catch (const json::exception&) {
                // a torn final line from an interrupted run; skip it
            }
        }
    }

    static std::string cache_key(std::string_view backend, std::string_view text) {
        std::string k(backend);
        k.push_back('\x1f');
        k.append(text);
        return k;
    }

    std::optional<std::vector<double>> find(std::string_view backend, std::string_view text) const {
        std::shared_lock lock(mutex_);
        auto it = map_.find(cache_key(backend, text));
        if (it == map_.end()) return std::nullopt;
        return it->second;
    }

    void insert(std::string_view backend, std::string_view text, const std::vector<double>& v) {
        std::unique_lock lock(mutex_);
        auto [it, inserted] = map_.emplace(cache_key(backend, text), v);
        if (!inserted || sidecar_.empty()) return;
        std::ofstream out(sidecar_, std::ios::app);
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx",
                      static_cast<unsigned long long>(fnv1a64(cache_key(backend, text))));
        out << json{{"key", hex}, {"backend", backend}, {"text", text}, {"vector", v}}.dump() << '\n';
    }

    std::size_t size() const {
        std::shared_lock lock(mutex_);
        return map_.size();
    }

private:
    std::filesystem::path sidecar_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, std::vector<double>> map_;
};

/// Front door for embeddings: applies the context tag, consults the cache,
/// and batches the misses into one backend call.
class Embedder {
public:
    Embedder(std::shared_ptr<EmbeddingBackend> backend, std::shared_ptr<EmbeddingCache> cache = nullptr)
        : backend_(std::move(backend)), cache_(cache ? std::move(cache) : std::make_shared<EmbeddingCache>()) {}

    std::size_t dimension() const { return backend_->dimension(); }
    const EmbeddingBackend& backend() const { return *backend_; }
    std::size_t backend_calls() const { return backend_->call_count(); }

    static std::string embedded_string(std::string_view text, const std::optional<std::string>& context_tag) {
        std::string s(text);
        if (context_tag) s.append(" ").append(*context_tag);
        return s;
    }

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts,
                                       const std::optional<std::string>& context_tag = std::nullopt) const {
        if (texts.empty()) fail(ErrorCode::InvalidArgument, "embed needs at least one text");
        const auto bid = backend_->id();
        std::vector<EmbeddingVector> out(texts.size());
        std::vector<std::string> missing;
        std::vector<std::size_t> missing_at;
        for (std::size_t i = 0; i < texts.size(); ++i) {
            auto s = embedded_string(texts[i], context_tag);
            if (auto hit = cache_->find(bid, s)) {
                out[i] = EmbeddingVector{std::move(*hit), true};
            } else {
                missing.push_back(std::move(s));
                missing_at.push_back(i);
            }
        }
        if (!missing.empty()) {
            // de-duplicate within the batch so each string is fetched once
            std::vector<std::string> unique;
            std::unordered_map<std::string, std::size_t> slot;
            for (const auto& s : missing)
                if (slot.emplace(s, unique.size()).second) unique.push_back(s);
            auto raw = backend_->embed_batch(unique);
            std::vector<EmbeddingVector> fresh;
            fresh.reserve(raw.size());
            for (std::size_t u = 0; u < raw.size(); ++u) {
                if (raw[u].size() != backend_->dimension())
                    fail(ErrorCode::DimensionMismatch, "backend returned a vector of the wrong dimension");
                try {
                    if (backend_->returns_normalized()) {
                        for (double x : raw[u])
                            if (!std::isfinite(x)) fail(ErrorCode::DegenerateInput, "non-finite embedding entry");
                        fresh.push_back(EmbeddingVector{std::move(raw[u]), true});
                    } else {
                        fresh.push_back(normalized(std::move(raw[u])));
                    }
                } catch (const Error& e) {
                    fail(ErrorCode::MalformedResponse, "backend returned an unusable vector: " + e.message(), unique[u]);
                }
                cache_->insert(bid, unique[u], fresh.back().values);
            }
            for (std::size_t m = 0; m < missing.size(); ++m) out[missing_at[m]] = fresh[slot.at(missing[m])];
        }
        return out;
    }

    EmbeddingVector embed_one(const std::string& text, const std::optional<std::string>& context_tag = std::nullopt) const {
        return embed(std::vector<std::string>{text}, context_tag).front();
    }

private:
    std::shared_ptr<EmbeddingBackend> backend_;
    std::shared_ptr<EmbeddingCache> cache_;
};

} // namespace promptaid
