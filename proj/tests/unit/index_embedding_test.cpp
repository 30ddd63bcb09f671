#include "support/oracles.hpp"
#include "support/test_support.hpp"

#include <cstring>

using namespace promptaid;
using namespace testsupport;

namespace {

// The mock embedding re-derived from its published definition.
std::vector<double> rederived_mock(const std::string& salt, const std::string& text, std::size_t d) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : salt + '\x1f' + text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::uint64_t state = h;
    std::vector<double> v(d);
    double norm = 0.0;
    for (auto& x : v) {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z ^= z >> 31;
        x = static_cast<double>(z >> 11) / 9007199254740992.0 * 2.0 - 1.0;
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
}

class CountingEmbedServer {
public:
    explicit CountingEmbedServer(std::size_t dim) {
        server_.Post("/embed", [this, dim](const httplib::Request& req, httplib::Response& res) {
            ++hits;
            const auto body = json::parse(req.body);
            json vectors = json::array();
            for (const auto& t : body.at("texts")) {
                std::vector<double> v(dim, 0.0);
                const auto s = t.get<std::string>();
                v[s.size() % dim] = 3.0;  // deliberately not unit length
                v[(s.size() + 1) % dim] = 4.0;
                vectors.push_back(v);
            }
            res.set_content(json{{"vectors", vectors}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~CountingEmbedServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    std::atomic<int> hits{0};

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

} // namespace

TEST(MockEmbedding, MatchesPublishedDefinitionBitwise) {
    for (const std::string text : {"", "label topic classification", "The striker scored twice", "ünïcödé"})
        for (std::size_t d : {1u, 16u, 33u}) EXPECT_EQ(mock_embedding("promptaid", text, d), rederived_mock("promptaid", text, d));
    EXPECT_NE(mock_embedding("a", "x", 16), mock_embedding("b", "x", 16));
    EXPECT_NEAR(l2_norm(mock_embedding("promptaid", "x", 16)), 1.0, 1e-15);
}

TEST(Embedder, CachesAndDeduplicates) {
    auto backend = std::make_shared<MockEmbeddingBackend>();
    Embedder e(backend);
    const auto v = e.embed({"a", "b", "a"});
    EXPECT_EQ(backend->call_count(), 1u);
    EXPECT_EQ(v[0], v[2]);
    e.embed({"a", "b"});
    EXPECT_EQ(backend->call_count(), 1u);
    EXPECT_NE(e.embed_one("a", std::string("topic")), v[0]);
    EXPECT_EQ(e.embed_one("a", std::string("topic")), e.embed_one("a topic"));
    EXPECT_THROW(e.embed({}), Error);
}

TEST(Embedder, SidecarSurvivesRestart) {
    TempDir dir;
    const auto sidecar = dir / "cache.jsonl";
    {
        Embedder e(std::make_shared<MockEmbeddingBackend>(), std::make_shared<EmbeddingCache>(sidecar));
        e.embed({"one", "two"});
    }
    auto backend = std::make_shared<MockEmbeddingBackend>();
    Embedder again(backend, std::make_shared<EmbeddingCache>(sidecar));
    const auto v = again.embed({"one", "two"});
    EXPECT_EQ(backend->call_count(), 0u);
    EXPECT_EQ(v[1].values, mock_embedding("promptaid", "two", 16));
    // a torn trailing line is skipped
    std::ofstream(sidecar, std::ios::app) << "{\"backend\": \"mock";
    EXPECT_NO_THROW(EmbeddingCache{sidecar});
}

TEST(RemoteEmbedding, NormalizesAndCaches) {
    CountingEmbedServer server(4);
    Embedder e(std::make_shared<RemoteEmbeddingBackend>(RemoteEndpoint{server.url(), "", 5000}, 4));
    const auto v = e.embed({"ab", "abc", "ab"});
    EXPECT_EQ(server.hits.load(), 1);
    EXPECT_NEAR(l2_norm(v[0].values), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(v[0].values[2], 0.6);
    e.embed({"abc"});
    EXPECT_EQ(server.hits.load(), 1);

    Embedder wrong_dim(std::make_shared<RemoteEmbeddingBackend>(RemoteEndpoint{server.url(), "", 5000}, 8));
    try {
        wrong_dim.embed({"x"});
        FAIL();
    } catch (const Error& err) {
        EXPECT_EQ(err.code(), ErrorCode::DimensionMismatch);
    }
}

TEST(VectorIndex, RejectsBadInput) {
    EXPECT_THROW(VectorIndex::build({}), Error);
    EXPECT_THROW(VectorIndex::build({{"a", EmbeddingVector{{1, 0}}}, {"b", EmbeddingVector{{1, 0, 0}}}}), Error);
    const auto idx = VectorIndex::build({{"a", EmbeddingVector{{1, 0}}}, {"z", EmbeddingVector{{0, 0}}}});
    EXPECT_THROW(idx.query_knn(EmbeddingVector{{1, 0, 0}}, 1), Error);
    try {
        idx.query_knn(EmbeddingVector{{1, 0}}, 1, Metric::Cosine);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ZeroVector);
    }
    EXPECT_TRUE(idx.query_knn(EmbeddingVector{{1, 0}}, 0).empty());
    EXPECT_EQ(idx.query_knn(EmbeddingVector{{1, 0}}, 10).size(), 2u);
}

TEST(VectorIndex, TiesBreakByKey) {
    std::vector<IndexEntry> entries;
    for (const auto* k : {"d", "b", "c", "a"}) entries.push_back({k, EmbeddingVector{{1.0, 0.0}}});
    const auto idx = VectorIndex::build(entries);
    const auto got = idx.query_knn(EmbeddingVector{{0.0, 1.0}}, 3);
    ASSERT_EQ(got.size(), 3u);
    EXPECT_EQ(got[0].key, "a");
    EXPECT_EQ(got[1].key, "b");
    EXPECT_EQ(got[2].key, "c");
}

TEST(VectorIndex, BalancedDepth) {
    Rng rng(9);
    for (std::size_t n : {1u, 2u, 7u, 100u, 1000u}) {
        std::vector<IndexEntry> entries;
        for (std::size_t i = 0; i < n; ++i) entries.push_back({std::to_string(i), EmbeddingVector{mock_embedding("d", std::to_string(i), 8)}});
        const auto idx = VectorIndex::build(entries);
        EXPECT_LE(idx.depth(), static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(n) + 1))));
    }
}

TEST(VectorIndex, CosineMatchesScanOnMockEmbeddings) {
    std::vector<IndexEntry> entries;
    std::vector<std::pair<std::string, std::vector<double>>> plain;
    for (int i = 0; i < 500; ++i) {
        const auto v = mock_embedding("s", "w" + std::to_string(i), 16);
        entries.push_back({"w" + std::to_string(i), EmbeddingVector{v, true}});
        plain.emplace_back("w" + std::to_string(i), v);
    }
    const auto idx = VectorIndex::build(entries);
    for (int q = 0; q < 50; ++q) {
        const auto v = mock_embedding("q", std::to_string(q), 16);
        const auto got = idx.query_knn(EmbeddingVector{v, true}, 20, Metric::Cosine);
        const auto want = oracle::linear_knn(plain, v, 20, true);
        for (std::size_t i = 0; i < want.size(); ++i) {
            EXPECT_EQ(got[i].key, want[i].key);
            EXPECT_EQ(got[i].distance, want[i].distance);
        }
    }
}
