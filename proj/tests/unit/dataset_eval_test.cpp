#include "support/test_support.hpp"

#include <chrono>
#include <set>

using namespace promptaid;
using namespace testsupport;

namespace {

LabeledDataset ag_news() { return load_dataset(source_dir() / "data" / "ag_news" / "manifest.json"); }

std::shared_ptr<ModelClient> fixture_model(const std::string& name) {
    return std::make_shared<MockModelClient>(load_mock_fixture(source_dir() / "data" / "mock" / (name + ".json")));
}

/// Re-derivation of the stratified sampling rule: per-class Fisher-Yates
/// from SplitMix64(seed).fork(class index), then round-robin.
std::vector<std::string> stratified_oracle(const std::vector<DataPoint>& source, const std::vector<std::string>& classes,
                                           std::size_t n, std::uint64_t seed) {
    std::vector<std::vector<std::string>> buckets(classes.size());
    for (const auto& p : source)
        for (std::size_t c = 0; c < classes.size(); ++c)
            if (classes[c] == p.label) buckets[c].push_back(p.id);
    for (std::size_t c = 0; c < classes.size(); ++c) {
        auto rng = SplitMix64(seed).fork(c);
        for (std::size_t i = buckets[c].size(); i > 1; --i) std::swap(buckets[c][i - 1], buckets[c][rng.below(i)]);
    }
    std::vector<std::string> out;
    for (std::size_t round = 0; out.size() < n; ++round)
        for (const auto& b : buckets)
            if (round < b.size() && out.size() < n) out.push_back(b[round]);
    return out;
}

class FakeModelServer {
public:
    FakeModelServer() {
        server_.Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
            ++score_hits;
            last_auth = req.get_header_value("Authorization");
            const auto body = json::parse(req.body);
            json scores = json::object();
            for (const auto& l : body.at("labels")) scores[l.get<std::string>()] = l == "b" ? 2.0 : 1.0;
            res.set_content(json{{"scores", scores}}.dump(), "application/json");
        });
        server_.Post("/generate", [this](const httplib::Request& req, httplib::Response& res) {
            ++generate_hits;
            const auto prompt = json::parse(req.body).at("prompt").get<std::string>();
            if (prompt.find("slow") != std::string::npos) std::this_thread::sleep_for(std::chrono::milliseconds(700));
            if (prompt.find("broken") != std::string::npos) {
                res.status = 500;
                return;
            }
            std::string text = "I cannot say";
            if (prompt.find("Paraphrase") != std::string::npos) text = "1. First way\n2) Second way\n- Third way\n\n";
            else if (prompt.find("stocks") != std::string::npos) text = "Probably ECONOMY, maybe sports";
            res.set_content(json{{"text", text}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeModelServer() {
        server_.stop();
        thread_.join();
    }
    RemoteEndpoint endpoint(int timeout_ms = 5000) const {
        return RemoteEndpoint{"http://127.0.0.1:" + std::to_string(port_), "Bearer t", timeout_ms};
    }

    std::atomic<int> score_hits{0};
    std::atomic<int> generate_hits{0};
    std::string last_auth;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

} // namespace

TEST(Dataset, LoadsShippedManifests) {
    const auto ds = ag_news();
    EXPECT_EQ(ds.train.size(), 40u);
    EXPECT_EQ(ds.test.size(), 20u);
    EXPECT_EQ(ds.seed_templates.size(), 10u);
    EXPECT_EQ(ds.task_type, "topic classification");
    const auto amazon = load_dataset(source_dir() / "data" / "amazon_polarity" / "manifest.json");
    EXPECT_EQ(amazon.test.size(), 20u);
    EXPECT_EQ(amazon.classes, (std::vector<std::string>{"negative", "positive"}));
}

TEST(Dataset, StratifiedSampleMatchesRule) {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const std::vector<std::string> classes{"x", "y", "z"};
        std::vector<DataPoint> source;
        for (std::size_t i = uniform(rng, 3, 60); i > 0; --i)
            source.push_back({"s" + std::to_string(source.size()), "t", classes[rng() % 3]});
        const auto n = uniform(rng, 0, source.size());
        const auto seed = rng();
        const auto got = stratified_sample(source, classes, n, seed);
        std::vector<std::string> ids;
        for (const auto& p : got) ids.push_back(p.id);
        EXPECT_EQ(ids, stratified_oracle(source, classes, n, seed));
        EXPECT_EQ(std::set<std::string>(ids.begin(), ids.end()).size(), n);
        EXPECT_EQ(stratified_sample(source, classes, n, seed), got);
    }
    EXPECT_THROW(stratified_sample({{"a", "t", "x"}}, {"x"}, 2, 1), Error);
}

TEST(Dataset, ManifestErrors) {
    TempDir dir;
    auto write = [&](const std::string& name, const json& j) {
        std::ofstream(dir / name) << j.dump();
        return dir / name;
    };
    const json base{{"name", "d"},
                    {"classes", {"a", "b"}},
                    {"verbalizers", {{"a", {"yes"}}, {"b", {"no"}}}},
                    {"train", {{{"id", "1"}, {"text", "t"}, {"label", "a"}}, {{"id", "2"}, {"text", "u"}, {"label", "b"}}}},
                    {"test", {{{"id", "3"}, {"text", "v"}, {"label", "a"}}}}};
    EXPECT_NO_THROW(load_dataset(write("ok.json", base)));

    auto expect_code = [&](json m, ErrorCode code, const std::string& what) {
        try {
            load_dataset(write("m.json", m));
            ADD_FAILURE() << what;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), code) << what << ": " << e.what();
        }
    };
    auto m = base;
    m["test"][0]["label"] = "c";
    expect_code(m, ErrorCode::SchemaError, "unknown label");
    m = base;
    m["train"] = json::array({base["train"][0]});
    expect_code(m, ErrorCode::EmptyClass, "class without train points");
    m = base;
    m["verbalizers"]["b"] = {"yes"};
    expect_code(m, ErrorCode::SchemaError, "shared verbalizer");
    m = base;
    m["train"] = "missing.jsonl";
    expect_code(m, ErrorCode::MissingFile, "missing split file");
    m = base;
    m["seed_templates"] = {"no placeholder"};
    expect_code(m, ErrorCode::InvalidTemplate, "bad seed");
    EXPECT_THROW(load_dataset(dir / "absent.json"), Error);
    EXPECT_EQ(dataset_from_manifest(dataset_to_json(ag_news()), dir.path()).test, ag_news().test);
}

TEST(Evaluator, ScoringStringLayout) {
    const auto ds = ag_news();
    auto t = make_template("T", "Topic? [text]");
    EXPECT_EQ(build_scoring_string(t, ds.test[0], ds), "Topic? " + ds.test[0].text);
    t.kshot = KShotConfig{2, {{ds.test[0].id, {"tr01", "tr02"}}}};
    EXPECT_EQ(build_scoring_string(t, ds.test[0], ds),
              "Topic? " + ds.train[0].text + " world\nTopic? " + ds.train[1].text + " sports\nTopic? " + ds.test[0].text);
    try {
        build_scoring_string(t, ds.test[1], ds);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingKShot);
    }
}

TEST(Evaluator, SeedAccuracyAndConfusionShape) {
    const auto ds = ag_news();
    auto model = fixture_model("roberta");
    const auto r = evaluate_template(make_template("P1", ds.seed_templates[0].text, Origin::Seed), ds, *model);
    EXPECT_EQ(r.accuracy, 0.60);
    ASSERT_EQ(r.confusion.counts.size(), 4u);
    for (std::size_t c = 0; c < 4; ++c) {
        EXPECT_EQ(r.confusion.counts[c].size(), 5u);
        EXPECT_EQ(r.confusion.row_sum(c), 5);
    }
    EXPECT_EQ(r.per_point.size(), 20u);
    const auto parallel = evaluate_template(make_template("P1", ds.seed_templates[0].text, Origin::Seed), ds, *model,
                                            EvalOptions{4});
    EXPECT_EQ(parallel, r);
}

TEST(MockGateway, RuleMatching) {
    MockFixture f;
    f.default_scores = {{"a", 1.0}, {"b", 0.0}};
    MockRule start{"Hello", Anchor::Start, {}, std::nullopt, {{"a", 0.0}, {"b", 1.0}}};
    MockRule end{"bye", Anchor::End, {"middle"}, 2, {{"a", 0.0}, {"b", 5.0}}};
    f.rules = {start, end};
    MockModelClient m(f);
    const Verbalizers v{{"a", {"alpha"}}, {"b", {"beta"}}};
    EXPECT_EQ(m.score_labels("Hello there", v).predicted, "b");
    EXPECT_EQ(m.score_labels("Say Hello", v).predicted, "a");
    EXPECT_EQ(m.score_labels("middle\nbye", v).scores.at("b"), 5.0);
    EXPECT_EQ(m.score_labels("middle bye", v).predicted, "a");  // wrong line count
    EXPECT_EQ(m.score_labels("x\nbye", v).predicted, "a");      // missing "also"
    EXPECT_EQ(m.generate("anything", &v), "alpha");
    EXPECT_THROW(m.paraphrase_candidates("unknown seed", 3), Error);
    f.default_scores = {{"a", 1.0}, {"b", 1.0}};
    EXPECT_EQ(MockModelClient(f).score_labels("zzz", v).predicted, "a");  // lexicographic tie-break
}

TEST(MockGateway, OutOfDistributionSnippets) {
    const auto ds = ag_news();
    const auto ood = json::parse(read_text(source_dir() / "data" / "ood_snippets.json")).get<std::vector<std::string>>();
    const auto t = make_template("P6", ds.seed_templates[5].text, Origin::Seed);
    auto gpt2 = fixture_model("gpt2");
    const auto preds = test_custom(t, ood, ds, *gpt2, ModelKind::Generative);
    ASSERT_EQ(preds.size(), 8u);
    EXPECT_EQ(preds[0].predicted, "business");
    EXPECT_EQ(preds[0].output, "Business");
    EXPECT_EQ(preds[2].output, "World");
    auto roberta = fixture_model("roberta");
    EXPECT_FALSE(test_custom(t, ood, ds, *roberta).front().output.has_value());
    EXPECT_THROW(test_custom(t, {}, ds, *roberta), Error);
}

TEST(Verbalizer, EarliestMatchWins) {
    const Verbalizers v{{"business", {"business", "economy"}}, {"sports", {"sports"}}, {"sci/tech", {"tech", "technology"}}};
    EXPECT_EQ(match_verbalizer("Sports and business", v), "sports");
    EXPECT_EQ(match_verbalizer("the ECONOMY", v), "business");
    EXPECT_EQ(match_verbalizer("technology news", v), "sci/tech");
    EXPECT_EQ(match_verbalizer("nothing here", v), std::nullopt);
}

TEST(Verbalizer, CandidateLineSplitting) {
    EXPECT_EQ(split_candidate_lines("1. One\n 2) Two \n- Three\n* Four\n\nFive"),
              (std::vector<std::string>{"One", "Two", "Three", "Four", "Five"}));
}

TEST(RemoteGateway, MaskedScoring) {
    FakeModelServer server;
    RemoteModelClient m(ModelKind::Masked, RemoteBackend{server.endpoint()}, 16);
    const auto r = m.score_labels("x", {{"a", {"aa"}}, {"b", {"bb"}}});
    EXPECT_EQ(r.predicted, "b");
    EXPECT_EQ(r.scores.at("a"), 1.0);
    EXPECT_EQ(server.last_auth, "Bearer t");
}

TEST(RemoteGateway, GenerativeMatchingAndUnparsed) {
    FakeModelServer server;
    RemoteModelClient m(ModelKind::Generative, RemoteBackend{server.endpoint()}, 16);
    const Verbalizers v{{"business", {"economy"}}, {"sports", {"sports"}}};
    const auto hit = m.score_labels("stocks fell", v);
    EXPECT_EQ(hit.predicted, "business");
    EXPECT_EQ(hit.scores.at("business"), 1.0);
    const auto miss = m.score_labels("weather", v);
    EXPECT_EQ(miss.predicted, kUnparsed);
    EXPECT_EQ(miss.scores.at("business"), miss.scores.at("sports"));
    EXPECT_EQ(m.paraphrase_candidates("seed", 2), (std::vector<std::string>{"First way", "Second way"}));
}

TEST(RemoteGateway, TimeoutRetriesOnceThenFails) {
    FakeModelServer server;
    RemoteModelClient m(ModelKind::Generative, RemoteBackend{server.endpoint(200)}, 16);
    try {
        m.generate("slow", nullptr);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Timeout);
        EXPECT_EQ(e.error_class(), ErrorClass::Gateway);
    }
    EXPECT_EQ(m.call_count(), 2u);
    try {
        m.generate("broken", nullptr);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::GatewayUnavailable);
    }
    RemoteModelClient closed(ModelKind::Masked, RemoteBackend{RemoteEndpoint{"http://127.0.0.1:1", "", 500}}, 16);
    EXPECT_THROW(closed.score_labels("x", {{"a", {"a"}}}), Error);
}

TEST(Metrics, PrecisionRecallZeroDenominators) {
    const auto r = compute_metrics({"a", "b"}, {{"1", "a", {{}, "a", true}}, {"2", "a", {{}, std::string(kUnparsed), false}}});
    EXPECT_EQ(r.precision.at("b"), 0.0);
    EXPECT_EQ(r.recall.at("b"), 0.0);
    EXPECT_EQ(r.recall.at("a"), 0.5);
    EXPECT_EQ(r.confusion.counts[0][2], 1);
    EXPECT_EQ(compute_metrics({"a"}, {}).accuracy, 0.0);
    EXPECT_THROW(compute_metrics({"a"}, {{"1", "z", {{}, "a", false}}}), Error);
}
