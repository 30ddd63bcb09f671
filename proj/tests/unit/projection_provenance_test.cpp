#include "support/test_support.hpp"

#include <set>

using namespace promptaid;
using namespace testsupport;

namespace {

EvaluationResult with_accuracy(double a) {
    EvaluationResult r;
    r.accuracy = a;
    return r;
}

PromptTemplate evaluated(std::string id, std::string text, double acc) {
    auto t = make_template(std::move(id), std::move(text), Origin::Seed);
    t.cached_eval = with_accuracy(acc);
    return t;
}

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::Internal;
}

} // namespace

TEST(Projection, RejectsBadInput) {
    EXPECT_EQ(code_of([] { project(std::vector<std::vector<double>>{}, 2, 1); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { project({{1.0, 2.0}}, 3, 1); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { project({{1.0}, {1.0, 2.0}}, 2, 1); }), ErrorCode::DimensionMismatch);
    EXPECT_EQ(code_of([] { project({{1.0}, {std::nan("")}}, 2, 1); }), ErrorCode::DegenerateInput);
}

TEST(Projection, IndependentOfInputOrder) {
    Rng rng(3);
    std::vector<std::vector<double>> v;
    for (int i = 0; i < 12; ++i) v.push_back({uniform(rng, 0, 100) / 10.0, uniform(rng, 0, 100) / 10.0, 1.0});
    const auto a = project(v, 2, 11);
    auto reversed = v;
    std::reverse(reversed.begin(), reversed.end());
    const auto b = project(reversed, 2, 11);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(a.coords[i], b.coords[v.size() - 1 - i]);
    EXPECT_NE(project(v, 2, 12).coords, a.coords);
}

TEST(Canvas, PositionsInUnitRange) {
    Embedder e{std::make_shared<MockEmbeddingBackend>()};
    std::vector<PromptTemplate> ts{evaluated("A", "Which topic? [text]", 0.3), evaluated("B", "[text] Sports or not?", 0.9),
                                   evaluated("C", "Category of this story: [text]", 0.6)};
    const auto pts = canvas_positions(ts, e, 7);
    ASSERT_EQ(pts.size(), 3u);
    double lo = 1, hi = 0;
    for (const auto& p : pts) {
        EXPECT_GE(p.x, 0.0);
        EXPECT_LE(p.x, 1.0);
        lo = std::min(lo, p.x);
        hi = std::max(hi, p.x);
    }
    EXPECT_EQ(lo, 0.0);
    EXPECT_EQ(hi, 1.0);
    EXPECT_EQ(pts[1].y, 0.9);
    EXPECT_TRUE(pts[1].text_prefixed);
    EXPECT_EQ(canvas_positions(ts, e, 7), pts);

    const auto single = canvas_positions({ts[0]}, e, 7);
    EXPECT_EQ(single.at(0).x, 0.5);
    EXPECT_TRUE(canvas_positions({}, e, 7).empty());
    ts[2].cached_eval.reset();
    EXPECT_EQ(code_of([&] { canvas_positions(ts, e, 7); }), ErrorCode::NotEvaluated);
}

TEST(Canvas, RecommendationLayoutPutsAnchorFirst) {
    Embedder e{std::make_shared<MockEmbeddingBackend>()};
    const auto l = recommendation_layout("label", {"topic", "tag", "class"}, e, 5, std::string("topic classification"));
    EXPECT_EQ(l.ids, (std::vector<std::string>{"label", "topic", "tag", "class"}));
    EXPECT_EQ(l.coords.size(), 4u);
    for (const auto& c : l.coords) EXPECT_EQ(c.size(), 2u);
    EXPECT_THROW(recommendation_layout("label", {}, e, 5), Error);
}

TEST(Histogram, BinEdges) {
    const auto h = accuracy_histogram({0.0, 0.05, 0.7, 0.7, 0.99, 1.0});
    EXPECT_EQ(h, (std::vector<std::size_t>{2, 0, 0, 0, 0, 0, 0, 2, 0, 2}));
    EXPECT_EQ(accuracy_histogram({0.3}, 3), (std::vector<std::size_t>{1, 0, 0}));
}

TEST(Graph, RemoveCascadesToDescendants) {
    SessionState s;
    s.select("d", "m");
    s.graph.record_version(std::nullopt, make_template("P1", "a [text]", Origin::Seed));
    s.graph.record_version(std::string("P1"), make_template("P2", "b [text]", Origin::Keyword, std::string("P1")));
    s.graph.record_version(std::string("P2"), make_template("P3", "c [text]", Origin::Paraphrase, std::string("P2")));
    s.graph.record_version(std::string("P1"), make_template("P4", "d [text]", Origin::Paraphrase, std::string("P1")));
    s.graph.record_version(std::nullopt, make_template("P5", "e [text]", Origin::Manual));
    for (const auto* id : {"P1", "P2", "P3", "P5"}) s.set_evaluation(id, with_accuracy(0.5));
    s.sensitivities[s.key("P3")] = SensitivityEstimate{};

    EXPECT_EQ(s.graph.root_of("P3"), "P1");
    EXPECT_EQ(s.remove("P2"), (std::vector<std::string>{"P2", "P3"}));
    EXPECT_EQ(s.graph.creation_order(), (std::vector<std::string>{"P1", "P4", "P5"}));
    EXPECT_EQ(s.evaluations.size(), 2u);
    EXPECT_TRUE(s.sensitivities.empty());
    EXPECT_EQ(code_of([&] { s.remove("P2"); }), ErrorCode::NotFound);
    EXPECT_EQ(code_of([&] { s.graph.record_version(std::string("P9"), make_template("P6", "x [text]", Origin::Keyword, std::string("P9"))); }),
              ErrorCode::UnknownParent);
    EXPECT_EQ(code_of([&] { s.graph.record_version(std::nullopt, make_template("P1", "x [text]")); }), ErrorCode::DuplicateId);
}

TEST(Session, SelectSwapsCachedEvaluations) {
    SessionState s;
    s.select("d", "m1");
    s.graph.record_version(std::nullopt, make_template("P1", "a [text]", Origin::Seed));
    s.set_evaluation("P1", with_accuracy(0.4));
    s.select("d", "m2");
    EXPECT_FALSE(s.graph.get("P1").cached_eval.has_value());
    s.set_evaluation("P1", with_accuracy(0.8));
    s.select("d", "m1");
    EXPECT_EQ(s.graph.get("P1").cached_eval->accuracy, 0.4);
    EXPECT_EQ(s.graph.leaderboard().at(0).best_accuracy, 0.4);
}

TEST(Session, BadFilesAreRejected) {
    TempDir dir;
    auto write = [&](const std::string& body) {
        std::ofstream(dir / "s.json", std::ios::trunc) << body;
        return dir / "s.json";
    };
    EXPECT_EQ(code_of([&] { load_session(write(R"({"schema_version": 2})")); }), ErrorCode::SchemaVersionMismatch);
    EXPECT_EQ(code_of([&] { load_session(write(R"({"schema_version": 1, "dataset": "d")")); }),
              ErrorCode::SchemaVersionMismatch);
    EXPECT_EQ(code_of([&] { load_session(write(R"({"schema_version": 1, "dataset": "d"})")); }), ErrorCode::SchemaError);
    EXPECT_EQ(code_of([&] { load_session(dir / "absent.json"); }), ErrorCode::IoError);

    SessionState s;
    s.select("d", "m");
    s.graph.record_version(std::nullopt, make_template("P1", "a [text]", Origin::Seed));
    auto j = session_to_json(s);
    j["evaluations"] = json::array({{{"template", "P7"}, {"dataset", "d"}, {"model", "m"}, {"result", EvaluationResult{}}}});
    EXPECT_EQ(code_of([&] { session_from_json(j); }), ErrorCode::SchemaError);
}

TEST(Report, WritesFourFiles) {
    TempDir dir;
    SessionState s;
    s.select("d", "m");
    s.graph.record_version(std::nullopt, make_template("P1", "What label? [text]", Origin::Seed));
    s.graph.record_version(std::string("P1"),
                           make_template("P2", "What topic? [text]", Origin::Keyword, std::string("P1")));
    s.graph.record_version(std::nullopt, make_template("P3", "Pick one & go <now> [text]", Origin::Manual));
    s.set_evaluation("P1", with_accuracy(0.6));
    s.set_evaluation("P2", with_accuracy(0.7));
    Embedder e{std::make_shared<MockEmbeddingBackend>()};
    const auto files = write_report(s, e, dir / "out", 7);
    ASSERT_EQ(files.size(), 4u);
    for (const auto& f : files) EXPECT_TRUE(std::filesystem::exists(f)) << f;
    const auto board = json::parse(read_text(dir / "out" / "leaderboard.json"));
    EXPECT_EQ(board.at(0).at("root"), "P1");
    EXPECT_EQ(board.at(1).at("best_accuracy"), nullptr);
    const auto svg = read_text(dir / "out" / "canvas.svg");
    EXPECT_TRUE(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    EXPECT_EQ(svg.find("<now>"), std::string::npos);
}

TEST(Canvas, IdenticalInputsShareCoordinates) {
    Embedder e{std::make_shared<MockEmbeddingBackend>()};
    const auto l = recommendation_layout("label", {"topic", "label", "tag", "class"}, e, 5);
    EXPECT_LE(std::hypot(l.coords[0][0] - l.coords[2][0], l.coords[0][1] - l.coords[2][1]), 0.05 * layout_diameter(l));

    const auto pts = canvas_positions({evaluated("A", "Which topic is this? [text]", 0.5),
                                       evaluated("B", "[text] Which topic is this?", 0.5),
                                       evaluated("C", "Rate the sentiment of this review from one to five [text]", 0.5)},
                                      e, 7);
    EXPECT_LT(std::abs(pts[0].x - pts[1].x), std::abs(pts[0].x - pts[2].x));
}
