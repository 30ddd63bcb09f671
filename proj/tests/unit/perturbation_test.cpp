#include "support/oracles.hpp"
#include "support/test_support.hpp"

#include <set>

using namespace promptaid;
using namespace testsupport;

namespace {

struct Fixture {
    LabeledDataset ds = load_dataset(source_dir() / "data" / "ag_news" / "manifest.json");
    Embedder embedder{std::make_shared<MockEmbeddingBackend>()};
    std::vector<std::string> corpus = load_word_corpus(source_dir() / "data" / "corpus" / "words.txt");
    VectorIndex corpus_index = build_corpus_index(corpus, ds.task_type, embedder);
    MockModelClient roberta{load_mock_fixture(source_dir() / "data" / "mock" / "roberta.json")};
};

Fixture& fx() {
    static Fixture f;
    return f;
}

const std::string kTopicSeed = "What topic best describes this news article?";

} // namespace

TEST(Keywords, MatchExhaustiveScanOnShippedCorpus) {
    auto& f = fx();
    const auto t = make_template("P1", f.ds.seed_templates[0].text, Origin::Seed);
    for (const auto& target : content_words(t.text)) {
        const auto q = f.embedder.embed_one(target, f.ds.task_type).values;
        std::vector<std::pair<std::string, std::vector<double>>> plain;
        for (const auto& w : f.corpus) plain.emplace_back(w, f.embedder.embed_one(w, f.ds.task_type).values);
        const auto pool = oracle::linear_knn(plain, q, 20, true);
        std::set<std::string> lemmas{lemma_key(target)};
        std::vector<oracle::Hit> kept;
        for (const auto& h : pool)
            if (lemmas.insert(lemma_key(h.key)).second) kept.push_back(h);

        const auto got = suggest_keywords(t, target, f.ds.task_type, f.embedder, f.corpus_index);
        std::vector<oracle::Hit> want(kept.begin(), kept.begin() + static_cast<long>(std::min<std::size_t>(5, kept.size())));
        for (std::size_t i = std::max<std::size_t>(5, kept.size() < 5 ? 0 : kept.size() - 5); i < kept.size(); ++i)
            want.push_back(kept[i]);
        ASSERT_EQ(got.size(), want.size()) << target;
        for (std::size_t i = 0; i < want.size(); ++i) {
            EXPECT_EQ(got[i].word, want[i].key);
            EXPECT_EQ(got[i].distance, want[i].distance);
            EXPECT_EQ(got[i].bucket, i < 5 ? Bucket::Near : Bucket::Far);
        }
    }
}

TEST(Keywords, TargetMustBeMutable) {
    auto& f = fx();
    const auto t = make_template("P1", f.ds.seed_templates[0].text, Origin::Seed);
    for (const auto* bad : {"this", "text", "absent"}) {
        try {
            suggest_keywords(t, bad, f.ds.task_type, f.embedder, f.corpus_index);
            ADD_FAILURE() << bad;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::TargetNotMutable);
        }
    }
    EXPECT_NO_THROW(suggest_keywords(t, "Label", f.ds.task_type, f.embedder, f.corpus_index));
}

TEST(ApplyKeyword, WholeWordsAndCapitalization) {
    const auto t = make_template("A", "Label the text. Relabel? label! labels [text]");
    const auto v = apply_keyword(t, "label", "topic", "B");
    EXPECT_EQ(v.text, "Topic the text. Relabel? topic! labels [text]");
    EXPECT_EQ(v.origin, Origin::Keyword);
    EXPECT_EQ(v.parent_id, std::optional<std::string>("A"));
    EXPECT_FALSE(v.kshot.has_value());

    auto expect_code = [&](std::string_view target, std::string_view rep, ErrorCode code) {
        try {
            apply_keyword(t, target, rep, "C");
            ADD_FAILURE() << target;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), code);
        }
    };
    expect_code("lab", "x", ErrorCode::TargetNotFound);
    expect_code("label", "LABEL", ErrorCode::RedundantReplacement);
    expect_code("", "x", ErrorCode::InvalidArgument);
}

TEST(Paraphrases, KeepPlaceholderSideAndFilterCloseOnes) {
    auto& f = fx();
    const auto suffix = suggest_paraphrases(make_template("P11", kTopicSeed + " [text]"), f.roberta);
    const auto prefix = suggest_paraphrases(make_template("Q", "[text] " + kTopicSeed), f.roberta);
    ASSERT_EQ(suffix.size(), prefix.size());
    ASSERT_FALSE(suffix.empty());
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < suffix.size(); ++i) {
        EXPECT_TRUE(suffix[i].text.ends_with(" [text]"));
        EXPECT_EQ(prefix[i].text, "[text] " + strip_placeholder(suffix[i].text));
        EXPECT_GT(suffix[i].distance_to_seed, 20u);
        texts.push_back(suffix[i].text);
    }
    EXPECT_NE(std::find(texts.begin(), texts.end(), "Which term accurately categorizes this current news report? [text]"),
              texts.end());
    const std::string close = "Tell me the best topic for this news article?";
    EXPECT_EQ(levenshtein(close, kTopicSeed), 19u);
    EXPECT_EQ(std::find(texts.begin(), texts.end(), close + " [text]"), texts.end());
}

TEST(Paraphrases, FilterIsGreedyInCandidateOrder) {
    const auto got = filter_paraphrases("aaaa", {"bbbb", "bbbc", "cccc", "aaab"}, 2);
    ASSERT_EQ(got.size(), 2u);
    EXPECT_EQ(got[0].text, "bbbb");
    EXPECT_EQ(got[1].text, "cccc");
    EXPECT_EQ(got[1].distance_to_seed, 4u);
    EXPECT_EQ(theta("a b c d e f g h i [text]"), 20);
    EXPECT_EQ(theta("a b c d e f g h i j [text]"), 25);
}

TEST(Sensitivity, EmptyBankLeavesParaphraseSideAbsent) {
    auto& f = fx();
    const auto t = make_template("X", "Nobody recorded paraphrases for this label [text]");
    const auto est = estimate_sensitivity(t, f.ds, f.roberta, SensitivityInputs{f.embedder, f.corpus_index}, 2, 3);
    EXPECT_TRUE(est.keyword_avg.has_value());
    EXPECT_EQ(est.keyword_samples.size(), 2u);
    EXPECT_FALSE(est.paraphrase_avg.has_value());
    EXPECT_TRUE(est.paraphrase_samples.empty());
    EXPECT_EQ(est, estimate_sensitivity(t, f.ds, f.roberta, SensitivityInputs{f.embedder, f.corpus_index}, 2, 3));
    EXPECT_THROW(estimate_sensitivity(t, f.ds, f.roberta, SensitivityInputs{f.embedder, f.corpus_index}, 0, 3), Error);
}

TEST(KShot, ConfigCoversEveryTestPoint) {
    auto& f = fx();
    const auto train_index = build_train_index(f.ds, f.embedder);
    for (int k = 1; k <= 5; ++k) {
        const auto cfg = build_kshot_config(f.ds, k, f.embedder, train_index);
        EXPECT_EQ(cfg.k, k);
        ASSERT_EQ(cfg.per_test_point.size(), f.ds.test.size());
        for (const auto& x : f.ds.test) EXPECT_EQ(cfg.per_test_point.at(x.id), oracle::kshot(x, f.ds, k, f.embedder));
    }
    EXPECT_THROW(build_kshot_config(f.ds, 0, f.embedder, train_index), Error);
    EXPECT_THROW(build_kshot_config(f.ds, 6, f.embedder, train_index), Error);
}

TEST(KShot, InsufficientExamples) {
    LabeledDataset tiny;
    tiny.classes = {"a", "b"};
    tiny.train = {{"t1", "alpha", "a"}, {"t2", "beta", "b"}};
    Embedder e{std::make_shared<MockEmbeddingBackend>()};
    const auto idx = build_train_index(tiny, e);
    EXPECT_EQ(select_kshot_examples({"x", "gamma", "a"}, tiny, 2, e, idx).size(), 2u);
    try {
        select_kshot_examples({"x", "gamma", "a"}, tiny, 3, e, idx);
        FAIL();
    } catch (const Error& err) {
        EXPECT_EQ(err.code(), ErrorCode::InsufficientExamples);
    }
}
