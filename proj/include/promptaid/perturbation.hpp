#pragma once

// Perturbation recommenders: keyword replacements from a word corpus,
// distance-filtered paraphrases, nearest-neighbour k-shot example selection
// with a sweep over k, and next-step sensitivity estimates.

#include "promptaid/evaluator.hpp"
#include "promptaid/text_metrics.hpp"
#include "promptaid/vector_index.hpp"

#include <set>
#include <unordered_set>

namespace promptaid {

inline constexpr std::size_t kKeywordPool = 20;
inline constexpr std::size_t kKeywordsPerBucket = 5;
inline constexpr int kMinShots = 1;
inline constexpr int kMaxShots = 5;
inline constexpr int kDefaultSamplesPerType = 5;
inline constexpr std::size_t kDefaultParaphraseCandidates = 10;

// ---------------------------------------------------------------------------
// Keywords

enum class Bucket { Near, Far };

constexpr std::string_view to_string(Bucket b) noexcept { return b == Bucket::Near ? "near" : "far"; }

struct KeywordSuggestion {
    std::string word;
    double distance = 0.0;
    Bucket bucket = Bucket::Near;
    bool operator==(const KeywordSuggestion&) const = default;
};

inline void to_json(json& j, const KeywordSuggestion& s) {
    j = json{{"word", s.word}, {"distance", s.distance}, {"bucket", to_string(s.bucket)}};
}

/// Index of corpus words, each embedded as `word + " " + task_type`.
inline VectorIndex build_corpus_index(const std::vector<std::string>& words, const std::string& task_type,
                                      const Embedder& embedder) {
    if (words.empty()) fail(ErrorCode::EmptyIndex, "word corpus is empty");
    const auto vectors = embedder.embed(words, task_type);
    std::vector<IndexEntry> entries;
    entries.reserve(words.size());
    for (std::size_t i = 0; i < words.size(); ++i) entries.push_back({words[i], vectors[i]});
    return VectorIndex::build(std::move(entries));
}

/// Keyword replacements for `target`: the 20 nearest corpus words, minus
/// those sharing a lemma key with the target or with an earlier survivor;
/// the 5 closest survivors are "near", up to 5 of the farthest remaining
/// ones are "far". Ascending by distance.
inline std::vector<KeywordSuggestion> suggest_keywords(const PromptTemplate& t, std::string_view target,
                                                       const std::string& task_type, const Embedder& embedder,
                                                       const VectorIndex& corpus_index) {
    const auto target_lower = detail::lower_ascii(std::string(target));
    const auto mutable_words = content_words(t.text);
    if (std::find(mutable_words.begin(), mutable_words.end(), target_lower) == mutable_words.end())
        fail(ErrorCode::TargetNotMutable, "word is not a mutable word of the template", std::string(target));
    if (corpus_index.size() == 0) fail(ErrorCode::EmptyIndex, "word corpus index is empty");

    const auto q = embedder.embed_one(target_lower, task_type);
    const auto pool = corpus_index.query_knn(q, kKeywordPool, Metric::Cosine);

    std::unordered_set<std::string> lemmas;
    lemmas.insert(lemma_key(target_lower));
    std::vector<Neighbor> kept;
    for (const auto& n : pool) {
        if (n.key.empty()) continue;
        if (lemmas.insert(lemma_key(n.key)).second) kept.push_back(n);
    }
    std::vector<KeywordSuggestion> out;
    const std::size_t near = std::min(kKeywordsPerBucket, kept.size());
    const std::size_t far_begin = std::max(near, kept.size() > kKeywordsPerBucket ? kept.size() - kKeywordsPerBucket : 0);
    for (std::size_t i = 0; i < near; ++i) out.push_back({kept[i].key, kept[i].distance, Bucket::Near});
    for (std::size_t i = far_begin; i < kept.size(); ++i) out.push_back({kept[i].key, kept[i].distance, Bucket::Far});
    return out;
}

namespace detail {
inline bool is_word_char(char c) noexcept { return is_word_byte(static_cast<unsigned char>(c)); }
} // namespace detail

/// Replace every whole-word, case-insensitive occurrence of `target`. An
/// occurrence starting with an uppercase letter gets a capitalized
/// replacement.
inline PromptTemplate apply_keyword(const PromptTemplate& t, std::string_view target, std::string_view replacement,
                                    std::string new_id) {
    if (target.empty() || replacement.empty()) fail(ErrorCode::InvalidArgument, "empty keyword");
    const auto tl = detail::lower_ascii(std::string(target));
    if (tl == detail::lower_ascii(std::string(replacement)))
        fail(ErrorCode::RedundantReplacement, "replacement equals the target word", std::string(target));
    const std::string& text = t.text;
    const auto lowered = detail::lower_ascii(text);
    std::string out;
    std::size_t i = 0, hits = 0;
    while (i < text.size()) {
        const auto pos = lowered.find(tl, i);
        if (pos == std::string::npos) break;
        const bool left_ok = pos == 0 || !detail::is_word_char(text[pos - 1]);
        const bool right_ok = pos + tl.size() == text.size() || !detail::is_word_char(text[pos + tl.size()]);
        out.append(text, i, pos - i);
        if (left_ok && right_ok) {
            std::string rep(replacement);
            if (std::isupper(static_cast<unsigned char>(text[pos])))
                rep[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(rep[0])));
            out += rep;
            ++hits;
        } else {
            out.append(text, pos, tl.size());
        }
        i = pos + tl.size();
    }
    out.append(text, i, std::string::npos);
    if (hits == 0) fail(ErrorCode::TargetNotFound, "word does not occur in the template", std::string(target));
    return make_template(std::move(new_id), std::move(out), Origin::Keyword, t.id);
}

// ---------------------------------------------------------------------------
// Paraphrases

/// Levenshtein threshold: 20 for seeds under 10 words, otherwise 25.
/// Words are counted after removing the placeholder.
inline int theta(std::string_view seed_text) {
    return tokenize_words(strip_placeholder(seed_text)).size() < 10 ? 20 : 25;
}

struct ParaphraseSuggestion {
    std::string text;
    std::size_t distance_to_seed = 0;
    bool operator==(const ParaphraseSuggestion&) const = default;
};

inline void to_json(json& j, const ParaphraseSuggestion& s) {
    j = json{{"text", s.text}, {"distance_to_seed", s.distance_to_seed}};
}

/// Greedy scan in candidate order: accept c iff its distance to the seed
/// and to every already-accepted candidate exceeds `threshold`.
inline std::vector<ParaphraseSuggestion> filter_paraphrases(std::string_view seed,
                                                            const std::vector<std::string>& candidates,
                                                            std::size_t threshold) {
    std::vector<ParaphraseSuggestion> accepted;
    for (const auto& c : candidates) {
        const auto d = levenshtein(c, seed);
        if (d <= threshold) continue;
        const bool distinct = std::all_of(accepted.begin(), accepted.end(),
                                          [&](const ParaphraseSuggestion& a) { return levenshtein(c, a.text) > threshold; });
        if (distinct) accepted.push_back({c, d});
    }
    return accepted;
}

/// Paraphrases of `t` that keep the placeholder on the same side. Distances
/// are measured with the placeholder removed.
inline std::vector<ParaphraseSuggestion> suggest_paraphrases(const PromptTemplate& t, ModelClient& model,
                                                             std::size_t n_raw = kDefaultParaphraseCandidates) {
    if (n_raw == 0) fail(ErrorCode::InvalidArgument, "n_raw must be at least 1");
    const auto seed = strip_placeholder(t.text);
    std::vector<std::string> candidates;
    for (const auto& c : model.paraphrase_candidates(seed, n_raw)) {
        auto s = strip_placeholder(c);
        if (!s.empty()) candidates.push_back(std::move(s));
    }
    auto accepted = filter_paraphrases(seed, candidates, static_cast<std::size_t>(theta(t.text)));
    const bool prefixed = is_text_prefixed(t);
    for (auto& a : accepted) a.text = prefixed ? std::string(kPlaceholder) + " " + a.text : a.text + " " + std::string(kPlaceholder);
    return accepted;
}

inline PromptTemplate apply_paraphrase(const PromptTemplate& t, std::string text, std::string new_id) {
    return make_template(std::move(new_id), std::move(text), Origin::Paraphrase, t.id);
}

// ---------------------------------------------------------------------------
// k-shot examples

/// Train split embedded without a context tag, keyed by point id.
inline VectorIndex build_train_index(const LabeledDataset& ds, const Embedder& embedder) {
    if (ds.train.empty()) fail(ErrorCode::EmptyIndex, "train split is empty");
    std::vector<std::string> texts;
    for (const auto& p : ds.train) texts.push_back(p.text);
    const auto vectors = embedder.embed(texts);
    std::vector<IndexEntry> entries;
    for (std::size_t i = 0; i < ds.train.size(); ++i) entries.push_back({ds.train[i].id, vectors[i]});
    return VectorIndex::build(std::move(entries));
}

/// k = 1: the nearest train point of another class. k > 1: the k-1 nearest
/// points of other classes plus the nearest point of x's own class. The
/// result is ordered by cosine distance to x, ties by id.
inline std::vector<std::string> select_kshot_examples(const DataPoint& x, const LabeledDataset& ds, int k,
                                                      const Embedder& embedder, const VectorIndex& train_index) {
    if (k < kMinShots || k > kMaxShots) fail(ErrorCode::InvalidArgument, "k must be in [1, 5]", std::to_string(k));
    const auto q = embedder.embed_one(x.text);
    const auto ranked = train_index.query_knn(q, train_index.size(), Metric::Cosine);
    const std::size_t want_other = k == 1 ? 1 : static_cast<std::size_t>(k - 1);
    const std::size_t want_same = k == 1 ? 0 : 1;
    std::vector<Neighbor> picked;
    std::size_t other = 0, same = 0;
    for (const auto& n : ranked) {
        const auto* p = ds.find_train(n.key);
        if (!p) fail(ErrorCode::SchemaError, "train index key is not a train id", n.key);
        if (p->label == x.label) {
            if (same < want_same) {
                picked.push_back(n);
                ++same;
            }
        } else if (other < want_other) {
            picked.push_back(n);
            ++other;
        }
        if (same == want_same && other == want_other) break;
    }
    if (same < want_same || other < want_other)
        fail(ErrorCode::InsufficientExamples, "train split cannot supply " + std::to_string(k) + " examples", x.id);
    std::sort(picked.begin(), picked.end(), [](const Neighbor& a, const Neighbor& b) {
        return a.distance < b.distance || (a.distance == b.distance && a.key < b.key);
    });
    std::vector<std::string> ids;
    for (auto& n : picked) ids.push_back(std::move(n.key));
    return ids;
}

inline KShotConfig build_kshot_config(const LabeledDataset& ds, int k, const Embedder& embedder,
                                      const VectorIndex& train_index) {
    KShotConfig cfg{k, {}};
    for (const auto& x : ds.test) cfg.per_test_point[x.id] = select_kshot_examples(x, ds, k, embedder, train_index);
    return cfg;
}

struct SweepResult {
    int best_k = kMinShots;
    KShotConfig config;
    EvaluationResult result;
    /// The k-shot variant (origin kshot, parent t), result cached on it.
    PromptTemplate variant;
    /// accuracy for k = 1..5
    std::vector<double> accuracy_by_k;
};

/// Largest accuracy wins; ties go to the smallest index. Exposed for the
/// sweep and its tests.
inline std::size_t argmax_first(const std::vector<double>& values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

inline SweepResult sweep_k(const PromptTemplate& t, const LabeledDataset& ds, ModelClient& model,
                           const Embedder& embedder, const VectorIndex& train_index, std::string new_id,
                           const EvalOptions& opts = {}) {
    std::vector<KShotConfig> configs;
    std::vector<EvaluationResult> results;
    SweepResult sweep;
    for (int k = kMinShots; k <= kMaxShots; ++k) {
        auto variant = t;
        variant.kshot = build_kshot_config(ds, k, embedder, train_index);
        results.push_back(evaluate_template(variant, ds, model, opts));
        sweep.accuracy_by_k.push_back(results.back().accuracy);
        configs.push_back(std::move(*variant.kshot));
    }
    const auto best = argmax_first(sweep.accuracy_by_k);
    sweep.best_k = static_cast<int>(best) + kMinShots;
    sweep.config = configs[best];
    sweep.result = results[best];
    sweep.variant = make_template(std::move(new_id), t.text, Origin::KShot, t.id);
    sweep.variant.kshot = sweep.config;
    sweep.variant.cached_eval = sweep.result;
    return sweep;
}

// ---------------------------------------------------------------------------
// Sensitivities

namespace detail {

inline long correct_count(const EvaluationResult& r) {
    return std::count_if(r.per_point.begin(), r.per_point.end(), [](const auto& kv) { return kv.second.correct; });
}

/// Mean accuracy as total correct / total scored, so equal accuracies
/// average to exactly that value.
inline double mean_accuracy(const std::vector<EvaluationResult>& rs) {
    long correct = 0, total = 0;
    for (const auto& r : rs) {
        correct += correct_count(r);
        total += static_cast<long>(r.per_point.size());
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

} // namespace detail

struct SensitivityInputs {
    const Embedder& embedder;
    const VectorIndex& corpus_index;
    std::size_t paraphrase_candidates = kDefaultParaphraseCandidates;
    EvalOptions eval{};
};

/// Average accuracy of sampled next-step variants, per perturbation type.
///
/// Keyword side: a mutable word (among those with suggestions) is drawn
/// uniformly, then one of its suggestions uniformly, samples_per_type times.
/// Paraphrase side: the filtered paraphrases are sampled without
/// replacement, or with replacement when there are fewer than
/// samples_per_type. Suggestions are generated once per call and the
/// variant list is fixed before any evaluation.
inline SensitivityEstimate estimate_sensitivity(const PromptTemplate& t, const LabeledDataset& ds, ModelClient& model,
                                                const SensitivityInputs& in, int samples_per_type, std::uint64_t seed) {
    if (samples_per_type < 1) fail(ErrorCode::InvalidArgument, "samples_per_type must be at least 1");
    auto base = t;
    base.kshot.reset();
    base.cached_eval.reset();
    const SplitMix64 root(seed);
    SensitivityEstimate est;
    est.samples_per_type = samples_per_type;
    est.seed = seed;

    // keyword variants
    std::vector<std::pair<std::string, std::vector<KeywordSuggestion>>> options;
    std::set<std::string> seen;
    for (const auto& w : content_words(base.text)) {
        if (!seen.insert(w).second) continue;
        auto s = suggest_keywords(base, w, ds.task_type, in.embedder, in.corpus_index);
        if (!s.empty()) options.emplace_back(w, std::move(s));
    }
    if (!options.empty()) {
        auto rng = root.fork(1);
        std::vector<PromptTemplate> variants;
        for (int i = 0; i < samples_per_type; ++i) {
            const auto& [word, sugg] = options[rng.below(options.size())];
            const auto& pick = sugg[rng.below(sugg.size())];
            variants.push_back(apply_keyword(base, word, pick.word, base.id + "~k" + std::to_string(i)));
        }
        std::vector<EvaluationResult> results;
        for (const auto& v : variants) {
            results.push_back(evaluate_template(v, ds, model, in.eval));
            est.keyword_samples.emplace_back(v.text, results.back().accuracy);
        }
        est.keyword_avg = detail::mean_accuracy(results);
    }

    // paraphrase variants
    std::vector<ParaphraseSuggestion> paraphrases;
    try {
        paraphrases = suggest_paraphrases(base, model, in.paraphrase_candidates);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyBank) throw;
    }
    if (!paraphrases.empty()) {
        auto rng = root.fork(2);
        std::vector<std::size_t> picks;
        const auto n = paraphrases.size();
        const auto want = static_cast<std::size_t>(samples_per_type);
        if (n >= want) {
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), std::size_t{0});
            for (std::size_t i = 0; i < want; ++i) std::swap(order[i], order[i + rng.below(n - i)]);
            picks.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(want));
        } else {
            for (std::size_t i = 0; i < want; ++i) picks.push_back(rng.below(n));
        }
        std::vector<EvaluationResult> results;
        for (std::size_t i = 0; i < picks.size(); ++i) {
            const auto v = apply_paraphrase(base, paraphrases[picks[i]].text, base.id + "~p" + std::to_string(i));
            results.push_back(evaluate_template(v, ds, model, in.eval));
            est.paraphrase_samples.emplace_back(v.text, results.back().accuracy);
        }
        est.paraphrase_avg = detail::mean_accuracy(results);
    }
    return est;
}

} // namespace promptaid
