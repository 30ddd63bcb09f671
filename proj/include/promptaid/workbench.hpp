#pragma once

// The engine behind both the HTTP service and the CLI: configured datasets,
// models, embeddings and the session store, with one method per user action.
// Methods return JSON documents so both front ends print the same numbers.
//
// Long computations run on a snapshot outside the session lock; only the
// commit of their result takes the write lock.

#include "promptaid/config.hpp"
#include "promptaid/dataset.hpp"
#include "promptaid/perturbation.hpp"
#include "promptaid/projection.hpp"
#include "promptaid/provenance.hpp"

#include <cmath>

namespace promptaid {

inline constexpr std::size_t kHistogramBins = 10;

inline json template_summary(const PromptTemplate& t) {
    json j{{"id", t.id}, {"text", t.text}, {"origin", to_string(t.origin)}, {"text_prefixed", is_text_prefixed(t)}};
    j["parent_id"] = t.parent_id ? json(*t.parent_id) : json(nullptr);
    j["accuracy"] = t.cached_eval ? json(t.cached_eval->accuracy) : json(nullptr);
    j["kshot"] = t.kshot ? json(*t.kshot) : json(nullptr);
    return j;
}

inline json dataset_summary(const LabeledDataset& ds) {
    return json{{"name", ds.name},       {"task_type", ds.task_type},         {"classes", ds.classes},
                {"verbalizers", ds.verbalizers}, {"train_size", ds.train.size()}, {"test_size", ds.test.size()},
                {"test", ds.test}};
}

/// Counts per bin of width 1/bins over [0, 1]; 1.0 falls in the last bin.
inline std::vector<std::size_t> accuracy_histogram(const std::vector<double>& values, std::size_t bins = kHistogramBins) {
    std::vector<std::size_t> counts(bins, 0);
    for (double v : values) {
        // the epsilon keeps k/n values such as 0.7 out of the bin below
        auto b = static_cast<long>(std::floor(v * static_cast<double>(bins) + 1e-9));
        b = std::clamp(b, 0L, static_cast<long>(bins) - 1);
        ++counts[static_cast<std::size_t>(b)];
    }
    return counts;
}

struct WorkbenchOptions {
    /// Load the configured session file at startup when it exists.
    bool load_session_file = true;
    /// Create and evaluate the active dataset's seed templates when the
    /// session has none.
    bool create_seeds = true;
};

class Workbench {
public:
    explicit Workbench(ServiceConfig cfg, WorkbenchOptions opts = {})
        : cfg_(std::move(cfg)),
          embedder_(make_embedding_backend(cfg_.embedding),
                    cfg_.embedding.cache_path.empty() ? std::make_shared<EmbeddingCache>()
                                                      : std::make_shared<EmbeddingCache>(cfg_.embedding.cache_path)) {
        for (const auto& path : cfg_.datasets) {
            auto ds = load_dataset(path);
            if (datasets_.contains(ds.name)) fail(ErrorCode::ConfigError, "duplicate dataset name", ds.name);
            dataset_order_.push_back(ds.name);
            datasets_.emplace(ds.name, std::move(ds));
        }
        for (const auto& spec : cfg_.models) {
            model_order_.push_back(spec.id);
            models_.emplace(spec.id, ModelEntry{spec, make_model_client(spec, cfg_.base_dir)});
        }
        corpus_ = load_word_corpus(cfg_.corpus);

        SessionState s;
        if (opts.load_session_file && !cfg_.session_file.empty() && std::filesystem::exists(cfg_.session_file)) {
            s = load_session(cfg_.session_file);
            if (!datasets_.contains(s.dataset) || !models_.contains(s.model))
                fail(ErrorCode::ConfigError, "session refers to an unconfigured dataset or model", cfg_.session_file.string());
        } else {
            s.select(dataset_order_.front(), model_order_.front());
        }
        store_.write([&](SessionState& st) { st = std::move(s); });
        if (opts.create_seeds) ensure_seeds();
    }

    const ServiceConfig& config() const noexcept { return cfg_; }
    const Embedder& embedder() const noexcept { return embedder_; }
    SessionState snapshot() const { return store_.snapshot(); }

    json datasets() const {
        json a = json::array();
        for (const auto& name : dataset_order_) a.push_back(dataset_summary(datasets_.at(name)));
        return a;
    }

    json models() const {
        json a = json::array();
        for (const auto& id : model_order_) a.push_back(model_summary(models_.at(id).spec));
        return a;
    }

    // -- session ------------------------------------------------------------

    json session() const {
        return store_.read([&](const SessionState& s) {
            return json{{"schema_version", kSessionSchemaVersion},
                        {"dataset", s.dataset},
                        {"model", s.model},
                        {"template_count", s.graph.size()},
                        {"next_id", s.next_id},
                        {"seeds_used", s.seeds_used}};
        });
    }

    /// Select the active (dataset, model); stored evaluations for the pair
    /// become the templates' cached results, and seeds are added if missing.
    json select(const std::string& dataset, const std::string& model) {
        dataset_ref(dataset);
        model_ref(model);
        store_.write([&](SessionState& s) { s.select(dataset, model); });
        ensure_seeds();
        return session();
    }

    json save(const std::optional<std::filesystem::path>& path = std::nullopt) const {
        const auto target = session_path(path);
        const auto s = store_.snapshot();
        save_session(s, target);
        return json{{"saved", target.string()}, {"template_count", s.graph.size()}};
    }

    json load(const std::optional<std::filesystem::path>& path = std::nullopt) {
        auto s = load_session(session_path(path));
        dataset_ref(s.dataset);
        model_ref(s.model);
        store_.write([&](SessionState& st) { st = std::move(s); });
        return session();
    }

    // -- templates ----------------------------------------------------------

    json templates() const {
        return store_.read([](const SessionState& s) {
            json a = json::array();
            for (const auto& id : s.graph.creation_order()) a.push_back(template_summary(s.graph.get(id)));
            return a;
        });
    }

    json get_template(const std::string& id) const {
        return store_.read([&](const SessionState& s) { return json(s.graph.get(id)); });
    }

    /// New root template (origin seed or manual). Not evaluated.
    json create_template(const std::string& text, Origin origin = Origin::Manual) {
        if (!is_root_origin(origin)) fail(ErrorCode::InvalidArgument, "only seed or manual templates can be created directly");
        validate_template_text(text);
        return store_.write([&](SessionState& s) {
            auto t = make_template(s.fresh_id(), text, origin);
            s.graph.record_version(std::nullopt, t);
            return template_summary(t);
        });
    }

    json delete_template(const std::string& id) {
        return store_.write([&](SessionState& s) { return json{{"removed", s.remove(id)}}; });
    }

    json evaluate(const std::string& id) {
        const auto ctx = context();
        const auto t = template_of(id);
        auto r = evaluate_template(t, *ctx.ds, *ctx.model->client, eval_options());
        commit_evaluation(ctx, id, r);
        return json(r);
    }

    json mutable_words(const std::string& id) const {
        const auto t = template_of(id);
        std::vector<std::string> words;
        for (auto& w : content_words(t.text))
            if (std::find(words.begin(), words.end(), w) == words.end()) words.push_back(std::move(w));
        return json{{"template", id}, {"words", words}};
    }

    json keywords(const std::string& id, const std::string& target, std::optional<std::uint64_t> seed = std::nullopt) {
        const auto ctx = context();
        const auto t = template_of(id);
        const auto suggestions = suggest_keywords(t, target, ctx.ds->task_type, embedder_, corpus_index(ctx.ds->task_type));
        json out{{"template", id}, {"target", detail::lower_ascii(target)}, {"suggestions", suggestions}};
        std::vector<std::string> words;
        for (const auto& s : suggestions) words.push_back(s.word);
        out["layout"] = words.empty() ? json(nullptr)
                                      : json(recommendation_layout(detail::lower_ascii(target), words, embedder_,
                                                                   seed.value_or(cfg_.default_seed), ctx.ds->task_type));
        return out;
    }

    json paraphrases(const std::string& id, std::optional<std::uint64_t> seed = std::nullopt) {
        const auto ctx = context();
        const auto t = template_of(id);
        const auto suggestions = suggest_paraphrases(t, *ctx.model->client, cfg_.paraphrase_candidates);
        json out{{"template", id}, {"theta", theta(t.text)}, {"suggestions", suggestions}};
        std::vector<std::string> texts;
        for (const auto& s : suggestions) texts.push_back(strip_placeholder(s.text));
        out["layout"] = texts.empty() ? json(nullptr)
                                      : json(recommendation_layout(strip_placeholder(t.text), texts, embedder_,
                                                                   seed.value_or(cfg_.default_seed)));
        return out;
    }

    /// kind "keyword": payload {target, replacement}; kind "paraphrase":
    /// payload {text}. Records the new version and evaluates it.
    json apply(const std::string& id, const std::string& kind, const json& payload) {
        const auto ctx = context();
        const auto t = template_of(id);
        PromptTemplate variant;
        try {
            if (kind == "keyword") {
                variant = apply_keyword(t, payload.at("target").get<std::string>(),
                                        payload.at("replacement").get<std::string>(), "");
            } else if (kind == "paraphrase") {
                variant = apply_paraphrase(t, payload.at("text").get<std::string>(), "");
            } else {
                fail(ErrorCode::InvalidArgument, "kind must be keyword or paraphrase", kind);
            }
        } catch (const json::exception& e) {
            fail(ErrorCode::InvalidArgument, std::string("bad payload: ") + e.what());
        }
        auto r = evaluate_template(variant, *ctx.ds, *ctx.model->client, eval_options());
        return commit_variant(ctx, std::move(variant), std::move(r));
    }

    json kshot(const std::string& id) {
        const auto ctx = context();
        const auto t = template_of(id);
        auto sweep = sweep_k(t, *ctx.ds, *ctx.model->client, embedder_, train_index(*ctx.ds), "", eval_options());
        auto summary = commit_variant(ctx, std::move(sweep.variant), sweep.result);
        return json{{"best_k", sweep.best_k}, {"accuracy_by_k", sweep.accuracy_by_k}, {"template", summary}};
    }

    json sensitivities(const std::string& id, std::optional<int> samples = std::nullopt,
                       std::optional<std::uint64_t> seed = std::nullopt) {
        const auto ctx = context();
        const auto t = template_of(id);
        const SensitivityInputs in{embedder_, corpus_index(ctx.ds->task_type), cfg_.paraphrase_candidates, eval_options()};
        const auto s = seed.value_or(cfg_.default_seed);
        auto est = estimate_sensitivity(t, *ctx.ds, *ctx.model->client, in, samples.value_or(cfg_.samples_per_type), s);
        store_.write([&](SessionState& st) {
            if (!st.graph.contains(id)) return;
            st.sensitivities[RunKey{id, ctx.dataset, ctx.model_id}] = est;
            if (std::find(st.seeds_used.begin(), st.seeds_used.end(), s) == st.seeds_used.end()) st.seeds_used.push_back(s);
        });
        json out = est;
        out["template"] = id;
        return out;
    }

    json canvas(std::optional<std::uint64_t> seed = std::nullopt) const {
        std::vector<PromptTemplate> evaluated;
        store_.read([&](const SessionState& s) {
            for (const auto& id : s.graph.creation_order())
                if (s.graph.get(id).cached_eval) evaluated.push_back(s.graph.get(id));
            return 0;
        });
        const auto points = canvas_positions(evaluated, embedder_, seed.value_or(cfg_.default_seed));
        std::vector<double> acc;
        for (const auto& t : evaluated) acc.push_back(t.cached_eval->accuracy);
        const auto counts = accuracy_histogram(acc);
        json bins = json::array();
        for (std::size_t b = 0; b < counts.size(); ++b)
            bins.push_back({{"lo", static_cast<double>(b) / kHistogramBins},
                            {"hi", static_cast<double>(b + 1) / kHistogramBins},
                            {"count", counts[b]}});
        return json{{"seed", seed.value_or(cfg_.default_seed)}, {"points", points}, {"histogram", bins}};
    }

    json provenance() const {
        return store_.read([](const SessionState& s) {
            json templates = json::array();
            for (const auto& id : s.graph.creation_order()) templates.push_back(template_summary(s.graph.get(id)));
            return json{{"templates", templates}, {"edges", s.graph.edges()}, {"leaderboard", s.graph.leaderboard()}};
        });
    }

    json diff(const std::string& a, const std::string& b) const {
        const auto ta = template_of(a);
        const auto tb = template_of(b);
        return json{{"a", a}, {"b", b}, {"entries", word_diff(strip_placeholder(ta.text), strip_placeholder(tb.text))}};
    }

    json test(const std::string& id, const std::vector<std::string>& texts) {
        const auto ctx = context();
        const auto t = template_of(id);
        return json{{"template", id},
                    {"predictions", test_custom(t, texts, *ctx.ds, *ctx.model->client, ctx.model->spec.kind)}};
    }

    // -- direct template runs (CLI) -----------------------------------------

    /// Evaluates free text as a throwaway manual template, outside the session.
    EvaluationResult evaluate_text(const std::string& text) {
        const auto ctx = context();
        return evaluate_template(make_template("adhoc", text), *ctx.ds, *ctx.model->client, eval_options());
    }

    const LabeledDataset& active_dataset() const { return *context().ds; }

private:
    struct ModelEntry {
        ModelSpec spec;
        std::shared_ptr<ModelClient> client;
    };

    struct Context {
        std::string dataset;
        std::string model_id;
        const LabeledDataset* ds;
        const ModelEntry* model;
    };

    const LabeledDataset& dataset_ref(const std::string& name) const {
        auto it = datasets_.find(name);
        if (it == datasets_.end()) fail(ErrorCode::UnknownDataset, "no such dataset", name);
        return it->second;
    }

    const ModelEntry& model_ref(const std::string& id) const {
        auto it = models_.find(id);
        if (it == models_.end()) fail(ErrorCode::UnknownModel, "no such model", id);
        return it->second;
    }

    Context context() const {
        auto [d, m] = store_.read([](const SessionState& s) { return std::pair{s.dataset, s.model}; });
        return Context{d, m, &dataset_ref(d), &model_ref(m)};
    }

    PromptTemplate template_of(const std::string& id) const {
        return store_.read([&](const SessionState& s) {
            if (!s.graph.contains(id)) fail(ErrorCode::UnknownTemplate, "no such template", id);
            return s.graph.get(id);
        });
    }

    EvalOptions eval_options() const { return EvalOptions{cfg_.parallelism}; }

    std::filesystem::path session_path(const std::optional<std::filesystem::path>& path) const {
        if (path && !path->empty()) return *path;
        if (cfg_.session_file.empty()) fail(ErrorCode::ConfigError, "no session file configured or given");
        return cfg_.session_file;
    }

    void commit_evaluation(const Context& ctx, const std::string& id, const EvaluationResult& r) {
        store_.write([&](SessionState& s) {
            if (!s.graph.contains(id)) fail(ErrorCode::UnknownTemplate, "template was deleted during evaluation", id);
            s.evaluations[RunKey{id, ctx.dataset, ctx.model_id}] = r;
            if (s.dataset == ctx.dataset && s.model == ctx.model_id) s.graph.get_mut(id).cached_eval = r;
        });
    }

    json commit_variant(const Context& ctx, PromptTemplate variant, EvaluationResult r) {
        return store_.write([&](SessionState& s) {
            if (!s.graph.contains(*variant.parent_id))
                fail(ErrorCode::UnknownParent, "parent was deleted during the operation", *variant.parent_id);
            variant.id = s.fresh_id();
            variant.cached_eval.reset();
            const auto id = variant.id;
            const auto parent = variant.parent_id;
            s.graph.record_version(parent, std::move(variant));
            s.evaluations[RunKey{id, ctx.dataset, ctx.model_id}] = r;
            if (s.dataset == ctx.dataset && s.model == ctx.model_id) s.graph.get_mut(id).cached_eval = std::move(r);
            return template_summary(s.graph.get(id));
        });
    }

    /// Adds the active dataset's seed templates that are not yet roots and
    /// evaluates seeds lacking a result for the active pair.
    void ensure_seeds() {
        const auto ctx = context();
        std::vector<std::string> pending;
        store_.write([&](SessionState& s) {
            std::set<std::string> roots;
            for (const auto& id : s.graph.creation_order())
                if (!s.graph.get(id).parent_id) roots.insert(s.graph.get(id).text);
            for (const auto& seed : ctx.ds->seed_templates) {
                if (roots.contains(seed.text)) continue;
                s.graph.record_version(std::nullopt, make_template(s.fresh_id(), seed.text, Origin::Seed));
                roots.insert(seed.text);
            }
            for (const auto& id : s.graph.creation_order()) {
                const auto& t = s.graph.get(id);
                if (t.origin == Origin::Seed && !t.cached_eval) pending.push_back(id);
            }
            return 0;
        });
        for (const auto& id : pending) {
            const auto t = template_of(id);
            commit_evaluation(ctx, id, evaluate_template(t, *ctx.ds, *ctx.model->client, eval_options()));
        }
    }

    const VectorIndex& corpus_index(const std::string& task_type) {
        std::lock_guard lock(index_mutex_);
        auto it = corpus_indices_.find(task_type);
        if (it == corpus_indices_.end())
            it = corpus_indices_.emplace(task_type, build_corpus_index(corpus_, task_type, embedder_)).first;
        return it->second;
    }

    const VectorIndex& train_index(const LabeledDataset& ds) {
        std::lock_guard lock(index_mutex_);
        auto it = train_indices_.find(ds.name);
        if (it == train_indices_.end()) it = train_indices_.emplace(ds.name, build_train_index(ds, embedder_)).first;
        return it->second;
    }

    ServiceConfig cfg_;
    Embedder embedder_;
    std::map<std::string, LabeledDataset> datasets_;
    std::vector<std::string> dataset_order_;
    std::map<std::string, ModelEntry> models_;
    std::vector<std::string> model_order_;
    std::vector<std::string> corpus_;
    std::mutex index_mutex_;
    // std::map nodes are stable, so references handed out stay valid
    std::map<std::string, VectorIndex> corpus_indices_;
    std::map<std::string, VectorIndex> train_indices_;
    SessionStore store_;
};

} // namespace promptaid
