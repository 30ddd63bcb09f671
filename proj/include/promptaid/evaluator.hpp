#pragma once

// Runs a template over a test split and computes the data-panel metrics.

#include "promptaid/gateway.hpp"

#include <exception>
#include <mutex>
#include <thread>

namespace promptaid {

/// 0-shot: the filled template. k-shot: one line per example
/// (filled example + " " + first verbalizer word of its label), then the
/// filled test point on the last line.
inline std::string build_scoring_string(const PromptTemplate& t, const DataPoint& x, const LabeledDataset& ds) {
    if (!t.kshot) return fill_template(t, x.text);
    auto it = t.kshot->per_test_point.find(x.id);
    if (it == t.kshot->per_test_point.end()) fail(ErrorCode::MissingKShot, "no k-shot examples for point", x.id);
    std::string out;
    for (const auto& ex_id : it->second) {
        const auto* ex = ds.find_train(ex_id);
        if (!ex) fail(ErrorCode::MissingKShot, "k-shot example is not a train point", ex_id);
        out += fill_template(t, ex->text);
        out += ' ';
        out += ds.label_word(ex->label);
        out += '\n';
    }
    out += fill_template(t, x.text);
    return out;
}

struct LabeledPrediction {
    std::string id;
    std::string gold;
    PointResult result;
};

/// Aggregates per-point outcomes. Precision and recall are 0 when their
/// denominator is 0. UNPARSED predictions land in the extra column.
inline EvaluationResult compute_metrics(const std::vector<std::string>& classes,
                                        const std::vector<LabeledPrediction>& points) {
    EvaluationResult r;
    r.confusion.labels = classes;
    r.confusion.counts.assign(classes.size(), std::vector<long>(classes.size() + 1, 0));
    auto index_of = [&](const std::string& label) -> std::size_t {
        auto it = std::find(classes.begin(), classes.end(), label);
        return static_cast<std::size_t>(it - classes.begin());
    };
    long correct = 0;
    for (const auto& p : points) {
        const auto g = index_of(p.gold);
        if (g == classes.size()) fail(ErrorCode::SchemaError, "gold label not among classes", p.id);
        auto c = index_of(p.result.predicted);
        if (c == classes.size() && p.result.predicted != kUnparsed)
            fail(ErrorCode::MalformedResponse, "prediction is not a known label", p.id);
        ++r.confusion.counts[g][c];
        if (p.result.correct) ++correct;
        r.per_point[p.id] = p.result;
    }
    r.accuracy = points.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(points.size());
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const long tp = r.confusion.counts[i][i];
        const long col = r.confusion.column_sum(i);
        const long row = r.confusion.row_sum(i);
        r.precision[classes[i]] = col == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(col);
        r.recall[classes[i]] = row == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(row);
    }
    return r;
}

struct EvalOptions {
    /// Concurrent gateway calls; 1 scores sequentially.
    std::size_t parallelism = 1;
};

namespace detail {

/// Runs fn(i) for i in [0, n) on up to `parallelism` threads. If several
/// calls throw, the exception of the lowest index is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t parallelism, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    auto run = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    if (parallelism <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) run(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> workers;
        for (std::size_t w = 0; w < std::min(parallelism, n); ++w)
            workers.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < n;) run(i);
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace detail

inline EvaluationResult evaluate_template(const PromptTemplate& t, const LabeledDataset& ds, ModelClient& model,
                                          const EvalOptions& opts = {}) {
    if (t.kshot) {
        for (const auto& x : ds.test)
            if (!t.kshot->per_test_point.contains(x.id))
                fail(ErrorCode::MissingKShot, "k-shot configuration does not cover test point", x.id);
    }
    std::vector<LabeledPrediction> points(ds.test.size());
    detail::parallel_for(ds.test.size(), opts.parallelism, [&](std::size_t i) {
        const auto& x = ds.test[i];
        ScoreResult s;
        try {
            s = model.score_labels(build_scoring_string(t, x, ds), ds.verbalizers);
        } catch (const Error& e) {
            fail(e.code(), e.message(), "point " + x.id + (e.detail().empty() ? "" : ": " + e.detail()));
        }
        points[i] = LabeledPrediction{x.id, x.label, PointResult{std::move(s.scores), s.predicted, s.predicted == x.label}};
    });
    return compute_metrics(ds.classes, points);
}

struct CustomPrediction {
    std::string text;
    std::string predicted;
    LabelScores scores;
    /// Raw model output, for generative models.
    std::optional<std::string> output;
};

inline void to_json(json& j, const CustomPrediction& p) {
    j = json{{"text", p.text}, {"predicted", p.predicted}, {"scores", p.scores}};
    j["output"] = p.output ? json(*p.output) : json(nullptr);
}

/// Scores unlabeled texts 0-shot (k-shot selection needs a gold label).
inline std::vector<CustomPrediction> test_custom(const PromptTemplate& t, const std::vector<std::string>& texts,
                                                 const LabeledDataset& ds, ModelClient& model,
                                                 ModelKind kind = ModelKind::Masked) {
    if (texts.empty()) fail(ErrorCode::InvalidArgument, "no texts to test");
    auto zero_shot = t;
    zero_shot.kshot.reset();
    std::vector<CustomPrediction> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        const auto prompt = fill_template(zero_shot, text);
        auto s = model.score_labels(prompt, ds.verbalizers);
        CustomPrediction p{text, s.predicted, std::move(s.scores), std::nullopt};
        if (kind == ModelKind::Generative) p.output = model.generate(prompt, &ds.verbalizers);
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace promptaid
