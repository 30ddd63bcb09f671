#pragma once

// Domain vocabulary shared by every module: data points, datasets,
// templates, evaluation results and sensitivity estimates, plus their JSON
// representations.

#include "promptaid/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace promptaid {

using json = nlohmann::json;

inline constexpr std::string_view kPlaceholder = "[text]";
/// Prediction recorded when a model output matches no verbalizer.
inline constexpr std::string_view kUnparsed = "UNPARSED";

using Verbalizers = std::map<std::string, std::vector<std::string>>;
using LabelScores = std::map<std::string, double>;

struct DataPoint {
    std::string id;
    std::string text;
    std::string label;

    bool operator==(const DataPoint&) const = default;
};

struct SeedTemplate {
    std::string text;
    bool operator==(const SeedTemplate&) const = default;
};

struct LabeledDataset {
    std::string name;
    std::string task_type = "classification";
    std::vector<std::string> classes;
    Verbalizers verbalizers;
    std::vector<DataPoint> train;
    std::vector<DataPoint> test;
    std::vector<SeedTemplate> seed_templates;

    bool operator==(const LabeledDataset&) const = default;

    const DataPoint* find_train(std::string_view id) const {
        auto it = std::find_if(train.begin(), train.end(), [&](const DataPoint& p) { return p.id == id; });
        return it == train.end() ? nullptr : &*it;
    }
    const DataPoint* find_test(std::string_view id) const {
        auto it = std::find_if(test.begin(), test.end(), [&](const DataPoint& p) { return p.id == id; });
        return it == test.end() ? nullptr : &*it;
    }
    bool has_class(std::string_view label) const {
        return std::find(classes.begin(), classes.end(), label) != classes.end();
    }
    /// First verbalizer word of a label; used when rendering k-shot examples.
    const std::string& label_word(const std::string& label) const {
        auto it = verbalizers.find(label);
        if (it == verbalizers.end() || it->second.empty())
            fail(ErrorCode::SchemaError, "label has no verbalizer", label);
        return it->second.front();
    }
};

enum class Origin { Seed, Manual, Keyword, Paraphrase, KShot };

constexpr std::string_view to_string(Origin o) noexcept {
    switch (o) {
    case Origin::Seed: return "seed";
    case Origin::Manual: return "manual";
    case Origin::Keyword: return "keyword";
    case Origin::Paraphrase: return "paraphrase";
    case Origin::KShot: return "kshot";
    }
    return "seed";
}

inline Origin origin_from_string(std::string_view s) {
    if (s == "seed") return Origin::Seed;
    if (s == "manual") return Origin::Manual;
    if (s == "keyword") return Origin::Keyword;
    if (s == "paraphrase") return Origin::Paraphrase;
    if (s == "kshot") return Origin::KShot;
    fail(ErrorCode::SchemaError, "unknown template origin", std::string(s));
}

constexpr bool is_root_origin(Origin o) noexcept { return o == Origin::Seed || o == Origin::Manual; }

struct KShotConfig {
    int k = 1;
    /// test point id -> train ids, in prompt order
    std::map<std::string, std::vector<std::string>> per_test_point;

    bool operator==(const KShotConfig&) const = default;
};

struct PointResult {
    LabelScores scores;
    std::string predicted;
    bool correct = false;

    bool operator==(const PointResult&) const = default;
};

/// Rows are gold labels in class order; columns are the class labels
/// followed by UNPARSED.
struct ConfusionMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<long>> counts;

    bool operator==(const ConfusionMatrix&) const = default;

    std::size_t unparsed_column() const noexcept { return labels.size(); }
    long row_sum(std::size_t r) const {
        long s = 0;
        for (long c : counts.at(r)) s += c;
        return s;
    }
    long column_sum(std::size_t c) const {
        long s = 0;
        for (const auto& row : counts) s += row.at(c);
        return s;
    }
    long trace() const {
        long s = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) s += counts[i][i];
        return s;
    }
    long total() const {
        long s = 0;
        for (std::size_t r = 0; r < counts.size(); ++r) s += row_sum(r);
        return s;
    }
};

struct EvaluationResult {
    std::map<std::string, PointResult> per_point;
    double accuracy = 0.0;
    std::map<std::string, double> precision;
    std::map<std::string, double> recall;
    ConfusionMatrix confusion;

    bool operator==(const EvaluationResult&) const = default;
};

struct PromptTemplate {
    std::string id;
    std::string text;
    Origin origin = Origin::Manual;
    std::optional<std::string> parent_id;
    std::optional<KShotConfig> kshot;
    std::optional<EvaluationResult> cached_eval;

    bool operator==(const PromptTemplate&) const = default;
};

struct SensitivityEstimate {
    /// Absent when no variant of that kind could be produced.
    std::optional<double> keyword_avg;
    std::optional<double> paraphrase_avg;
    int samples_per_type = 0;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, double>> keyword_samples;
    std::vector<std::pair<std::string, double>> paraphrase_samples;

    bool operator==(const SensitivityEstimate&) const = default;
};

// ---------------------------------------------------------------------------
// Template text helpers

namespace detail {
inline std::string lower_ascii(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}
} // namespace detail


inline std::size_t count_placeholders(std::string_view text) noexcept {
    std::size_t n = 0;
    for (auto pos = text.find(kPlaceholder); pos != std::string_view::npos;
         pos = text.find(kPlaceholder, pos + kPlaceholder.size()))
        ++n;
    return n;
}

inline void validate_template_text(std::string_view text) {
    const auto n = count_placeholders(text);
    if (n != 1)
        fail(ErrorCode::InvalidTemplate,
             "template must contain exactly one [text] placeholder",
             "found " + std::to_string(n));
}

inline PromptTemplate make_template(std::string id, std::string text, Origin origin = Origin::Manual,
                                    std::optional<std::string> parent_id = std::nullopt) {
    validate_template_text(text);
    if (is_root_origin(origin) == parent_id.has_value())
        fail(ErrorCode::InvalidTemplate, "seed/manual templates have no parent; derived templates need one", id);
    return PromptTemplate{std::move(id), std::move(text), origin, std::move(parent_id), std::nullopt, std::nullopt};
}

/// Replace the `[text]` placeholder with `x` verbatim.
inline std::string fill_template(const PromptTemplate& t, std::string_view x) {
    std::string out = t.text;
    const auto pos = out.find(kPlaceholder);
    if (pos == std::string::npos)
        fail(ErrorCode::InvalidTemplate, "template has no [text] placeholder", t.id);
    out.replace(pos, kPlaceholder.size(), x);
    return out;
}

/// True when the placeholder is the first non-whitespace token.
inline bool is_text_prefixed(const PromptTemplate& t) noexcept {
    std::string_view s = t.text;
    std::size_t i = 0;
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    return s.substr(i).starts_with(kPlaceholder);
}

/// Template text without the placeholder, whitespace collapsed and trimmed.
inline std::string strip_placeholder(std::string_view text) {
    std::string raw(text);
    if (auto pos = raw.find(kPlaceholder); pos != std::string::npos) raw.erase(pos, kPlaceholder.size());
    std::string out;
    bool pending_space = false;
    for (char c : raw) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(c);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(json& j, const DataPoint& p) { j = json{{"id", p.id}, {"text", p.text}, {"label", p.label}}; }
inline void from_json(const json& j, DataPoint& p) {
    j.at("id").get_to(p.id);
    j.at("text").get_to(p.text);
    j.at("label").get_to(p.label);
}

inline void to_json(json& j, const KShotConfig& k) { j = json{{"k", k.k}, {"per_test_point", k.per_test_point}}; }
inline void from_json(const json& j, KShotConfig& k) {
    j.at("k").get_to(k.k);
    j.at("per_test_point").get_to(k.per_test_point);
}

inline void to_json(json& j, const PointResult& r) {
    j = json{{"scores", r.scores}, {"predicted", r.predicted}, {"correct", r.correct}};
}
inline void from_json(const json& j, PointResult& r) {
    j.at("scores").get_to(r.scores);
    j.at("predicted").get_to(r.predicted);
    j.at("correct").get_to(r.correct);
}

inline void to_json(json& j, const ConfusionMatrix& m) {
    auto columns = m.labels;
    columns.emplace_back(kUnparsed);
    j = json{{"labels", m.labels}, {"columns", columns}, {"counts", m.counts}};
}
inline void from_json(const json& j, ConfusionMatrix& m) {
    j.at("labels").get_to(m.labels);
    j.at("counts").get_to(m.counts);
}

inline void to_json(json& j, const EvaluationResult& e) {
    j = json{{"per_point", e.per_point},
             {"accuracy", e.accuracy},
             {"precision", e.precision},
             {"recall", e.recall},
             {"confusion", e.confusion}};
}
inline void from_json(const json& j, EvaluationResult& e) {
    j.at("per_point").get_to(e.per_point);
    j.at("accuracy").get_to(e.accuracy);
    j.at("precision").get_to(e.precision);
    j.at("recall").get_to(e.recall);
    j.at("confusion").get_to(e.confusion);
}

inline void to_json(json& j, const PromptTemplate& t) {
    j = json{{"id", t.id}, {"text", t.text}, {"origin", to_string(t.origin)}};
    j["parent_id"] = t.parent_id ? json(*t.parent_id) : json(nullptr);
    j["kshot"] = t.kshot ? json(*t.kshot) : json(nullptr);
    j["cached_eval"] = t.cached_eval ? json(*t.cached_eval) : json(nullptr);
}
inline void from_json(const json& j, PromptTemplate& t) {
    j.at("id").get_to(t.id);
    j.at("text").get_to(t.text);
    t.origin = origin_from_string(j.at("origin").get<std::string>());
    t.parent_id.reset();
    t.kshot.reset();
    t.cached_eval.reset();
    if (j.contains("parent_id") && !j["parent_id"].is_null()) t.parent_id = j["parent_id"].get<std::string>();
    if (j.contains("kshot") && !j["kshot"].is_null()) t.kshot = j["kshot"].get<KShotConfig>();
    if (j.contains("cached_eval") && !j["cached_eval"].is_null())
        t.cached_eval = j["cached_eval"].get<EvaluationResult>();
}

inline void to_json(json& j, const SensitivityEstimate& s) {
    auto samples = [](const auto& v) {
        json a = json::array();
        for (const auto& [text, acc] : v) a.push_back(json{{"text", text}, {"accuracy", acc}});
        return a;
    };
    j = json{{"keyword_avg", s.keyword_avg ? json(*s.keyword_avg) : json(nullptr)},
             {"paraphrase_avg", s.paraphrase_avg ? json(*s.paraphrase_avg) : json(nullptr)},
             {"samples_per_type", s.samples_per_type},
             {"seed", s.seed},
             {"keyword_samples", samples(s.keyword_samples)},
             {"paraphrase_samples", samples(s.paraphrase_samples)}};
}
inline void from_json(const json& j, SensitivityEstimate& s) {
    s.keyword_avg.reset();
    s.paraphrase_avg.reset();
    if (!j.at("keyword_avg").is_null()) s.keyword_avg = j["keyword_avg"].get<double>();
    if (!j.at("paraphrase_avg").is_null()) s.paraphrase_avg = j["paraphrase_avg"].get<double>();
    j.at("samples_per_type").get_to(s.samples_per_type);
    j.at("seed").get_to(s.seed);
    auto read = [](const json& a, auto& out) {
        out.clear();
        for (const auto& e : a) out.emplace_back(e.at("text").get<std::string>(), e.at("accuracy").get<double>());
    };
    read(j.at("keyword_samples"), s.keyword_samples);
    read(j.at("paraphrase_samples"), s.paraphrase_samples);
}

} // namespace promptaid
