#pragma once

// Dataset manifests and JSON-lines splits.
//
// A manifest is a JSON object:
//
//   {
//     "name": "ag_news",
//     "task_type": "topic classification",          (optional)
//     "classes": ["world", "sports", ...],
//     "verbalizers": {"world": ["world"], ...},
//     "train": "train.jsonl",                        (path or inline array)
//     "test":  "test.jsonl",                         (path or inline array)
//     "seed_templates": ["What label ...? [text]"]   (optional)
//   }
//
// Instead of "test", a manifest may give "test_source" + "test_size" +
// "seed"; the test split is then a stratified sample of the source (see
// stratified_sample). Relative paths resolve against the manifest directory.

#include "promptaid/core.hpp"
#include "promptaid/random.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace promptaid {

inline constexpr std::size_t kDefaultTestSize = 20;

/// Deterministic class-stratified sample of `n` points.
///
/// Each class keeps its points in source order and is shuffled (Fisher-Yates)
/// by a stream forked from `seed` with the class index as salt. Points are
/// then taken round-robin over `classes` in order, one per class per round,
/// skipping exhausted classes, until `n` are taken. The result lists points
/// in pick order.
inline std::vector<DataPoint> stratified_sample(const std::vector<DataPoint>& source,
                                                const std::vector<std::string>& classes,
                                                std::size_t n, std::uint64_t seed) {
    if (n > source.size())
        fail(ErrorCode::SchemaError, "test_size exceeds the test source",
             std::to_string(n) + " > " + std::to_string(source.size()));
    const SplitMix64 root(seed);
    std::vector<std::vector<std::size_t>> per_class(classes.size());
    for (std::size_t i = 0; i < source.size(); ++i) {
        auto it = std::find(classes.begin(), classes.end(), source[i].label);
        if (it == classes.end()) fail(ErrorCode::SchemaError, "unknown label in test source", source[i].label);
        per_class[static_cast<std::size_t>(it - classes.begin())].push_back(i);
    }
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        auto rng = root.fork(c);
        auto& v = per_class[c];
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
    }
    std::vector<DataPoint> out;
    out.reserve(n);
    for (std::size_t round = 0; out.size() < n; ++round) {
        for (const auto& bucket : per_class) {
            if (round < bucket.size() && out.size() < n) out.push_back(source[bucket[round]]);
        }
    }
    return out;
}

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::MissingFile, "cannot open file", path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<DataPoint> parse_jsonl(const std::string& content, const std::string& origin) {
    std::vector<DataPoint> rows;
    std::istringstream in(content);
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            rows.push_back(json::parse(line).get<DataPoint>());
        } catch (const json::exception& e) {
            fail(ErrorCode::SchemaError, "bad JSON-lines row: " + std::string(e.what()),
                 origin + ":" + std::to_string(lineno));
        }
    }
    return rows;
}

inline std::vector<DataPoint> read_split(const json& spec, const std::filesystem::path& base,
                                         const std::string& field) {
    if (spec.is_array()) {
        try {
            return spec.get<std::vector<DataPoint>>();
        } catch (const json::exception& e) {
            fail(ErrorCode::SchemaError, "bad inline split: " + std::string(e.what()), field);
        }
    }
    if (!spec.is_string()) fail(ErrorCode::SchemaError, "split must be a path or an array", field);
    auto path = std::filesystem::path(spec.get<std::string>());
    if (path.is_relative()) path = base / path;
    return parse_jsonl(read_file(path), path.string());
}

inline void validate_split(const LabeledDataset& ds, const std::vector<DataPoint>& split, const char* name) {
    std::unordered_set<std::string> ids;
    for (const auto& p : split) {
        if (p.id.empty()) fail(ErrorCode::SchemaError, std::string("empty id in ") + name + " split");
        if (!ids.insert(p.id).second) fail(ErrorCode::SchemaError, std::string("duplicate id in ") + name + " split", p.id);
        if (p.text.empty()) fail(ErrorCode::SchemaError, "empty text", p.id);
        if (!ds.has_class(p.label))
            fail(ErrorCode::SchemaError, "label not among classes: " + p.label, std::string(name) + ":" + p.id);
    }
}

} // namespace detail

/// Checks every dataset invariant; throws SchemaError / EmptyClass.
inline void validate_dataset(const LabeledDataset& ds) {
    if (ds.classes.empty()) fail(ErrorCode::SchemaError, "dataset has no classes", ds.name);
    std::set<std::string> seen;
    for (const auto& c : ds.classes) {
        if (c.empty()) fail(ErrorCode::SchemaError, "empty class name", ds.name);
        if (!seen.insert(c).second) fail(ErrorCode::SchemaError, "duplicate class", c);
    }
    std::map<std::string, std::string> owner;
    for (const auto& [label, words] : ds.verbalizers) {
        if (!ds.has_class(label)) fail(ErrorCode::SchemaError, "verbalizer for unknown label", label);
        if (words.empty()) fail(ErrorCode::SchemaError, "empty verbalizer list", label);
        for (const auto& w : words) {
            if (w.empty()) fail(ErrorCode::SchemaError, "empty verbalizer word", label);
            auto [it, inserted] = owner.emplace(detail::lower_ascii(w), label);
            if (!inserted && it->second != label)
                fail(ErrorCode::SchemaError, "verbalizer word shared by two labels", w);
        }
    }
    for (const auto& c : ds.classes)
        if (!ds.verbalizers.contains(c)) fail(ErrorCode::SchemaError, "class has no verbalizer", c);
    detail::validate_split(ds, ds.train, "train");
    detail::validate_split(ds, ds.test, "test");
    if (ds.test.empty()) fail(ErrorCode::SchemaError, "test split is empty", ds.name);
    for (const auto& c : ds.classes) {
        const bool any = std::any_of(ds.train.begin(), ds.train.end(), [&](const DataPoint& p) { return p.label == c; });
        if (!any) fail(ErrorCode::EmptyClass, "class has no train examples", c);
    }
    for (const auto& s : ds.seed_templates) validate_template_text(s.text);
}

/// Builds a dataset from a parsed manifest. `base` resolves relative split paths.
inline LabeledDataset dataset_from_manifest(const json& m, const std::filesystem::path& base) {
    LabeledDataset ds;
    try {
        m.at("name").get_to(ds.name);
        if (m.contains("task_type")) m.at("task_type").get_to(ds.task_type);
        m.at("classes").get_to(ds.classes);
        m.at("verbalizers").get_to(ds.verbalizers);
        if (m.contains("seed_templates")) {
            for (const auto& s : m.at("seed_templates")) ds.seed_templates.push_back({s.get<std::string>()});
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::SchemaError, "bad manifest: " + std::string(e.what()), base.string());
    }
    if (!m.contains("train")) fail(ErrorCode::SchemaError, "manifest has no train split", ds.name);
    ds.train = detail::read_split(m.at("train"), base, "train");
    if (m.contains("test")) {
        ds.test = detail::read_split(m.at("test"), base, "test");
    } else if (m.contains("test_source")) {
        auto source = detail::read_split(m.at("test_source"), base, "test_source");
        const auto n = m.value("test_size", kDefaultTestSize);
        const auto seed = m.value("seed", std::uint64_t{0});
        ds.test = stratified_sample(source, ds.classes, n, seed);
    } else {
        fail(ErrorCode::SchemaError, "manifest needs test or test_source", ds.name);
    }
    validate_dataset(ds);
    return ds;
}

inline LabeledDataset load_dataset(const std::filesystem::path& manifest_path) {
    const auto content = detail::read_file(manifest_path);
    json m;
    try {
        m = json::parse(content);
    } catch (const json::exception& e) {
        fail(ErrorCode::SchemaError, "manifest is not valid JSON: " + std::string(e.what()), manifest_path.string());
    }
    return dataset_from_manifest(m, manifest_path.parent_path());
}

/// Self-contained manifest with inline splits; load_dataset-compatible.
inline json dataset_to_json(const LabeledDataset& ds) {
    json seeds = json::array();
    for (const auto& s : ds.seed_templates) seeds.push_back(s.text);
    return json{{"name", ds.name},         {"task_type", ds.task_type}, {"classes", ds.classes},
                {"verbalizers", ds.verbalizers}, {"train", ds.train},   {"test", ds.test},
                {"seed_templates", seeds}};
}

} // namespace promptaid
