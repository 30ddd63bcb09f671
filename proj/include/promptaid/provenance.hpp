#pragma once

// Template version graph, leaderboard, and session persistence.

#include "promptaid/core.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <sstream>
#include <thread>

namespace promptaid {

inline constexpr int kSessionSchemaVersion = 1;

struct ProvenanceEdge {
    std::string parent;
    std::string child;
    Origin type = Origin::Keyword;
    bool operator==(const ProvenanceEdge&) const = default;
};

inline void to_json(json& j, const ProvenanceEdge& e) {
    j = json{{"parent", e.parent}, {"child", e.child}, {"type", to_string(e.type)}};
}

struct LeaderboardEntry {
    std::string root;
    std::optional<double> best_accuracy;
    /// the chain's versions in creation order, root first
    std::vector<std::string> versions;
    bool operator==(const LeaderboardEntry&) const = default;
};

inline void to_json(json& j, const LeaderboardEntry& e) {
    j = json{{"root", e.root}, {"versions", e.versions}};
    j["best_accuracy"] = e.best_accuracy ? json(*e.best_accuracy) : json(nullptr);
}

/// Single-parent version forest. Edges are implied by each node's parent_id.
class ProvenanceGraph {
public:
    /// Adds `child` under `parent` (or as a new root when absent).
    void record_version(const std::optional<std::string>& parent, PromptTemplate child) {
        if (nodes_.contains(child.id)) fail(ErrorCode::DuplicateId, "template id already exists", child.id);
        if (child.parent_id != parent) fail(ErrorCode::InvalidArgument, "child parent_id disagrees with parent", child.id);
        if (is_root_origin(child.origin) == parent.has_value())
            fail(ErrorCode::InvalidTemplate, "seed/manual templates have no parent; derived templates need one", child.id);
        if (parent) {
            if (!nodes_.contains(*parent)) fail(ErrorCode::UnknownParent, "parent template does not exist", *parent);
            for (std::optional<std::string> cur = parent; cur; cur = nodes_.at(*cur).parent_id)
                if (*cur == child.id) fail(ErrorCode::CycleError, "edge would create a cycle", child.id);
        }
        order_.push_back(child.id);
        nodes_.emplace(child.id, std::move(child));
    }

    /// Removes `id` and all of its descendants; returns the removed ids in
    /// creation order.
    std::vector<std::string> remove(const std::string& id) {
        if (!nodes_.contains(id)) fail(ErrorCode::NotFound, "no such template", id);
        std::set<std::string> doomed{id};
        // creation order guarantees parents precede children
        for (const auto& n : order_) {
            const auto& p = nodes_.at(n).parent_id;
            if (p && doomed.contains(*p)) doomed.insert(n);
        }
        std::vector<std::string> removed;
        std::vector<std::string> kept;
        for (auto& n : order_) (doomed.contains(n) ? removed : kept).push_back(n);
        for (const auto& n : removed) nodes_.erase(n);
        order_ = std::move(kept);
        return removed;
    }

    bool contains(const std::string& id) const { return nodes_.contains(id); }
    std::size_t size() const noexcept { return order_.size(); }

    const PromptTemplate& get(const std::string& id) const {
        auto it = nodes_.find(id);
        if (it == nodes_.end()) fail(ErrorCode::NotFound, "no such template", id);
        return it->second;
    }
    PromptTemplate& get_mut(const std::string& id) {
        auto it = nodes_.find(id);
        if (it == nodes_.end()) fail(ErrorCode::NotFound, "no such template", id);
        return it->second;
    }

    const std::vector<std::string>& creation_order() const noexcept { return order_; }

    std::vector<PromptTemplate> templates() const {
        std::vector<PromptTemplate> out;
        for (const auto& id : order_) out.push_back(nodes_.at(id));
        return out;
    }

    std::vector<ProvenanceEdge> edges() const {
        std::vector<ProvenanceEdge> out;
        for (const auto& id : order_) {
            const auto& t = nodes_.at(id);
            if (t.parent_id) out.push_back({*t.parent_id, id, t.origin});
        }
        return out;
    }

    std::string root_of(const std::string& id) const {
        std::string cur = get(id).id;
        while (const auto& p = nodes_.at(cur).parent_id) cur = *p;
        return cur;
    }

    /// root id -> versions of its chain in creation order
    std::map<std::string, std::vector<std::string>> chains() const {
        std::map<std::string, std::vector<std::string>> out;
        for (const auto& id : order_) out[root_of(id)].push_back(id);
        return out;
    }

    /// Chains by best evaluated accuracy, descending; chains without any
    /// evaluation last; ties by root id.
    std::vector<LeaderboardEntry> leaderboard() const {
        std::vector<LeaderboardEntry> out;
        for (auto& [root, versions] : chains()) {
            LeaderboardEntry e{root, std::nullopt, versions};
            for (const auto& v : versions)
                if (const auto& ev = nodes_.at(v).cached_eval)
                    e.best_accuracy = std::max(e.best_accuracy.value_or(ev->accuracy), ev->accuracy);
            out.push_back(std::move(e));
        }
        std::stable_sort(out.begin(), out.end(), [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
            if (a.best_accuracy.has_value() != b.best_accuracy.has_value()) return a.best_accuracy.has_value();
            if (a.best_accuracy && *a.best_accuracy != *b.best_accuracy) return *a.best_accuracy > *b.best_accuracy;
            return a.root < b.root;
        });
        return out;
    }

    bool operator==(const ProvenanceGraph&) const = default;

private:
    std::map<std::string, PromptTemplate> nodes_;
    std::vector<std::string> order_;
};

/// Key for stored evaluations and sensitivity estimates.
struct RunKey {
    std::string template_id;
    std::string dataset;
    std::string model;
    auto operator<=>(const RunKey&) const = default;
};

struct SessionState {
    std::string dataset;
    std::string model;
    /// Templates carry cached_eval for the active (dataset, model) pair.
    ProvenanceGraph graph;
    std::map<RunKey, EvaluationResult> evaluations;
    std::map<RunKey, SensitivityEstimate> sensitivities;
    std::vector<std::uint64_t> seeds_used;
    long next_id = 1;

    bool operator==(const SessionState&) const = default;

    std::string fresh_id() { return "P" + std::to_string(next_id++); }

    RunKey key(const std::string& template_id) const { return {template_id, dataset, model}; }

    void set_evaluation(const std::string& template_id, EvaluationResult r) {
        graph.get_mut(template_id).cached_eval = r;
        evaluations[key(template_id)] = std::move(r);
    }

    /// Switch the active pair and refresh cached evaluations from the store.
    void select(std::string dataset_name, std::string model_id) {
        dataset = std::move(dataset_name);
        model = std::move(model_id);
        sync_cached();
    }

    void sync_cached() {
        for (const auto& id : graph.creation_order()) {
            auto it = evaluations.find(key(id));
            graph.get_mut(id).cached_eval = it == evaluations.end() ? std::nullopt : std::optional(it->second);
        }
    }

    /// Removes the subtree rooted at `id` together with its stored runs.
    std::vector<std::string> remove(const std::string& id) {
        auto removed = graph.remove(id);
        const std::set<std::string> gone(removed.begin(), removed.end());
        std::erase_if(evaluations, [&](const auto& kv) { return gone.contains(kv.first.template_id); });
        std::erase_if(sensitivities, [&](const auto& kv) { return gone.contains(kv.first.template_id); });
        return removed;
    }
};

inline json session_to_json(const SessionState& s) {
    json templates = json::array();
    for (auto t : s.graph.templates()) {
        t.cached_eval.reset();
        templates.push_back(t);
    }
    json evals = json::array();
    for (const auto& [k, r] : s.evaluations)
        evals.push_back({{"template", k.template_id}, {"dataset", k.dataset}, {"model", k.model}, {"result", r}});
    json sens = json::array();
    for (const auto& [k, e] : s.sensitivities)
        sens.push_back({{"template", k.template_id}, {"dataset", k.dataset}, {"model", k.model}, {"estimate", e}});
    return json{{"schema_version", kSessionSchemaVersion},
                {"dataset", s.dataset},
                {"model", s.model},
                {"next_id", s.next_id},
                {"templates", templates},
                {"evaluations", evals},
                {"sensitivities", sens},
                {"seeds_used", s.seeds_used}};
}

inline SessionState session_from_json(const json& j) {
    if (!j.is_object() || !j.contains("schema_version") || j.at("schema_version") != kSessionSchemaVersion)
        fail(ErrorCode::SchemaVersionMismatch, "unsupported session schema_version",
             j.is_object() && j.contains("schema_version") ? j.at("schema_version").dump() : "missing");
    SessionState s;
    try {
        s.dataset = j.at("dataset").get<std::string>();
        s.model = j.at("model").get<std::string>();
        s.next_id = j.at("next_id").get<long>();
        for (const auto& tj : j.at("templates")) {
            auto t = tj.get<PromptTemplate>();
            const auto parent = t.parent_id;
            s.graph.record_version(parent, std::move(t));
        }
        for (const auto& e : j.at("evaluations")) {
            RunKey k{e.at("template"), e.at("dataset"), e.at("model")};
            if (!s.graph.contains(k.template_id)) fail(ErrorCode::SchemaError, "evaluation of unknown template", k.template_id);
            s.evaluations[k] = e.at("result").get<EvaluationResult>();
        }
        for (const auto& e : j.at("sensitivities")) {
            RunKey k{e.at("template"), e.at("dataset"), e.at("model")};
            if (!s.graph.contains(k.template_id)) fail(ErrorCode::SchemaError, "estimate of unknown template", k.template_id);
            s.sensitivities[k] = e.at("estimate").get<SensitivityEstimate>();
        }
        s.seeds_used = j.at("seeds_used").get<std::vector<std::uint64_t>>();
    } catch (const json::exception& e) {
        fail(ErrorCode::SchemaError, std::string("malformed session: ") + e.what());
    }
    s.sync_cached();
    return s;
}

/// Writes to a private temp file in the same directory, then renames over
/// `path`, so readers only ever see a complete document.
inline void save_session(const SessionState& s, const std::filesystem::path& path) {
    static std::atomic<unsigned long> counter{0};
    const auto body = session_to_json(s).dump(2) + "\n";
    std::ostringstream suffix;
    suffix << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "." << counter.fetch_add(1);
    auto tmp = path;
    tmp += suffix.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::IoError, "cannot write session file", tmp.string());
        out << body;
        out.flush();
        if (!out) fail(ErrorCode::IoError, "short write to session file", tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(ErrorCode::IoError, "cannot replace session file", path.string());
    }
}

inline SessionState load_session(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot read session file", path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    json j;
    try {
        j = json::parse(buf.str());
    } catch (const json::exception&) {
        fail(ErrorCode::SchemaVersionMismatch, "session file is not a complete JSON document", path.string());
    }
    return session_from_json(j);
}

/// Single-writer wrapper: readers get a consistent snapshot, writers are
/// serialized.
class SessionStore {
public:
    explicit SessionStore(SessionState s = {}) : state_(std::move(s)) {}

    SessionState snapshot() const {
        std::shared_lock lock(mutex_);
        return state_;
    }

    template <typename Fn>
    auto read(Fn&& fn) const {
        std::shared_lock lock(mutex_);
        return fn(static_cast<const SessionState&>(state_));
    }

    template <typename Fn>
    auto write(Fn&& fn) {
        std::unique_lock lock(mutex_);
        return fn(state_);
    }

private:
    mutable std::shared_mutex mutex_;
    SessionState state_;
};

} // namespace promptaid
