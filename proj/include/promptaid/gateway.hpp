#pragma once

// The only place that talks to language models. A ModelClient scores labels,
// generates text and proposes paraphrases; it is backed either by a remote
// HTTP service or by a scripted fixture that is a pure function of its input.

#include "promptaid/core.hpp"
#include "promptaid/http_client.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <variant>

namespace promptaid {

enum class ModelKind { Masked, Generative };

inline constexpr std::string_view kDefaultParaphraseInstruction =
    "Paraphrase the following instruction {n} different ways. Reply with one paraphrase per line "
    "and nothing else.\nInstruction: {seed}";

struct MockBackend {
    std::filesystem::path fixture_path;
};

struct RemoteBackend {
    RemoteEndpoint endpoint;
    /// {n} and {seed} are substituted.
    std::string paraphrase_instruction{kDefaultParaphraseInstruction};
};

struct ModelSpec {
    std::string id;
    ModelKind kind = ModelKind::Masked;
    std::variant<MockBackend, RemoteBackend> backend;
    int max_new_tokens = 16;
};

inline void from_json(const json& j, ModelSpec& m) {
    j.at("id").get_to(m.id);
    const auto kind = j.value("kind", std::string("masked"));
    if (kind == "masked") m.kind = ModelKind::Masked;
    else if (kind == "generative") m.kind = ModelKind::Generative;
    else fail(ErrorCode::ConfigError, "unknown model kind", kind);
    m.max_new_tokens = j.value("max_new_tokens", 16);
    const auto& b = j.at("backend");
    const auto type = b.at("type").get<std::string>();
    if (type == "mock") {
        m.backend = MockBackend{b.at("fixture").get<std::string>()};
    } else if (type == "remote") {
        RemoteBackend r{b.get<RemoteEndpoint>()};
        r.paraphrase_instruction = b.value("paraphrase_instruction", std::string(kDefaultParaphraseInstruction));
        m.backend = std::move(r);
    } else {
        fail(ErrorCode::ConfigError, "unknown model backend type", type);
    }
}

inline json model_summary(const ModelSpec& m) {
    return json{{"id", m.id},
                {"kind", m.kind == ModelKind::Masked ? "masked" : "generative"},
                {"backend", std::holds_alternative<MockBackend>(m.backend) ? "mock" : "remote"},
                {"max_new_tokens", m.max_new_tokens}};
}

struct ScoreResult {
    LabelScores scores;
    /// A label, or UNPARSED.
    std::string predicted;
};

/// argmax over labels; ties go to the lexicographically smallest label.
inline std::string argmax_label(const LabelScores& scores) {
    std::string best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const auto& [label, s] : scores) {
        if (best.empty() || s > best_score) {
            best = label;
            best_score = s;
        }
    }
    return best;
}

class ModelClient {
public:
    virtual ~ModelClient() = default;

    virtual ScoreResult score_labels(const std::string& filled_prompt, const Verbalizers& verbalizers) = 0;
    /// `verbalizers` lets the scripted backend fall back to a label word.
    virtual std::string generate(const std::string& prompt, const Verbalizers* verbalizers = nullptr) = 0;
    /// Raw candidates, before any distance filtering.
    virtual std::vector<std::string> paraphrase_candidates(const std::string& seed, std::size_t n) = 0;

    /// Number of backend requests issued so far (retries included).
    std::size_t call_count() const noexcept { return calls_.load(); }

protected:
    std::atomic<std::size_t> calls_{0};
};

// ---------------------------------------------------------------------------
// Scripted backend

enum class Anchor { Anywhere, Start, End };

struct MockRule {
    std::string pattern;
    Anchor anchor = Anchor::Anywhere;
    /// Extra substrings that must all occur somewhere in the prompt.
    std::vector<std::string> also;
    /// When set, the prompt must have exactly this many lines.
    std::optional<int> lines;
    LabelScores scores;

    bool matches(std::string_view prompt) const {
        const bool hit = anchor == Anchor::Start ? prompt.starts_with(pattern)
                         : anchor == Anchor::End ? prompt.ends_with(pattern)
                                                 : prompt.find(pattern) != std::string_view::npos;
        if (!hit) return false;
        for (const auto& s : also)
            if (prompt.find(s) == std::string_view::npos) return false;
        if (lines && static_cast<int>(std::count(prompt.begin(), prompt.end(), '\n')) + 1 != *lines) return false;
        return true;
    }
};

struct MockFixture {
    std::vector<MockRule> rules;
    LabelScores default_scores;
    std::map<std::string, std::vector<std::string>> paraphrase_bank;
    std::map<std::string, std::string> generations;
};

inline MockFixture mock_fixture_from_json(const json& j) {
    MockFixture f;
    try {
        for (const auto& r : j.value("rules", json::array())) {
            MockRule rule;
            r.at("pattern").get_to(rule.pattern);
            const auto anchor = r.value("anchor", std::string("anywhere"));
            if (anchor == "anywhere") rule.anchor = Anchor::Anywhere;
            else if (anchor == "start") rule.anchor = Anchor::Start;
            else if (anchor == "end") rule.anchor = Anchor::End;
            else fail(ErrorCode::SchemaError, "unknown rule anchor", anchor);
            if (r.contains("also")) r.at("also").get_to(rule.also);
            if (r.contains("lines")) rule.lines = r.at("lines").get<int>();
            r.at("scores").get_to(rule.scores);
            f.rules.push_back(std::move(rule));
        }
        j.at("default_scores").get_to(f.default_scores);
        if (j.contains("paraphrase_bank")) j.at("paraphrase_bank").get_to(f.paraphrase_bank);
        if (j.contains("generations")) j.at("generations").get_to(f.generations);
    } catch (const json::exception& e) {
        fail(ErrorCode::SchemaError, "bad mock fixture: " + std::string(e.what()));
    }
    return f;
}

inline MockFixture load_mock_fixture(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::MissingFile, "cannot open mock fixture", path.string());
    try {
        return mock_fixture_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        fail(ErrorCode::SchemaError, "mock fixture is not valid JSON: " + std::string(e.what()), path.string());
    }
}

/// Lock-free after construction: every call is a lookup in immutable data.
class MockModelClient final : public ModelClient {
public:
    explicit MockModelClient(MockFixture fixture) : fixture_(std::move(fixture)) {}

    const MockFixture& fixture() const noexcept { return fixture_; }

    ScoreResult score_labels(const std::string& prompt, const Verbalizers& verbalizers) override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        if (verbalizers.empty()) fail(ErrorCode::InvalidArgument, "no labels to score");
        const LabelScores* source = &fixture_.default_scores;
        for (const auto& r : fixture_.rules) {
            if (r.matches(prompt)) {
                source = &r.scores;
                break;
            }
        }
        ScoreResult out;
        for (const auto& [label, words] : verbalizers) {
            auto it = source->find(label);
            if (it == source->end() || !std::isfinite(it->second))
                fail(ErrorCode::SchemaError, "mock fixture scores do not cover label", label);
            out.scores.emplace(label, it->second);
        }
        out.predicted = argmax_label(out.scores);
        return out;
    }

    std::string generate(const std::string& prompt, const Verbalizers* verbalizers) override {
        const std::string* best = nullptr;
        const std::string* best_pattern = nullptr;
        for (const auto& [pattern, text] : fixture_.generations) {
            if (prompt.find(pattern) == std::string::npos) continue;
            if (!best_pattern || pattern.size() > best_pattern->size()) {
                best_pattern = &pattern;
                best = &text;
            }
        }
        if (best) {
            calls_.fetch_add(1, std::memory_order_relaxed);
            return *best;
        }
        Verbalizers fallback;
        if (!verbalizers) {
            for (const auto& [label, s] : fixture_.default_scores) fallback[label] = {label};
            verbalizers = &fallback;
        }
        const auto predicted = score_labels(prompt, *verbalizers).predicted;
        return verbalizers->at(predicted).front();
    }

    std::vector<std::string> paraphrase_candidates(const std::string& seed, std::size_t n) override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        if (n == 0) fail(ErrorCode::InvalidArgument, "n must be at least 1");
        auto it = fixture_.paraphrase_bank.find(seed);
        if (it == fixture_.paraphrase_bank.end() || it->second.empty())
            fail(ErrorCode::EmptyBank, "no paraphrases recorded for seed", seed);
        const auto take = std::min(n, it->second.size());
        return {it->second.begin(), it->second.begin() + static_cast<std::ptrdiff_t>(take)};
    }

private:
    MockFixture fixture_;
};

// ---------------------------------------------------------------------------
// Remote backend
//
//   POST /score    {"prompt", "labels", "verbalizers"} -> {"scores": {...}}
//   POST /generate {"prompt", "max_new_tokens"}        -> {"text": "..."}

/// Earliest case-insensitive verbalizer occurrence in `text` (longer word
/// wins at equal position); nullopt when nothing matches.
inline std::optional<std::string> match_verbalizer(std::string_view text, const Verbalizers& verbalizers) {
    auto lower = [](std::string_view s) {
        std::string o(s);
        for (auto& c : o) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return o;
    };
    const auto hay = lower(text);
    std::optional<std::string> best;
    std::size_t best_pos = std::string::npos, best_len = 0;
    for (const auto& [label, words] : verbalizers) {
        for (const auto& w : words) {
            const auto pos = hay.find(lower(w));
            if (pos == std::string::npos) continue;
            if (pos < best_pos || (pos == best_pos && w.size() > best_len)) {
                best = label;
                best_pos = pos;
                best_len = w.size();
            }
        }
    }
    return best;
}

/// Split a generated paraphrase list into candidates: one per non-empty
/// line, list markers ("1.", "2)", "-", "*") removed.
inline std::vector<std::string> split_candidate_lines(std::string_view text) {
    std::vector<std::string> out;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        std::size_t i = 0;
        auto skip_ws = [&] { while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i; };
        skip_ws();
        std::size_t digits = i;
        while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
        if (digits > i && digits < line.size() && (line[digits] == '.' || line[digits] == ')')) i = digits + 1;
        else if (i < line.size() && (line[i] == '-' || line[i] == '*')) ++i;
        skip_ws();
        auto end = line.size();
        while (end > i && std::isspace(static_cast<unsigned char>(line[end - 1]))) --end;
        if (end > i) out.push_back(line.substr(i, end - i));
    }
    return out;
}

class RemoteModelClient final : public ModelClient {
public:
    RemoteModelClient(ModelKind kind, RemoteBackend backend, int max_new_tokens)
        : kind_(kind), backend_(std::move(backend)), max_new_tokens_(max_new_tokens) {}

    ScoreResult score_labels(const std::string& prompt, const Verbalizers& verbalizers) override {
        if (verbalizers.empty()) fail(ErrorCode::InvalidArgument, "no labels to score");
        ScoreResult out;
        if (kind_ == ModelKind::Generative) {
            const auto text = generate(prompt, &verbalizers);
            const auto hit = match_verbalizer(text, verbalizers);
            for (const auto& [label, words] : verbalizers) out.scores[label] = hit && *hit == label ? 1.0 : 0.0;
            out.predicted = hit ? *hit : std::string(kUnparsed);
            return out;
        }
        std::vector<std::string> labels;
        for (const auto& [label, words] : verbalizers) labels.push_back(label);
        const auto reply = post_json(backend_.endpoint, "/score",
                                     json{{"prompt", prompt}, {"labels", labels}, {"verbalizers", verbalizers}}, &calls_);
        try {
            const auto& scores = reply.at("scores");
            for (const auto& label : labels) {
                const double s = scores.at(label).get<double>();
                if (!std::isfinite(s)) fail(ErrorCode::MalformedResponse, "non-finite score", label);
                out.scores[label] = s;
            }
        } catch (const json::exception& e) {
            fail(ErrorCode::MalformedResponse, "bad /score reply: " + std::string(e.what()), backend_.endpoint.base_url);
        }
        out.predicted = argmax_label(out.scores);
        return out;
    }

    std::string generate(const std::string& prompt, const Verbalizers*) override {
        const auto reply = post_json(backend_.endpoint, "/generate",
                                     json{{"prompt", prompt}, {"max_new_tokens", max_new_tokens_}}, &calls_);
        if (!reply.contains("text") || !reply["text"].is_string())
            fail(ErrorCode::MalformedResponse, "bad /generate reply", backend_.endpoint.base_url);
        return reply["text"].get<std::string>();
    }

    std::vector<std::string> paraphrase_candidates(const std::string& seed, std::size_t n) override {
        if (n == 0) fail(ErrorCode::InvalidArgument, "n must be at least 1");
        auto prompt = backend_.paraphrase_instruction;
        replace_all(prompt, "{n}", std::to_string(n));
        replace_all(prompt, "{seed}", seed);
        auto lines = split_candidate_lines(generate(prompt, nullptr));
        if (lines.size() > n) lines.resize(n);
        return lines;
    }

private:
    static void replace_all(std::string& s, std::string_view from, std::string_view to) {
        for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
            s.replace(pos, from.size(), to);
    }

    ModelKind kind_;
    RemoteBackend backend_;
    int max_new_tokens_;
};

/// `base` resolves a relative mock fixture path.
inline std::shared_ptr<ModelClient> make_model_client(const ModelSpec& spec, const std::filesystem::path& base = {}) {
    if (const auto* mock = std::get_if<MockBackend>(&spec.backend)) {
        auto path = mock->fixture_path;
        if (path.is_relative() && !base.empty()) path = base / path;
        return std::make_shared<MockModelClient>(load_mock_fixture(path));
    }
    return std::make_shared<RemoteModelClient>(spec.kind, std::get<RemoteBackend>(spec.backend), spec.max_new_tokens);
}

} // namespace promptaid
