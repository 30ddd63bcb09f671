#pragma once

// Static session report: leaderboard, provenance and metrics as JSON, plus an
// SVG scatter of canvas positions.

#include "promptaid/workbench.hpp"

#include <cstdio>

namespace promptaid {

namespace detail {

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

} // namespace detail

/// Canvas scatter: x is the t-SNE position, y is accuracy (top = 1).
inline std::string canvas_svg(const std::vector<CanvasPoint>& points, const ProvenanceGraph& graph) {
    constexpr double w = 640, h = 400, pad = 40;
    auto px = [&](double x) { return pad + x * (w - 2 * pad); };
    auto py = [&](double y) { return h - pad - y * (h - 2 * pad); };
    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
    s += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
    s += "<line x1=\"" + detail::fmt(pad) + "\" y1=\"" + detail::fmt(h - pad) + "\" x2=\"" + detail::fmt(w - pad) +
         "\" y2=\"" + detail::fmt(h - pad) + "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + detail::fmt(pad) + "\" y1=\"" + detail::fmt(pad) + "\" x2=\"" + detail::fmt(pad) + "\" y2=\"" +
         detail::fmt(h - pad) + "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 10; tick += 2) {
        const double y = tick / 10.0;
        s += "<text x=\"8\" y=\"" + detail::fmt(py(y) + 4) + "\" font-size=\"10\">" + detail::fmt(y) + "</text>\n";
    }
    std::map<std::string, const CanvasPoint*> by_id;
    for (const auto& p : points) by_id[p.id] = &p;
    for (const auto& e : graph.edges()) {
        auto a = by_id.find(e.parent), b = by_id.find(e.child);
        if (a == by_id.end() || b == by_id.end()) continue;
        s += "<line class=\"" + std::string(to_string(e.type)) + "\" x1=\"" + detail::fmt(px(a->second->x)) + "\" y1=\"" +
             detail::fmt(py(a->second->y)) + "\" x2=\"" + detail::fmt(px(b->second->x)) + "\" y2=\"" +
             detail::fmt(py(b->second->y)) + "\" stroke=\"gray\"/>\n";
    }
    for (const auto& p : points) {
        const auto& t = graph.get(p.id);
        s += "<circle cx=\"" + detail::fmt(px(p.x)) + "\" cy=\"" + detail::fmt(py(p.y)) + "\" r=\"6\" fill=\"" +
             (p.text_prefixed ? "#e6a700" : "#5b2c83") + "\"><title>" + detail::xml_escape(p.id + ": " + t.text) +
             " (" + detail::fmt(p.y) + ")</title></circle>\n";
        s += "<text x=\"" + detail::fmt(px(p.x) + 8) + "\" y=\"" + detail::fmt(py(p.y) - 8) + "\" font-size=\"10\">" +
             detail::xml_escape(p.id) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

inline json session_metrics(const SessionState& s) {
    json out = json::array();
    for (const auto& [k, r] : s.evaluations)
        out.push_back(json{{"template", k.template_id},
                           {"dataset", k.dataset},
                           {"model", k.model},
                           {"accuracy", r.accuracy},
                           {"precision", r.precision},
                           {"recall", r.recall},
                           {"confusion", r.confusion}});
    return out;
}

/// Writes leaderboard.json, provenance.json, metrics.json and canvas.svg
/// into `out_dir`; returns the written paths.
inline std::vector<std::filesystem::path> write_report(const SessionState& s, const Embedder& embedder,
                                                       const std::filesystem::path& out_dir, std::uint64_t seed) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create report directory", out_dir.string());
    std::vector<PromptTemplate> evaluated;
    for (const auto& t : s.graph.templates())
        if (t.cached_eval) evaluated.push_back(t);
    const auto points = canvas_positions(evaluated, embedder, seed);

    json templates = json::array();
    for (const auto& t : s.graph.templates()) templates.push_back(template_summary(t));
    const std::vector<std::pair<std::string, std::string>> files{
        {"leaderboard.json", json(s.graph.leaderboard()).dump(2) + "\n"},
        {"provenance.json", json{{"templates", templates}, {"edges", s.graph.edges()}}.dump(2) + "\n"},
        {"metrics.json", session_metrics(s).dump(2) + "\n"},
        {"canvas.svg", canvas_svg(points, s.graph)},
    };
    std::vector<std::filesystem::path> written;
    for (const auto& [name, body] : files) {
        const auto path = out_dir / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << body;
        if (!out) fail(ErrorCode::IoError, "cannot write report file", path.string());
        written.push_back(path);
    }
    return written;
}

} // namespace promptaid
