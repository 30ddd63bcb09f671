#pragma once

// REST front end over a Workbench. All bodies are JSON; failures become
// {"code","message","detail"} with a 4xx, 502/504 or 500 status.

#include "promptaid/workbench.hpp"

#include <httplib.h>

#include <charconv>

namespace promptaid {

inline int http_status(const Error& e) {
    switch (e.code()) {
    case ErrorCode::NotFound:
    case ErrorCode::UnknownTemplate:
    case ErrorCode::UnknownDataset:
    case ErrorCode::UnknownModel: return 404;
    case ErrorCode::DuplicateId: return 409;
    case ErrorCode::Timeout: return 504;
    default: break;
    }
    switch (e.error_class()) {
    case ErrorClass::Client: return 400;
    case ErrorClass::Gateway: return 502;
    case ErrorClass::Internal: return 500;
    }
    return 500;
}

inline json error_body(const Error& e) {
    return json{{"code", std::string(to_string(e.code()))}, {"message", e.message()}, {"detail", e.detail()}};
}

namespace detail {

inline json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        auto j = json::parse(req.body);
        if (!j.is_object()) fail(ErrorCode::InvalidArgument, "request body must be a JSON object");
        return j;
    } catch (const json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("request body is not JSON: ") + e.what());
    }
}

template <typename T>
std::optional<T> query_number(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) return std::nullopt;
    const auto s = req.get_param_value(name);
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        fail(ErrorCode::InvalidArgument, std::string("query parameter is not an integer: ") + name, s);
    return v;
}

inline std::string required_param(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) fail(ErrorCode::InvalidArgument, std::string("missing query parameter: ") + name);
    return req.get_param_value(name);
}

template <typename T>
T body_field(const json& body, const char* name) {
    try {
        return body.at(name).get<T>();
    } catch (const json::exception&) {
        fail(ErrorCode::InvalidArgument, std::string("missing or invalid field: ") + name);
    }
}

} // namespace detail

/// Registers every /api route on `server`.
inline void register_routes(httplib::Server& server, Workbench& wb) {
    using Req = const httplib::Request&;
    using Res = httplib::Response&;
    auto handle = [](auto fn) {
        return [fn](Req req, Res res) {
            try {
                res.set_content(fn(req).dump(), "application/json");
            } catch (const Error& e) {
                res.status = http_status(e);
                res.set_content(error_body(e).dump(), "application/json");
            } catch (const std::exception& e) {
                res.status = 500;
                res.set_content(json{{"code", "Internal"}, {"message", e.what()}, {"detail", ""}}.dump(),
                                "application/json");
            }
        };
    };
    auto id_of = [](Req req) { return req.matches[1].str(); };

    server.Get("/api/datasets", handle([&](Req) { return wb.datasets(); }));
    server.Get("/api/models", handle([&](Req) { return wb.models(); }));

    server.Get("/api/templates", handle([&](Req) { return wb.templates(); }));
    server.Post("/api/templates", handle([&](Req req) {
                    const auto body = detail::parse_body(req);
                    const auto origin = origin_from_string(body.value("origin", std::string("manual")));
                    return wb.create_template(detail::body_field<std::string>(body, "text"), origin);
                }));
    server.Get(R"(/api/templates/([^/]+))", handle([&](Req req) { return wb.get_template(id_of(req)); }));
    server.Delete(R"(/api/templates/([^/]+))", handle([&](Req req) { return wb.delete_template(id_of(req)); }));
    server.Post(R"(/api/templates/([^/]+)/evaluate)", handle([&](Req req) { return wb.evaluate(id_of(req)); }));
    server.Get(R"(/api/templates/([^/]+)/mutable-words)", handle([&](Req req) { return wb.mutable_words(id_of(req)); }));
    server.Post(R"(/api/templates/([^/]+)/keywords)", handle([&](Req req) {
                    const auto body = detail::parse_body(req);
                    std::optional<std::uint64_t> seed;
                    if (body.contains("seed")) seed = detail::body_field<std::uint64_t>(body, "seed");
                    return wb.keywords(id_of(req), detail::body_field<std::string>(body, "target"), seed);
                }));
    server.Post(R"(/api/templates/([^/]+)/paraphrases)", handle([&](Req req) {
                    const auto body = detail::parse_body(req);
                    std::optional<std::uint64_t> seed;
                    if (body.contains("seed")) seed = detail::body_field<std::uint64_t>(body, "seed");
                    return wb.paraphrases(id_of(req), seed);
                }));
    server.Post(R"(/api/templates/([^/]+)/apply)", handle([&](Req req) {
                    const auto body = detail::parse_body(req);
                    return wb.apply(id_of(req), detail::body_field<std::string>(body, "kind"),
                                    detail::body_field<json>(body, "payload"));
                }));
    server.Post(R"(/api/templates/([^/]+)/kshot)", handle([&](Req req) { return wb.kshot(id_of(req)); }));
    server.Get(R"(/api/templates/([^/]+)/sensitivities)", handle([&](Req req) {
                   return wb.sensitivities(id_of(req), detail::query_number<int>(req, "samples"),
                                           detail::query_number<std::uint64_t>(req, "seed"));
               }));

    server.Get("/api/canvas", handle([&](Req req) { return wb.canvas(detail::query_number<std::uint64_t>(req, "seed")); }));
    server.Get("/api/provenance", handle([&](Req) { return wb.provenance(); }));
    server.Get("/api/provenance/diff", handle([&](Req req) {
                   return wb.diff(detail::required_param(req, "a"), detail::required_param(req, "b"));
               }));
    server.Post("/api/test", handle([&](Req req) {
                    const auto body = detail::parse_body(req);
                    return wb.test(detail::body_field<std::string>(body, "template_id"),
                                   detail::body_field<std::vector<std::string>>(body, "texts"));
                }));

    server.Get("/api/session", handle([&](Req) { return wb.session(); }));
    server.Post("/api/session", handle([&](Req req) {
                    const auto body = detail::parse_body(req);
                    return wb.select(detail::body_field<std::string>(body, "dataset"),
                                     detail::body_field<std::string>(body, "model"));
                }));
    auto optional_path = [](Req req) -> std::optional<std::filesystem::path> {
        const auto body = detail::parse_body(req);
        if (!body.contains("path")) return std::nullopt;
        return std::filesystem::path(detail::body_field<std::string>(body, "path"));
    };
    server.Post("/api/session/save", handle([&, optional_path](Req req) { return wb.save(optional_path(req)); }));
    server.Post("/api/session/load", handle([&, optional_path](Req req) { return wb.load(optional_path(req)); }));
}

/// Binds and serves until `server.stop()`. Throws BindError when the
/// address is unavailable.
inline void serve(httplib::Server& server, Workbench& wb) {
    register_routes(server, wb);
    // httplib's default adds SO_REUSEPORT, which lets a second process share
    // the port silently
    server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    const auto& cfg = wb.config();
    if (!server.bind_to_port(cfg.host, cfg.port))
        fail(ErrorCode::BindError, "cannot bind listen address", cfg.host + ":" + std::to_string(cfg.port));
    server.listen_after_bind();
}

} // namespace promptaid
