#include "cfverse/http_service.hpp"

#include <httplib.h>

#include "cfverse/error.hpp"
#include "cfverse/serialization.hpp"

namespace cfverse::nav {

using Json = nlohmann::json;

namespace {

void send(httplib::Response& res, int status, Json body) {
    if (body.is_object() && !body.contains("schema_version")) body["schema_version"] = io::kSchemaVersion;
    res.status = status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& type, const std::string& message) {
    send(res, status, Json{{"error", Json{{"type", type}, {"message", message}}}});
}

// Maps library errors onto HTTP status codes.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
    try {
        fn();
    } catch (const NotFoundError& e) {
        send_error(res, 404, "not_found", e.what());
    } catch (const ConflictError& e) {
        send_error(res, 409, "conflict", e.what());
    } catch (const NothingToExplainError& e) {
        send_error(res, 422, "already_counterfactual", e.what());
    } catch (const ValidationError& e) {
        send_error(res, 400, "validation", e.what());
    } catch (const nlohmann::json::exception& e) {
        send_error(res, 400, "bad_json", e.what());
    } catch (const Error& e) {
        send_error(res, 400, "error", e.what());
    } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
    }
}

Json parse_body(const httplib::Request& req) {
    if (req.body.empty()) throw ValidationError("request body must be a JSON document");
    try {
        return Json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("malformed JSON body: ") + e.what());
    }
}

graph::Vertex vertex_field(const Json& body, const char* name) {
    if (!body.contains(name) || !body[name].is_number_unsigned())
        throw ValidationError(std::string("field '") + name + "' must be a non-negative integer");
    return body[name].get<graph::Vertex>();
}

}  // namespace

struct HttpService::Impl {
    Navigator& navigator;
    httplib::Server server;

    explicit Impl(Navigator& nav) : navigator(nav) { routes(); }

    void routes() {
        server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Origin", "*");
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.status = 204;
        });
        server.Get("/health", [](const httplib::Request&, httplib::Response& res) { send(res, 200, Json{{"status", "ok"}}); });

        server.Post("/graphs", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                auto g = io::graph_from_json(parse_body(req));
                const auto id = navigator.add_graph(std::move(g));
                send(res, 201, Json{{"graph_id", id}});
            });
        });
        server.Get(R"(/graphs/([^/]+)/summary)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { send(res, 200, navigator.graph_summary(req.matches[1])); });
        });
        server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto body = parse_body(req);
                if (!body.contains("graph_id") || !body["graph_id"].is_string())
                    throw ValidationError("field 'graph_id' must be a string");
                const auto s = navigator.create_session(body["graph_id"].get<std::string>(), vertex_field(body, "factual"));
                send(res, 201, navigator.session_state(s.id));
            });
        });
        server.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { send(res, 200, navigator.session_state(req.matches[1])); });
        });
        server.Get(R"(/sessions/([^/]+)/previews)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string id = req.matches[1];
                const auto s = navigator.session(id);
                send(res, 200, Json{{"session_id", id}, {"current", s.current()}, {"version", s.version},
                                    {"previews", to_json(navigator.preview_steps(id))}});
            });
        });
        server.Post(R"(/sessions/([^/]+)/step)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string id = req.matches[1];
                const auto body = parse_body(req);
                std::optional<std::uint64_t> expected;
                if (body.contains("expected_version")) expected = body["expected_version"].get<std::uint64_t>();
                navigator.take_step(id, vertex_field(body, "neighbor"), expected);
                send(res, 200, navigator.session_state(id));
            });
        });
    }
};

HttpService::HttpService(Navigator& navigator) : impl_(std::make_unique<Impl>(navigator)) {}
HttpService::~HttpService() { stop(); }

bool HttpService::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }
int HttpService::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool HttpService::listen_after_bind() { return impl_->server.listen_after_bind(); }
void HttpService::stop() {
    if (impl_) impl_->server.stop();
}
void HttpService::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace cfverse::nav
