#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <string>

#include "httplib.h"

#include "service.hpp"

// HTTP binding of SessionService:
//   POST /sessions                 {"participant_code", "library"?, "group"?}
//   GET  /sessions/{id}/task       participant view
//   POST /sessions/{id}/events     {"action", "x", "y", "z", "cube_id"?, "t"?}
//   POST /sessions/{id}/advance    assessor
//   POST /sessions/{id}/abort      assessor
//   GET  /sessions/{id}/results    assessor
//   GET  /sessions/{id}/stream     assessor, text/event-stream

namespace cogcubes {

inline int http_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::UnknownSession: return 404;
    case ErrorCode::Unauthorized: return 401;
    case ErrorCode::WrongPhase:
    case ErrorCode::NoActiveTask: return 409;
    case ErrorCode::InvalidLibrary:
    case ErrorCode::ParseError: return 400;
    case ErrorCode::IoError: return 500;
    default: return 422;
    }
}

class HttpServer {
public:
    explicit HttpServer(SessionService& service, std::string assessor_token = {})
        : service_(service), token_(std::move(assessor_token)) {
        routes();
    }

    ~HttpServer() { stop(); }

    bool listen(const std::string& host, int port) { return server_.listen(host, port); }

    /// Binds to an ephemeral port and returns it; call listen_after_bind() to serve.
    int bind_any(const std::string& host = "127.0.0.1") { return server_.bind_to_any_port(host); }
    bool listen_after_bind() { return server_.listen_after_bind(); }
    void wait_until_ready() const { server_.wait_until_ready(); }

    void stop() {
        stopping_ = true;
        service_.notify_all();
        server_.stop();
    }

private:
    static void send_json(httplib::Response& res, const Json& body, int status = 200) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static void send_error(httplib::Response& res, const Error& e) {
        send_json(res, {{"error", std::string(e.name())}, {"message", e.what()}}, http_status(e.code()));
    }

    template <typename Fn>
    static void guarded(httplib::Response& res, Fn&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            send_error(res, e);
        } catch (const Json::exception& e) {
            send_error(res, Error(ErrorCode::ParseError, e.what()));
        }
    }

    void require_assessor(const httplib::Request& req) const {
        if (token_.empty()) return;
        if (req.get_header_value("X-Assessor-Token") != token_ && req.get_param_value("token") != token_)
            throw Error(ErrorCode::Unauthorized);
    }

    void routes() {
        server_.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const Json body = req.body.empty() ? Json::object() : Json::parse(req.body);
                std::optional<fs::path> library;
                if (body.contains("library")) library = body["library"].get<std::string>();
                const auto handle = service_.create_session(body.value("participant_code", std::string{}), library,
                                                            body.value("group", std::string{}));
                send_json(res,
                          {{"session_id", handle.session_id},
                           {"participant_code", handle.participant_code},
                           {"created_at", handle.created_at}},
                          201);
            });
        });

        server_.Get(R"(/sessions/([0-9a-f]+)/task)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { send_json(res, service_.task_view(req.matches[1])); });
        });

        server_.Post(R"(/sessions/([0-9a-f]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const Json body = Json::parse(req.body);
                EventRequest ev;
                ev.action = action_from_string(body.at("action").get<std::string>());
                ev.cell = {body.at("x").get<int>(), body.at("y").get<int>(), body.at("z").get<int>()};
                if (body.contains("cube_id")) ev.cube_id = body["cube_id"].get<int>();
                if (body.contains("t")) ev.client_t = body["t"].get<double>();
                const auto ack = service_.post_event(req.matches[1], ev);
                send_json(res, {{"event_count", ack.event_count}, {"cue", ack.cue}, {"event", event_to_json(ack.event)}});
            });
        });

        server_.Post(R"(/sessions/([0-9a-f]+)/advance)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                require_assessor(req);
                service_.advance(req.matches[1]);
                send_json(res, service_.task_view(req.matches[1]));
            });
        });

        server_.Post(R"(/sessions/([0-9a-f]+)/abort)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                require_assessor(req);
                service_.abort_task(req.matches[1]);
                send_json(res, service_.task_view(req.matches[1]));
            });
        });

        server_.Get(R"(/sessions/([0-9a-f]+)/results)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                require_assessor(req);
                send_json(res, service_.results(req.matches[1]));
            });
        });

        server_.Get(R"(/sessions/([0-9a-f]+)/stream)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                require_assessor(req);
                const std::string id = req.matches[1];
                if (!service_.exists(id)) throw Error(ErrorCode::UnknownSession, id);
                auto cursor = std::make_shared<std::size_t>(0);
                res.set_header("Cache-Control", "no-cache");
                res.set_chunked_content_provider(
                    "text/event-stream", [this, id, cursor](std::size_t, httplib::DataSink& sink) {
                        if (stopping_) return false;
                        const auto batch = service_.wait_messages(id, *cursor, std::chrono::milliseconds(250));
                        for (const auto& msg : batch.messages) {
                            const std::string frame = "data: " + msg.dump() + "\n\n";
                            if (!sink.write(frame.data(), frame.size())) return false;
                            ++*cursor;
                        }
                        if (batch.closed) {
                            const std::string frame = "event: end\ndata: " + batch.terminal.dump() + "\n\n";
                            sink.write(frame.data(), frame.size());
                            sink.done();
                        }
                        return true;
                    });
            });
        });
    }

    SessionService& service_;
    std::string token_;
    httplib::Server server_;
    std::atomic<bool> stopping_{false};
};

} // namespace cogcubes
