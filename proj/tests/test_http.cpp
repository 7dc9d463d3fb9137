#include <gtest/gtest.h>

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <thread>

#include "cogcubes/http_server.hpp"

using namespace cogcubes;

namespace {

const fs::path kLibrary = fs::path(COGCUBES_DATA_DIR) / "library" / "library.json";

fs::path scratch_dir(const std::string& tag) {
    auto dir = fs::temp_directory_path() / ("cogcubes_http_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    return dir;
}

class Running {
public:
    Running(SessionService& svc, std::string token = {}) : server_(svc, std::move(token)) {
        port_ = server_.bind_any();
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~Running() {
        server_.stop();
        thread_.join();
    }
    int port() const { return port_; }

private:
    HttpServer server_;
    int port_ = 0;
    std::thread thread_;
};

std::string event_body(const char* action, int x, int y, int z) {
    return Json{{"action", action}, {"x", x}, {"y", y}, {"z", z}}.dump();
}

std::vector<Json> sse_data(const std::string& body) {
    std::vector<Json> out;
    std::size_t pos = 0;
    while ((pos = body.find("data: ", pos)) != std::string::npos) {
        const auto end = body.find("\n\n", pos);
        out.push_back(Json::parse(body.substr(pos + 6, end - pos - 6)));
        pos = end;
    }
    return out;
}

} // namespace

TEST(Http, EndpointsAndStatusCodes) {
    const auto dir = scratch_dir("endpoints");
    SessionService svc(dir, kLibrary);
    Running run(svc, "secret");
    httplib::Client cli("127.0.0.1", run.port());

    auto res = cli.Post("/sessions", Json{{"participant_code", "P01"}}.dump(), "application/json");
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 201);
    const auto id = Json::parse(res->body).at("session_id").get<std::string>();

    res = cli.Get("/sessions/" + id + "/task");
    ASSERT_EQ(res->status, 200);
    EXPECT_EQ(Json::parse(res->body).at("task_id"), "intro1");

    res = cli.Post("/sessions/" + id + "/events", event_body("connect", 0, 0, 1), "application/json");
    ASSERT_EQ(res->status, 200);
    const auto ack = Json::parse(res->body);
    EXPECT_EQ(ack.at("event_count"), 1);
    EXPECT_EQ(ack.at("cue"), "connect-chime");

    res = cli.Post("/sessions/" + id + "/events", event_body("connect", 0, 0, 1), "application/json");
    EXPECT_EQ(res->status, 422);
    EXPECT_EQ(Json::parse(res->body).at("error"), "CellOccupied");
    res = cli.Post("/sessions/" + id + "/events", "{not json", "application/json");
    EXPECT_EQ(res->status, 400);
    res = cli.Get("/sessions/abcdef/task");
    EXPECT_EQ(res->status, 404);

    res = cli.Get("/sessions/" + id + "/results");
    EXPECT_EQ(res->status, 401);
    const httplib::Headers auth{{"X-Assessor-Token", "secret"}};
    res = cli.Get("/sessions/" + id + "/results", auth);
    ASSERT_EQ(res->status, 200);
    EXPECT_DOUBLE_EQ(Json::parse(res->body)["records"][0]["measures"]["similarity"].get<double>(), 100.0);

    res = cli.Post("/sessions/" + id + "/advance", auth, "", "application/json");
    ASSERT_EQ(res->status, 200);
    EXPECT_EQ(Json::parse(res->body).at("task_id"), "follow1");
    res = cli.Post("/sessions/" + id + "/abort", auth, "", "application/json");
    ASSERT_EQ(res->status, 200);
    EXPECT_EQ(Json::parse(res->body).at("phase"), "aborted");
    res = cli.Post("/sessions/" + id + "/abort", auth, "", "application/json");
    EXPECT_EQ(res->status, 409);
    fs::remove_all(dir);
}

TEST(Http, StreamReachesTwoSubscribersAndEnds) {
    const auto dir = scratch_dir("stream");
    SessionService svc(dir, kLibrary);
    Running run(svc);
    httplib::Client cli("127.0.0.1", run.port());
    const auto id = Json::parse(cli.Post("/sessions", R"({"participant_code":"P02"})", "application/json")->body)
                        .at("session_id")
                        .get<std::string>();

    std::string bodies[2];
    std::vector<std::thread> subscribers;
    for (auto& body : bodies) {
        subscribers.emplace_back([&, port = run.port()] {
            httplib::Client sub("127.0.0.1", port);
            sub.set_read_timeout(10, 0);
            sub.Get("/sessions/" + id + "/stream", [&](const char* data, std::size_t n) {
                body.append(data, n);
                return true;
            });
        });
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    cli.Post("/sessions/" + id + "/events", event_body("connect", 1, 0, 0), "application/json");
    cli.Post("/sessions/" + id + "/events", event_body("disconnect", 1, 0, 0), "application/json");
    cli.Post("/sessions/" + id + "/events", event_body("connect", 0, 0, 1), "application/json");
    cli.Post("/sessions/" + id + "/abort", "", "application/json");
    for (auto& t : subscribers) t.join();

    for (const auto& body : bodies) {
        const auto msgs = sse_data(body);
        ASSERT_EQ(msgs.size(), 4u) << body;
        EXPECT_EQ(msgs[0].at("action"), "connect");
        EXPECT_EQ(msgs[1].at("action"), "disconnect");
        EXPECT_DOUBLE_EQ(msgs[2].at("similarity").get<double>(), 100.0);
        EXPECT_EQ(msgs[3].at("end"), true);
        EXPECT_NE(body.find("event: end"), std::string::npos);
    }
    fs::remove_all(dir);
}

TEST(Http, AcknowledgedEventsSurviveKill) {
    const auto dir = scratch_dir("kill");
    int fds[2];
    ASSERT_EQ(::pipe(fds), 0);
    const pid_t child = ::fork();
    ASSERT_GE(child, 0);
    if (child == 0) {
        ::close(fds[0]);
        SessionService svc(dir, kLibrary);
        HttpServer server(svc);
        const int port = server.bind_any();
        if (::write(fds[1], &port, sizeof port) != sizeof port) ::_exit(3);
        server.listen_after_bind();
        ::_exit(0);
    }
    ::close(fds[1]);
    int port = 0;
    ASSERT_EQ(::read(fds[0], &port, sizeof port), static_cast<ssize_t>(sizeof port));
    ::close(fds[0]);

    httplib::Client cli("127.0.0.1", port);
    std::shared_ptr<httplib::Result> created;
    for (int attempt = 0; attempt < 50; ++attempt) {
        auto res = cli.Post("/sessions", R"({"participant_code":"P03"})", "application/json");
        if (res) {
            created = std::make_shared<httplib::Result>(std::move(res));
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    ASSERT_TRUE(created);
    const auto id = Json::parse((*created)->body).at("session_id").get<std::string>();
    int acked = 0;
    for (int z = 1; z <= 6; ++z) {
        auto res = cli.Post("/sessions/" + id + "/events", event_body("connect", 0, 0, z), "application/json");
        if (res && res->status == 200) ++acked;
    }
    ::kill(child, SIGKILL);
    int status = 0;
    ::waitpid(child, &status, 0);
    EXPECT_TRUE(WIFSIGNALED(status));

    SessionService restored(dir, kLibrary);
    ASSERT_TRUE(restored.exists(id));
    EXPECT_EQ(acked, 6);
    EXPECT_EQ(restored.snapshot(id).event_count(), static_cast<std::size_t>(acked));
    fs::remove_all(dir);
}
