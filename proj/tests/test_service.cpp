#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "cogcubes/service.hpp"

using namespace cogcubes;

#ifndef COGCUBES_DATA_DIR
#error "COGCUBES_DATA_DIR must be defined"
#endif

namespace {

const fs::path kLibrary = fs::path(COGCUBES_DATA_DIR) / "library" / "library.json";

struct FakeClock {
    std::shared_ptr<double> now = std::make_shared<double>(1'700'000'000.0);
    Clock clock() const {
        return [now = now] { return *now; };
    }
    void tick(double s) const { *now += s; }
};

class ServiceTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() / ("cogcubes_service_" + std::to_string(::getpid()) + "_" +
                                           ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    std::size_t line_count(const fs::path& p) {
        std::ifstream in(p);
        std::size_t n = 0;
        for (std::string line; std::getline(in, line);) ++n;
        return n;
    }

    fs::path dir;
    FakeClock clock;
};

bool mentions_key(const Json& j, const std::string& key) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items())
            if (k == key || mentions_key(v, key)) return true;
    } else if (j.is_array()) {
        for (const auto& v : j)
            if (mentions_key(v, key)) return true;
    }
    return false;
}

EventRequest connect(int x, int y, int z) { return {Action::Connect, {x, y, z}, std::nullopt, std::nullopt}; }

} // namespace

TEST_F(ServiceTest, PostEventAcknowledgesWithCueAndServerTime) {
    SessionService svc(dir, kLibrary, clock.clock());
    const auto h = svc.create_session("P01");
    clock.tick(2.5);
    auto ack = svc.post_event(h.session_id, connect(0, 0, 1));
    EXPECT_EQ(ack.event_count, 1u);
    EXPECT_EQ(ack.cue, "connect-chime");
    EXPECT_DOUBLE_EQ(ack.event.t, 2.5);
    EXPECT_EQ(ack.event.cube_id, 1);
    // a clock that has not moved still yields strictly increasing times
    ack = svc.post_event(h.session_id, {Action::Disconnect, {0, 0, 1}, std::nullopt, 2.4});
    EXPECT_EQ(ack.cue, "disconnect-chime");
    EXPECT_DOUBLE_EQ(ack.event.t, 2.501);
    EXPECT_EQ(ack.event.client_t, std::optional<double>(2.4));
    EXPECT_EQ(svc.snapshot(h.session_id).phase, Phase::Building);
}

TEST_F(ServiceTest, RejectedEventLeavesLogUntouched) {
    SessionService svc(dir, kLibrary, clock.clock());
    const auto h = svc.create_session("P01");
    clock.tick(1);
    svc.post_event(h.session_id, connect(0, 0, 1));
    const auto log = dir / h.session_id / "task_0.jsonl";
    const auto before = line_count(log);
    clock.tick(1);
    try {
        svc.post_event(h.session_id, connect(0, 0, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::CellOccupied);
    }
    EXPECT_EQ(line_count(log), before);
    EXPECT_EQ(svc.snapshot(h.session_id).event_count(), 1u);
}

TEST_F(ServiceTest, ErrorsForUnknownSessionAndMissingLibrary) {
    SessionService svc(dir, std::nullopt, clock.clock());
    try {
        svc.create_session("P01");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidLibrary);
    }
    try {
        svc.create_session("P01", dir / "nope.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidLibrary);
    }
    try {
        svc.post_event("deadbeef", connect(1, 0, 0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownSession);
    }
}

TEST_F(ServiceTest, SessionIdsAreDistinct) {
    SessionService svc(dir, kLibrary, clock.clock());
    std::set<std::string> ids;
    for (int k = 0; k < 40; ++k) ids.insert(svc.create_session("P" + std::to_string(k)).session_id);
    EXPECT_EQ(ids.size(), 40u);
}

TEST_F(ServiceTest, ParticipantViewNeverCarriesSimilarity) {
    SessionService svc(dir, kLibrary, clock.clock());
    const auto h = svc.create_session("P01");
    for (std::size_t task = 0; task < 5; ++task) {
        const auto view = svc.task_view(h.session_id);
        EXPECT_FALSE(mentions_key(view, "similarity")) << view.dump();
        const auto kind = view.at("kind").get<std::string>();
        EXPECT_EQ(view.contains("guidance"), kind == "intro" || kind == "follow");
        EXPECT_DOUBLE_EQ(view.at("rotation_rpm").get<double>(), 2.7);
        clock.tick(1.2);
        const auto structure = svc.snapshot(h.session_id).structure;
        for (const auto& c : structure) {
            const CubeCoord n = c + CubeCoord{0, 0, 1};
            if (!structure.contains(n)) {
                svc.post_event(h.session_id, connect(n.x, n.y, n.z));
                break;
            }
        }
        EXPECT_FALSE(mentions_key(svc.task_view(h.session_id), "similarity"));
        svc.advance(h.session_id);
    }
    EXPECT_EQ(svc.snapshot(h.session_id).phase, Phase::Done);
    EXPECT_FALSE(mentions_key(svc.task_view(h.session_id), "similarity"));
}

TEST_F(ServiceTest, GuidanceFollowsThePrototype) {
    SessionService svc(dir, kLibrary, clock.clock());
    const auto h = svc.create_session("P01");
    const auto view = svc.task_view(h.session_id);
    ASSERT_EQ(view.at("task_id"), "intro1");
    EXPECT_EQ(view.at("guidance").at("z"), 1);
    clock.tick(1);
    svc.post_event(h.session_id, connect(0, 0, 1));
    EXPECT_TRUE(svc.task_view(h.session_id).at("guidance").is_null());
}

TEST_F(ServiceTest, AdvanceAbortAndPhaseErrors) {
    SessionService svc(dir, kLibrary, clock.clock());
    const auto h = svc.create_session("P01");
    svc.advance(h.session_id);
    EXPECT_EQ(svc.snapshot(h.session_id).current, 1u);
    svc.abort_task(h.session_id);
    const auto s = svc.snapshot(h.session_id);
    EXPECT_EQ(s.phase, Phase::Aborted);
    EXPECT_EQ(s.records.back().outcome, Outcome::StoppedByAssessor);
    EXPECT_EQ(s.records.front().outcome, Outcome::CompletedByParticipant);
    try {
        svc.post_event(h.session_id, connect(1, 0, 0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::WrongPhase);
    }
    try {
        svc.advance(h.session_id);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoActiveTask);
    }
}

TEST_F(ServiceTest, RestartRestoresEveryAcknowledgedEvent) {
    std::string id;
    std::vector<TaskRecord> before;
    {
        SessionService svc(dir, kLibrary, clock.clock());
        id = svc.create_session("P07", std::nullopt, "pilot").session_id;
        clock.tick(1);
        svc.post_event(id, connect(0, 0, 1));
        svc.advance(id);
        for (int x = 1; x <= 3; ++x) {
            clock.tick(0.75);
            svc.post_event(id, connect(x, 0, 0));
        }
        before = svc.snapshot(id).records;
    }
    SessionService again(dir, kLibrary, clock.clock());
    ASSERT_TRUE(again.exists(id));
    const auto s = again.snapshot(id);
    EXPECT_EQ(s.records, before);
    EXPECT_EQ(s.group, "pilot");
    EXPECT_EQ(s.current, 1u);
    EXPECT_EQ(s.phase, Phase::Building);
    EXPECT_EQ(s.structure, (Polycube{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}}));
    // stream history is regenerated
    EXPECT_EQ(again.wait_messages(id, 0, std::chrono::milliseconds(0)).messages.size(), 4u);
    // the log on disk is a record file that parses on its own
    const auto rec = load_record(dir / id / "task_1.jsonl");
    EXPECT_EQ(rec.events, before[1].events);
}

TEST_F(ServiceTest, ResultsCarryMeasuresAndStreamCloses) {
    SessionService svc(dir, kLibrary, clock.clock());
    const auto h = svc.create_session("P01");
    clock.tick(3);
    svc.post_event(h.session_id, connect(0, 0, 1));
    auto batch = svc.wait_messages(h.session_id, 0, std::chrono::milliseconds(0));
    ASSERT_EQ(batch.messages.size(), 1u);
    EXPECT_DOUBLE_EQ(batch.messages[0].at("similarity").get<double>(), 100.0);
    EXPECT_FALSE(batch.closed);

    const auto results = svc.results(h.session_id);
    const auto& m = results.at("records").at(0).at("measures");
    EXPECT_DOUBLE_EQ(m.at("similarity").get<double>(), 100.0);
    EXPECT_DOUBLE_EQ(m.at("last_connect").get<double>(), 3.0);
    EXPECT_DOUBLE_EQ(m.at("derivative").get<double>(), 50.0 / 3.0);
    EXPECT_EQ(m.at("zero_crossings").get<int>(), 0);

    svc.abort_task(h.session_id);
    batch = svc.wait_messages(h.session_id, 1, std::chrono::milliseconds(0));
    EXPECT_TRUE(batch.closed);
    EXPECT_EQ(batch.terminal.at("phase"), "aborted");
}
