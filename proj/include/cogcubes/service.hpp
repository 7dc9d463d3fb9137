#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

#include "measures.hpp"
#include "record.hpp"
#include "session.hpp"
#include "similarity.hpp"
#include "tasks.hpp"

// Live session service. Layout under the sessions directory:
//   <session_id>/manifest.json        rewritten atomically on every transition
//   <session_id>/task_<k>.jsonl       event log of the k-th presented task;
//                                     events are appended and synced before
//                                     they are acknowledged

namespace cogcubes {

namespace fs = std::filesystem;

struct SessionHandle {
    std::string session_id;
    std::string participant_code;
    std::string created_at;
};

struct EventRequest {
    Action action = Action::Connect;
    CubeCoord cell;
    std::optional<int> cube_id;
    std::optional<double> client_t;
};

struct EventAck {
    std::size_t event_count = 0;
    std::string cue; // "connect-chime" or "disconnect-chime"
    TaskEvent event;
};

/// Seconds since the Unix epoch.
using Clock = std::function<double()>;

inline double system_seconds() {
    using namespace std::chrono;
    return duration<double>(system_clock::now().time_since_epoch()).count();
}

namespace detail {

inline void write_atomically(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error(ErrorCode::IoError, "write failed " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline void append_synced(const fs::path& path, const std::string& line) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
    if (fd < 0) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    const char* data = line.data();
    std::size_t left = line.size();
    while (left > 0) {
        const ssize_t n = ::write(fd, data, left);
        if (n < 0) {
            ::close(fd);
            throw Error(ErrorCode::IoError, "append failed " + path.string());
        }
        data += n;
        left -= static_cast<std::size_t>(n);
    }
    ::fdatasync(fd);
    ::close(fd);
}

inline std::string iso_time(double epoch_seconds) {
    const auto secs = static_cast<std::time_t>(epoch_seconds);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace detail

class SessionService {
public:
    explicit SessionService(fs::path sessions_dir, std::optional<fs::path> default_library = std::nullopt,
                            Clock clock = system_seconds)
        : dir_(std::move(sessions_dir)), default_library_(std::move(default_library)), clock_(std::move(clock)) {
        fs::create_directories(dir_);
        restore_all();
    }

    SessionService(const SessionService&) = delete;
    SessionService& operator=(const SessionService&) = delete;

    const fs::path& directory() const noexcept { return dir_; }

    SessionHandle create_session(const std::string& participant_code, std::optional<fs::path> library = {},
                                 const std::string& group = {}) {
        const auto lib_path = library ? library : default_library_;
        if (!lib_path) throw Error(ErrorCode::InvalidLibrary, "no task library configured");
        auto lib = load_library(*lib_path);

        auto live = std::make_shared<Live>();
        const double now = clock_();
        {
            std::unique_lock lock(registry_mutex_);
            std::string id;
            do {
                id = new_session_id();
            } while (sessions_.count(id) || fs::exists(dir_ / id));
            live->state = start_session(id, participant_code, std::move(lib.tasks), group);
            live->created_at = detail::iso_time(now);
            live->onsets.push_back(now);
            fs::create_directories(dir_ / id);
            sessions_[id] = live;
        }
        std::lock_guard guard(live->mutex);
        write_task_file(*live, 0);
        write_manifest(*live);
        return {live->state.session_id, participant_code, live->created_at};
    }

    EventAck post_event(const std::string& session_id, const EventRequest& req) {
        auto live = find(session_id);
        std::lock_guard guard(live->mutex);
        auto& s = live->state;
        if (!s.active()) throw Error(ErrorCode::WrongPhase, std::string(to_string(s.phase)));

        double t = round_ms(clock_() - live->onsets.at(s.current));
        const auto& events = s.record().events;
        const double floor = events.empty() ? 0.0 : events.back().t;
        if (t <= floor) t = round_ms(floor + 0.001);

        TaskEvent ev{t, req.action, req.cell, req.cube_id.value_or(-1), req.client_t};
        SessionState next = s;
        ev = accept_event(next, ev);
        detail::append_synced(task_path(s.session_id, s.records.size() - 1), event_to_json(ev).dump() + "\n");
        s = std::move(next);
        publish_event(*live, ev);
        return {s.event_count(), ev.action == Action::Connect ? "connect-chime" : "disconnect-chime", ev};
    }

    void advance(const std::string& session_id) {
        auto live = find(session_id);
        std::lock_guard guard(live->mutex);
        SessionState next = cogcubes::advance(live->state);
        const std::size_t sealed = live->state.records.size() - 1;
        live->state = std::move(next);
        write_task_file(*live, sealed);
        if (live->state.active()) {
            live->onsets.push_back(clock_());
            write_task_file(*live, live->state.records.size() - 1);
        }
        write_manifest(*live);
        if (!live->state.active()) close_stream(*live);
    }

    void abort_task(const std::string& session_id) {
        auto live = find(session_id);
        std::lock_guard guard(live->mutex);
        SessionState next = cogcubes::abort_task(live->state);
        live->state = std::move(next);
        write_task_file(*live, live->state.records.size() - 1);
        write_manifest(*live);
        close_stream(*live);
    }

    SessionState snapshot(const std::string& session_id) const {
        auto live = find(session_id);
        std::lock_guard guard(live->mutex);
        return live->state;
    }

    /// Participant-facing view of the current task. Never carries similarity.
    Json task_view(const std::string& session_id) const {
        const SessionState s = snapshot(session_id);
        Json j;
        j["session_id"] = s.session_id;
        j["phase"] = std::string(to_string(s.phase));
        j["task_count"] = s.tasks.size();
        if (!s.active()) return j;
        const auto& spec = s.task();
        j["task_index"] = s.current;
        j["task_id"] = spec.task_id;
        j["kind"] = std::string(to_string(spec.kind));
        j["guided"] = spec.guided;
        j["prototype"] = cells_to_json(spec.prototype);
        j["structure"] = cells_to_json(s.structure);
        j["event_count"] = s.event_count();
        j["rotation_rpm"] = kPrototypeRotationRpm;
        if (spec.guided) {
            if (auto g = next_guidance_cube(spec, s.structure)) {
                j["guidance"] = {{"x", g->cell.x}, {"y", g->cell.y}, {"z", g->cell.z},
                                 {"action", std::string(to_string(g->action))}};
            } else {
                j["guidance"] = nullptr;
            }
        }
        return j;
    }

    /// Assessor view: every record with its measures where defined.
    Json results(const std::string& session_id) const {
        const SessionState s = snapshot(session_id);
        Json j;
        j["session_id"] = s.session_id;
        j["participant_code"] = s.participant_code;
        j["phase"] = std::string(to_string(s.phase));
        Json records = Json::array();
        for (std::size_t k = 0; k < s.records.size(); ++k) {
            const auto& r = s.records[k];
            Json rj = header_to_json(r);
            Json evs = Json::array();
            for (const auto& ev : r.events) evs.push_back(event_to_json(ev));
            rj["events"] = std::move(evs);
            const auto& proto = s.tasks[k].prototype;
            Json trace = Json::array();
            for (const auto& pt : similarity_trace(r, proto)) trace.push_back({pt.t, pt.value.to_double()});
            rj["trace"] = std::move(trace);
            if (!r.events.empty()) {
                try {
                    const auto m = compute_measures(r, proto);
                    rj["measures"] = {{"similarity", m.similarity},
                                      {"last_connect", m.last_connect},
                                      {"derivative", m.derivative},
                                      {"zero_crossings", m.zero_crossings}};
                } catch (const Error& e) {
                    rj["measures_error"] = std::string(e.name());
                }
            }
            records.push_back(std::move(rj));
        }
        j["records"] = std::move(records);
        return j;
    }

    /// Stream messages from index `from` on. Blocks up to `timeout` for new
    /// ones. `closed` is set once the session has ended and every message has
    /// been returned.
    struct StreamBatch {
        std::vector<Json> messages;
        bool closed = false;
        Json terminal;
    };

    StreamBatch wait_messages(const std::string& session_id, std::size_t from,
                              std::chrono::milliseconds timeout) const {
        auto live = find(session_id);
        std::unique_lock lock(live->mutex);
        live->cv.wait_for(lock, timeout, [&] { return live->messages.size() > from || live->closed; });
        StreamBatch batch;
        for (std::size_t k = from; k < live->messages.size(); ++k) batch.messages.push_back(live->messages[k]);
        batch.closed = live->closed;
        if (batch.closed) batch.terminal = {{"end", true}, {"phase", std::string(to_string(live->state.phase))}};
        return batch;
    }

    bool exists(const std::string& session_id) const {
        std::shared_lock lock(registry_mutex_);
        return sessions_.count(session_id) != 0;
    }

    std::vector<std::string> session_ids() const {
        std::shared_lock lock(registry_mutex_);
        std::vector<std::string> out;
        for (const auto& [id, live] : sessions_) out.push_back(id);
        return out;
    }

    /// Wakes all stream waiters, e.g. before shutdown.
    void notify_all() {
        std::shared_lock lock(registry_mutex_);
        for (auto& [id, live] : sessions_) live->cv.notify_all();
    }

private:
    struct Live {
        mutable std::mutex mutex;
        mutable std::condition_variable cv;
        SessionState state;
        std::string created_at;
        std::vector<double> onsets; // epoch seconds at which each task was presented
        std::vector<Json> messages;
        std::size_t accepted = 0;
        bool closed = false;
    };

    std::shared_ptr<Live> find(const std::string& id) const {
        std::shared_lock lock(registry_mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, id);
        return it->second;
    }

    std::string new_session_id() {
        std::uniform_int_distribution<std::uint64_t> dist;
        std::ostringstream os;
        os << std::hex << dist(rng_) << dist(rng_);
        return os.str();
    }

    fs::path task_path(const std::string& id, std::size_t k) const {
        return dir_ / id / ("task_" + std::to_string(k) + ".jsonl");
    }

    void write_task_file(const Live& live, std::size_t k) const {
        detail::write_atomically(task_path(live.state.session_id, k), format_record(live.state.records.at(k)));
    }

    void write_manifest(const Live& live) const {
        const auto& s = live.state;
        Json m;
        m["session_id"] = s.session_id;
        m["participant_code"] = s.participant_code;
        m["group"] = s.group;
        m["created_at"] = live.created_at;
        m["phase"] = std::string(to_string(s.phase));
        m["current"] = s.current;
        m["record_count"] = s.records.size();
        m["onsets"] = live.onsets;
        Json tasks = Json::array();
        for (const auto& t : s.tasks) tasks.push_back(task_to_json(t));
        m["tasks"] = std::move(tasks);
        detail::write_atomically(dir_ / s.session_id / "manifest.json", m.dump(2) + "\n");
    }

    void publish_event(Live& live, const TaskEvent& ev) {
        const auto& s = live.state;
        ++live.accepted;
        Json msg;
        msg["seq"] = live.accepted;
        msg["task_id"] = s.task().task_id;
        msg["event_count"] = s.event_count();
        msg["t"] = ev.t;
        msg["action"] = std::string(to_string(ev.action));
        msg["x"] = ev.cell.x;
        msg["y"] = ev.cell.y;
        msg["z"] = ev.cell.z;
        msg["similarity"] = best_similarity(s.structure, s.task().prototype).percent();
        live.messages.push_back(std::move(msg));
        live.cv.notify_all();
    }

    void close_stream(Live& live) {
        live.closed = true;
        live.cv.notify_all();
    }

    void restore_all() {
        if (!fs::exists(dir_)) return;
        std::vector<fs::path> dirs;
        for (const auto& entry : fs::directory_iterator(dir_))
            if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) dirs.push_back(entry.path());
        std::sort(dirs.begin(), dirs.end());
        for (const auto& d : dirs) restore(d);
    }

    /// Rebuilds a session by re-running its transitions from the manifest and
    /// the per-task logs, which also regenerates the stream messages.
    void restore(const fs::path& d) {
        std::ifstream in(d / "manifest.json");
        const Json m = Json::parse(in);
        std::vector<TaskSpec> tasks;
        for (const auto& t : m.at("tasks")) tasks.push_back(task_from_json(t));
        auto live = std::make_shared<Live>();
        live->created_at = m.value("created_at", std::string{});
        live->onsets = m.at("onsets").get<std::vector<double>>();
        live->state = start_session(m.at("session_id").get<std::string>(), m.at("participant_code").get<std::string>(),
                                    std::move(tasks), m.value("group", std::string{}));
        const auto record_count = m.at("record_count").get<std::size_t>();
        const auto phase = phase_from_string(m.at("phase").get<std::string>());
        for (std::size_t k = 0; k < record_count; ++k) {
            const auto logged = load_record(task_path(live->state.session_id, k));
            for (const auto& ev : logged.events) {
                accept_event(live->state, ev);
                publish_event(*live, ev);
            }
            if (k + 1 < record_count) live->state = cogcubes::advance(live->state);
        }
        if (phase == Phase::Done) live->state = cogcubes::advance(live->state);
        if (phase == Phase::Aborted) live->state = cogcubes::abort_task(live->state);
        if (!live->state.active()) live->closed = true;
        sessions_[live->state.session_id] = live;
    }

    fs::path dir_;
    std::optional<fs::path> default_library_;
    Clock clock_;
    mutable std::shared_mutex registry_mutex_;
    std::map<std::string, std::shared_ptr<Live>> sessions_;
    std::mt19937_64 rng_{std::random_device{}()};
};

} // namespace cogcubes
