#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "record.hpp"
#include "tasks.hpp"

namespace cogcubes {

enum class Phase { Presenting, Building, Done, Aborted };

constexpr std::string_view to_string(Phase p) {
    switch (p) {
    case Phase::Presenting: return "presenting";
    case Phase::Building: return "building";
    case Phase::Done: return "done";
    default: return "aborted";
    }
}

inline Phase phase_from_string(std::string_view s) {
    if (s == "presenting") return Phase::Presenting;
    if (s == "building") return Phase::Building;
    if (s == "done") return Phase::Done;
    if (s == "aborted") return Phase::Aborted;
    throw Error(ErrorCode::ParseError, "unknown phase '" + std::string(s) + "'");
}

/// Session progress. Presenting means the prototype is shown and no event has
/// arrived yet; the first accepted event moves the task to Building.
struct SessionState {
    std::string session_id;
    std::string participant_code;
    std::string group;
    std::vector<TaskSpec> tasks;
    std::size_t current = 0;
    std::vector<TaskRecord> records; // one per presented task, append-only
    Phase phase = Phase::Presenting;
    Polycube structure{kOrigin};
    std::map<CubeCoord, int> cube_ids;
    int next_cube_id = 1;

    bool active() const { return phase == Phase::Presenting || phase == Phase::Building; }
    const TaskSpec& task() const { return tasks.at(current); }
    const TaskRecord& record() const { return records.back(); }
    std::size_t event_count() const { return records.empty() ? 0 : records.back().events.size(); }
};

namespace detail {

inline void present_task(SessionState& s, std::size_t index) {
    s.current = index;
    s.phase = Phase::Presenting;
    const auto& spec = s.tasks.at(index);
    TaskRecord rec;
    rec.task_id = spec.task_id;
    rec.prototype_id = spec.prototype_id;
    rec.participant_code = s.participant_code;
    rec.group = s.group;
    rec.initial = spec.initial;
    rec.prototype = spec.prototype;
    s.records.push_back(std::move(rec));
    s.structure = spec.initial;
    s.cube_ids.clear();
    s.next_cube_id = 1;
    for (const auto& c : spec.initial) s.cube_ids[c] = c == kOrigin ? 0 : s.next_cube_id++;
}

} // namespace detail

inline SessionState start_session(std::string session_id, std::string participant_code, std::vector<TaskSpec> tasks,
                                  std::string group = {}) {
    if (tasks.empty()) throw Error(ErrorCode::InvalidLibrary, "no tasks");
    SessionState s;
    s.session_id = std::move(session_id);
    s.participant_code = std::move(participant_code);
    s.group = std::move(group);
    s.tasks = std::move(tasks);
    detail::present_task(s, 0);
    return s;
}

/// Validates and appends an event to the active record. A missing cube id
/// (negative) is filled in: a fresh id for connects, the occupant's id for
/// disconnects. Returns the stored event.
inline TaskEvent accept_event(SessionState& s, TaskEvent ev) {
    if (!s.active()) throw Error(ErrorCode::WrongPhase, std::string(to_string(s.phase)));
    auto& rec = s.records.back();
    if (!rec.events.empty() && !(ev.t > rec.events.back().t)) throw Error(ErrorCode::ZeroDt);
    if (!(ev.t > 0.0)) throw Error(ErrorCode::ZeroDt, "event at prototype onset");
    Polycube next = s.structure;
    apply_event(next, ev);
    if (ev.action == Action::Connect) {
        if (ev.cube_id < 0) ev.cube_id = s.next_cube_id;
        s.next_cube_id = std::max(s.next_cube_id, ev.cube_id + 1);
        s.cube_ids[ev.cell] = ev.cube_id;
    } else {
        if (ev.cube_id < 0) ev.cube_id = s.cube_ids.at(ev.cell);
        s.cube_ids.erase(ev.cell);
    }
    s.structure = std::move(next);
    rec.events.push_back(ev);
    s.phase = Phase::Building;
    return ev;
}

/// Seals the active record as completed and presents the next task.
inline SessionState advance(SessionState s) {
    if (!s.active()) throw Error(ErrorCode::NoActiveTask);
    s.records.back().outcome = Outcome::CompletedByParticipant;
    if (s.current + 1 < s.tasks.size()) {
        detail::present_task(s, s.current + 1);
    } else {
        s.phase = Phase::Done;
    }
    return s;
}

/// Seals the active record as stopped and ends the assessment.
inline SessionState abort_task(SessionState s) {
    if (!s.active()) throw Error(ErrorCode::NoActiveTask);
    s.records.back().outcome = Outcome::StoppedByAssessor;
    s.phase = Phase::Aborted;
    return s;
}

} // namespace cogcubes
