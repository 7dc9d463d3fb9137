#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "geometry.hpp"

namespace cogcubes {

using Json = nlohmann::ordered_json;

enum class Action { Connect, Disconnect };

constexpr std::string_view to_string(Action a) { return a == Action::Connect ? "connect" : "disconnect"; }

/// One participant action. `t` is seconds since the prototype appeared.
struct TaskEvent {
    double t = 0.0;
    Action action = Action::Connect;
    CubeCoord cell;
    int cube_id = 0;
    std::optional<double> client_t;

    friend bool operator==(const TaskEvent&, const TaskEvent&) = default;
};

enum class Outcome { InProgress, CompletedByParticipant, StoppedByAssessor };

constexpr std::string_view to_string(Outcome o) {
    switch (o) {
    case Outcome::CompletedByParticipant: return "completed";
    case Outcome::StoppedByAssessor: return "stopped";
    default: return "in_progress";
    }
}

struct TaskRecord {
    std::string task_id;
    std::string prototype_id;
    std::string participant_code;
    std::string group;                 // optional study group label
    Polycube initial{kOrigin};
    std::vector<TaskEvent> events;
    Outcome outcome = Outcome::InProgress;
    std::optional<Polycube> prototype; // embedded copy of the prototype, when known

    friend bool operator==(const TaskRecord&, const TaskRecord&) = default;
};

/// Rounds to the millisecond resolution used by event logs.
inline double round_ms(double seconds) { return std::round(seconds * 1000.0) / 1000.0; }

inline void check_initial(const Polycube& initial) {
    if (initial.empty()) throw Error(ErrorCode::EmptyShape, "initial structure");
    if (!initial.contains(kOrigin)) throw Error(ErrorCode::CellAbsent, "initial structure lacks the base cell");
    if (!is_connected(initial)) throw Error(ErrorCode::NotConnected, "initial structure");
}

/// Applies one event to a connected, base-rooted structure, enforcing the replay rules.
inline void apply_event(Polycube& state, const TaskEvent& ev) {
    if (ev.action == Action::Connect) {
        if (state.contains(ev.cell)) throw Error(ErrorCode::CellOccupied, "connect at occupied cell");
        if (!state.touches(ev.cell)) throw Error(ErrorCode::NotAdjacent, "connect not adjacent to structure");
        state.insert(ev.cell);
        return;
    }
    if (ev.cell == kOrigin) throw Error(ErrorCode::BaseRemoval);
    if (!state.contains(ev.cell)) throw Error(ErrorCode::CellAbsent, "disconnect of absent cell");
    if (!removal_keeps_connected(state, ev.cell))
        throw Error(ErrorCode::DisconnectsStructure, "removal would orphan cubes");
    state.erase(ev.cell);
}

/// Structure after every event, prefixed by the initial structure.
inline std::vector<Polycube> replay(const TaskRecord& record) {
    check_initial(record.initial);
    std::vector<Polycube> states;
    states.reserve(record.events.size() + 1);
    states.push_back(record.initial);
    Polycube state = record.initial;
    double last_t = 0.0;
    for (std::size_t i = 0; i < record.events.size(); ++i) {
        const auto& ev = record.events[i];
        if (!(ev.t >= last_t)) throw Error(ErrorCode::TimeOrder, "event " + std::to_string(i));
        last_t = ev.t;
        try {
            apply_event(state, ev);
        } catch (const Error& e) {
            throw Error(e.code(), "event " + std::to_string(i) + " " + std::string(to_string(ev.action)) + " " +
                                      std::to_string(ev.cell.x) + "," + std::to_string(ev.cell.y) + "," +
                                      std::to_string(ev.cell.z));
        }
        states.push_back(state);
    }
    return states;
}

// ---------------------------------------------------------------------------
// JSON Lines event log: header object, then one object per event.

inline Json cells_to_json(const Polycube& poly) {
    Json arr = Json::array();
    for (const auto& c : poly) arr.push_back({c.x, c.y, c.z});
    return arr;
}

inline Polycube cells_from_json(const Json& arr) {
    if (!arr.is_array()) throw Error(ErrorCode::ParseError, "cell list must be an array");
    std::vector<CubeCoord> cells;
    for (const auto& c : arr) {
        if (!c.is_array() || c.size() != 3) throw Error(ErrorCode::ParseError, "cell must be [x,y,z]");
        cells.push_back({c[0].get<int>(), c[1].get<int>(), c[2].get<int>()});
    }
    return Polycube(std::move(cells));
}

inline Outcome outcome_from_string(std::string_view s) {
    if (s == "completed") return Outcome::CompletedByParticipant;
    if (s == "stopped") return Outcome::StoppedByAssessor;
    if (s == "in_progress") return Outcome::InProgress;
    throw Error(ErrorCode::ParseError, "unknown outcome '" + std::string(s) + "'");
}

inline Action action_from_string(std::string_view s) {
    if (s == "connect") return Action::Connect;
    if (s == "disconnect") return Action::Disconnect;
    throw Error(ErrorCode::ParseError, "unknown action '" + std::string(s) + "'");
}

inline Json header_to_json(const TaskRecord& r) {
    Json j;
    j["task_id"] = r.task_id;
    j["prototype_id"] = r.prototype_id;
    j["participant_code"] = r.participant_code;
    if (!r.group.empty()) j["group"] = r.group;
    j["initial"] = cells_to_json(r.initial);
    j["outcome"] = std::string(to_string(r.outcome));
    if (r.prototype) j["prototype"] = cells_to_json(*r.prototype);
    return j;
}

inline Json event_to_json(const TaskEvent& ev) {
    Json j;
    j["t"] = ev.t;
    j["action"] = std::string(to_string(ev.action));
    j["x"] = ev.cell.x;
    j["y"] = ev.cell.y;
    j["z"] = ev.cell.z;
    j["cube_id"] = ev.cube_id;
    if (ev.client_t) j["client_t"] = *ev.client_t;
    return j;
}

inline TaskEvent event_from_json(const Json& j) {
    try {
        TaskEvent ev;
        ev.t = j.at("t").get<double>();
        ev.action = action_from_string(j.at("action").get<std::string>());
        ev.cell = {j.at("x").get<int>(), j.at("y").get<int>(), j.at("z").get<int>()};
        ev.cube_id = j.value("cube_id", 0);
        if (j.contains("client_t")) ev.client_t = j["client_t"].get<double>();
        return ev;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

inline TaskRecord header_from_json(const Json& j) {
    try {
        TaskRecord r;
        r.task_id = j.at("task_id").get<std::string>();
        r.prototype_id = j.value("prototype_id", std::string{});
        r.participant_code = j.value("participant_code", std::string{});
        r.group = j.value("group", std::string{});
        r.initial = j.contains("initial") ? cells_from_json(j["initial"]) : Polycube{kOrigin};
        r.outcome = outcome_from_string(j.value("outcome", std::string{"in_progress"}));
        if (j.contains("prototype")) r.prototype = cells_from_json(j["prototype"]);
        return r;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

inline std::string format_record(const TaskRecord& r) {
    std::string out = header_to_json(r).dump();
    out += '\n';
    for (const auto& ev : r.events) {
        out += event_to_json(ev).dump();
        out += '\n';
    }
    return out;
}

inline TaskRecord parse_record(std::istream& in) {
    std::string line;
    std::optional<TaskRecord> record;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!record) {
            record = header_from_json(j);
        } else {
            record->events.push_back(event_from_json(j));
        }
    }
    if (!record) throw Error(ErrorCode::ParseError, "empty event log");
    return *record;
}

inline TaskRecord parse_record(const std::string& text) {
    std::istringstream in(text);
    return parse_record(in);
}

inline TaskRecord load_record(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return parse_record(in);
}

inline void save_record(const std::filesystem::path& path, const TaskRecord& r) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << format_record(r);
}

} // namespace cogcubes
