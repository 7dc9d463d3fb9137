#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "record.hpp"
#include "shape_io.hpp"
#include "similarity.hpp"

namespace cogcubes {

inline constexpr std::size_t kMaxPrototypeCubes = 10;
inline constexpr std::size_t kReshapeInitialCubes = 7;
inline constexpr double kPrototypeRotationRpm = 2.7;

enum class TaskKind { Intro, Follow, Match, Reshape };

constexpr std::string_view to_string(TaskKind k) {
    switch (k) {
    case TaskKind::Intro: return "intro";
    case TaskKind::Follow: return "follow";
    case TaskKind::Match: return "match";
    default: return "reshape";
    }
}

inline TaskKind task_kind_from_string(std::string_view s) {
    if (s == "intro") return TaskKind::Intro;
    if (s == "follow") return TaskKind::Follow;
    if (s == "match") return TaskKind::Match;
    if (s == "reshape") return TaskKind::Reshape;
    throw Error(ErrorCode::ParseError, "unknown task kind '" + std::string(s) + "'");
}

constexpr bool is_guided(TaskKind k) { return k == TaskKind::Intro || k == TaskKind::Follow; }

/// Seven cells of the 2x2x2 block anchored at the base, minus the far corner.
inline Polycube default_reshape_initial() {
    return Polycube{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0, 0, 1}, {1, 0, 1}, {0, 1, 1}};
}

struct TaskSpec {
    std::string task_id;
    TaskKind kind = TaskKind::Match;
    std::string prototype_id;
    Polycube prototype;
    Polycube initial{kOrigin};
    bool guided = false;
};

inline TaskSpec make_task(std::string task_id, TaskKind kind, Polycube prototype, std::string prototype_id = {},
                          std::optional<Polycube> reshape_initial = std::nullopt) {
    TaskSpec spec;
    spec.task_id = std::move(task_id);
    spec.kind = kind;
    spec.prototype_id = prototype_id.empty() ? spec.task_id : std::move(prototype_id);
    spec.prototype = std::move(prototype);
    spec.initial = kind == TaskKind::Reshape ? reshape_initial.value_or(default_reshape_initial()) : Polycube{kOrigin};
    spec.guided = is_guided(kind);
    return spec;
}

enum class Violation {
    EmptyPrototype,
    TooManyCubes,
    NotConnected,
    PrototypeMissingBase,
    InitialMissingBase,
    InitialNotConnected,
    InitialNotBaseOnly,
    ReshapeInitialSize,
    ReshapeInitialNotThreeD,
    GuidanceMismatch,
};

constexpr std::string_view to_string(Violation v) {
    switch (v) {
    case Violation::EmptyPrototype: return "EmptyPrototype";
    case Violation::TooManyCubes: return "TooManyCubes";
    case Violation::NotConnected: return "NotConnected";
    case Violation::PrototypeMissingBase: return "PrototypeMissingBase";
    case Violation::InitialMissingBase: return "InitialMissingBase";
    case Violation::InitialNotConnected: return "InitialNotConnected";
    case Violation::InitialNotBaseOnly: return "InitialNotBaseOnly";
    case Violation::ReshapeInitialSize: return "ReshapeInitialSize";
    case Violation::ReshapeInitialNotThreeD: return "ReshapeInitialNotThreeD";
    default: return "GuidanceMismatch";
    }
}

/// Every invariant a task must satisfy; an empty result means valid.
inline std::vector<Violation> validate_task(const TaskSpec& spec) {
    std::vector<Violation> out;
    if (spec.prototype.empty()) {
        out.push_back(Violation::EmptyPrototype);
    } else {
        if (spec.prototype.size() > kMaxPrototypeCubes) out.push_back(Violation::TooManyCubes);
        if (!is_connected(spec.prototype)) out.push_back(Violation::NotConnected);
        if (!spec.prototype.contains(kOrigin)) out.push_back(Violation::PrototypeMissingBase);
    }
    if (spec.initial.empty() || !spec.initial.contains(kOrigin)) out.push_back(Violation::InitialMissingBase);
    if (!spec.initial.empty() && !is_connected(spec.initial)) out.push_back(Violation::InitialNotConnected);
    if (spec.kind == TaskKind::Reshape) {
        if (spec.initial.size() != kReshapeInitialCubes) out.push_back(Violation::ReshapeInitialSize);
        if (!spec.initial.empty() && shape_type(spec.initial) != ShapeType::ThreeD)
            out.push_back(Violation::ReshapeInitialNotThreeD);
    } else if (spec.initial != Polycube{kOrigin}) {
        out.push_back(Violation::InitialNotBaseOnly);
    }
    if (spec.guided != is_guided(spec.kind)) out.push_back(Violation::GuidanceMismatch);
    return out;
}

struct Guidance {
    CubeCoord cell;
    Action action = Action::Connect; // Disconnect signals removal guidance
};

namespace detail {

constexpr bool zyx_less(const CubeCoord& a, const CubeCoord& b) {
    if (a.z != b.z) return a.z < b.z;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
}

} // namespace detail

/// Next cube to show for a guided task, with the prototype anchored at the
/// base cell and unrotated. Removable extra cells come first; when every
/// extra cell is a bridge, the next addition is suggested instead. Ties are
/// broken by smallest (z, y, x).
inline std::optional<Guidance> next_guidance_cube(const TaskSpec& spec, const Polycube& current) {
    if (!spec.guided) throw Error(ErrorCode::NotGuidedTask);
    if (best_similarity(current, spec.prototype).value == Rational(100, 1)) return std::nullopt;

    std::optional<CubeCoord> removal;
    for (const auto& c : current) {
        if (spec.prototype.contains(c) || c == kOrigin || !removal_keeps_connected(current, c)) continue;
        if (!removal || detail::zyx_less(c, *removal)) removal = c;
    }
    if (removal) return Guidance{*removal, Action::Disconnect};

    std::optional<CubeCoord> addition;
    for (const auto& c : spec.prototype) {
        if (current.contains(c) || !current.touches(c)) continue;
        if (!addition || detail::zyx_less(c, *addition)) addition = c;
    }
    if (addition) return Guidance{*addition, Action::Connect};
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Task library file (JSON):
//   {"tasks": [{"task_id": "m1", "kind": "match", "prototype": "prototypes/m1.txt",
//               "initial": "reshape_default.txt"}]}
// Paths are relative to the library file. "initial" applies to reshape tasks
// and defaults to the built-in 7-cube construct.

struct TaskLibrary {
    std::filesystem::path source;
    std::vector<TaskSpec> tasks;
};

inline TaskLibrary load_library(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidLibrary, "cannot open " + path.string());
    TaskLibrary lib{path, {}};
    const auto dir = path.parent_path();
    try {
        const Json doc = Json::parse(in);
        for (const auto& t : doc.at("tasks")) {
            const auto kind = task_kind_from_string(t.at("kind").get<std::string>());
            const auto proto = load_prototype(dir / t.at("prototype").get<std::string>());
            std::optional<Polycube> initial;
            if (t.contains("initial")) initial = load_prototype(dir / t["initial"].get<std::string>()).cells;
            lib.tasks.push_back(make_task(t.at("task_id").get<std::string>(), kind, proto.cells, proto.id, initial));
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::InvalidLibrary, e.what());
    } catch (const Error& e) {
        throw Error(ErrorCode::InvalidLibrary, e.what());
    }
    if (lib.tasks.empty()) throw Error(ErrorCode::InvalidLibrary, "library has no tasks");
    for (const auto& spec : lib.tasks) {
        const auto violations = validate_task(spec);
        if (!violations.empty())
            throw Error(ErrorCode::InvalidLibrary,
                        "task " + spec.task_id + ": " + std::string(to_string(violations.front())));
    }
    return lib;
}

inline Json task_to_json(const TaskSpec& spec) {
    Json j;
    j["task_id"] = spec.task_id;
    j["kind"] = std::string(to_string(spec.kind));
    j["prototype_id"] = spec.prototype_id;
    j["prototype"] = cells_to_json(spec.prototype);
    j["initial"] = cells_to_json(spec.initial);
    j["guided"] = spec.guided;
    return j;
}

inline TaskSpec task_from_json(const Json& j) {
    try {
        TaskSpec spec;
        spec.task_id = j.at("task_id").get<std::string>();
        spec.kind = task_kind_from_string(j.at("kind").get<std::string>());
        spec.prototype_id = j.value("prototype_id", spec.task_id);
        spec.prototype = cells_from_json(j.at("prototype"));
        spec.initial = cells_from_json(j.at("initial"));
        spec.guided = j.value("guided", is_guided(spec.kind));
        return spec;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

} // namespace cogcubes
