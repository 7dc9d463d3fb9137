#pragma once

#include <algorithm>
#include <array>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "geometry.hpp"
#include "record.hpp"

// Simulated cube network: cubes snap together face to face, the host learns
// the topology through a broadcast scan, and the topology alone determines
// the collective shape. All cubes share the global orientation.

namespace cogcubes {

enum class Face { PosX = 0, NegX, PosY, NegY, PosZ, NegZ };

inline constexpr std::array<Face, 6> kAllFaces{Face::PosX, Face::NegX, Face::PosY,
                                               Face::NegY, Face::PosZ, Face::NegZ};

constexpr int face_index(Face f) { return static_cast<int>(f); }
constexpr Face opposite(Face f) { return static_cast<Face>(face_index(f) ^ 1); }
constexpr CubeCoord face_step(Face f) { return kFaceSteps[static_cast<std::size_t>(face_index(f))]; }

constexpr std::string_view to_string(Face f) {
    constexpr std::array<std::string_view, 6> names{"+X", "-X", "+Y", "-Y", "+Z", "-Z"};
    return names[static_cast<std::size_t>(face_index(f))];
}

inline Face face_from_string(std::string_view s) {
    for (Face f : kAllFaces)
        if (to_string(f) == s) return f;
    throw Error(ErrorCode::ParseError, "unknown face '" + std::string(s) + "'");
}

inline constexpr int kBaseCubeId = 0;

struct CubeUnit {
    int cube_id = 0;
    std::array<int, 6> face_ids{}; // indexed by Face

    friend bool operator==(const CubeUnit&, const CubeUnit&) = default;
};

/// Unit with system-unique face ids derived from the cube id.
inline CubeUnit make_cube_unit(int cube_id) {
    CubeUnit u{cube_id, {}};
    for (int k = 0; k < 6; ++k) u.face_ids[static_cast<std::size_t>(k)] = cube_id * 6 + k;
    return u;
}

struct FaceRef {
    int cube_id = 0;
    Face face = Face::PosX;

    friend auto operator<=>(const FaceRef&, const FaceRef&) = default;
};

/// Unordered pair of faces; stored with a <= b.
struct Link {
    FaceRef a;
    FaceRef b;

    Link() = default;
    Link(FaceRef x, FaceRef y) : a(std::min(x, y)), b(std::max(x, y)) {}

    friend auto operator<=>(const Link&, const Link&) = default;
};

struct TopologyGraph {
    std::map<int, CubeUnit> cubes{{kBaseCubeId, make_cube_unit(kBaseCubeId)}};
    std::set<Link> links;

    bool has_cube(int id) const { return cubes.count(id) != 0; }

    std::optional<FaceRef> linked_to(FaceRef f) const {
        for (const auto& l : links) {
            if (l.a == f) return l.b;
            if (l.b == f) return l.a;
        }
        return std::nullopt;
    }

    /// Neighbors of a cube ordered by its local face.
    std::vector<std::pair<Face, FaceRef>> neighbors(int cube_id) const {
        std::vector<std::pair<Face, FaceRef>> out;
        for (Face f : kAllFaces)
            if (auto other = linked_to({cube_id, f})) out.emplace_back(f, *other);
        return out;
    }
};

enum class NetEventKind { Connect, Disconnect, DiscoveryReply };

constexpr std::string_view to_string(NetEventKind k) {
    switch (k) {
    case NetEventKind::Connect: return "connect";
    case NetEventKind::Disconnect: return "disconnect";
    default: return "discovery";
    }
}

struct NetEvent {
    double t = 0.0;
    NetEventKind kind = NetEventKind::Connect;
    int cube_id = 0;
    CubeCoord cell;
    // Connect only: the host face and the new cube's mating face.
    std::optional<FaceRef> host_face;
    std::optional<Face> mating_face;
    std::array<int, 2> face_ids{-1, -1};

    friend bool operator==(const NetEvent&, const NetEvent&) = default;
};

struct ReconstructedShape {
    Polycube cells;
    std::map<int, CubeCoord> cell_of; // cube_id -> cell, injective
};

/// Cube ids reachable from the base, in breadth-first order with neighbors
/// visited by local face order.
inline std::vector<int> broadcast_scan(const TopologyGraph& graph) {
    std::vector<int> order{kBaseCubeId};
    std::set<int> seen{kBaseCubeId};
    for (std::size_t head = 0; head < order.size(); ++head) {
        for (const auto& [face, other] : graph.neighbors(order[head])) {
            if (!graph.has_cube(other.cube_id)) continue;
            if (seen.insert(other.cube_id).second) order.push_back(other.cube_id);
        }
    }
    return order;
}

/// Breadth-first placement from the base at the origin: a link on face +d of
/// a placed cube puts its neighbor at cell + unit(d).
inline ReconstructedShape reconstruct_shape(const TopologyGraph& graph) {
    for (const auto& l : graph.links) {
        if (!graph.has_cube(l.a.cube_id) || !graph.has_cube(l.b.cube_id))
            throw Error(ErrorCode::DanglingLink, "link references absent cube");
        if (l.b.face != opposite(l.a.face) || l.a.cube_id == l.b.cube_id)
            throw Error(ErrorCode::Collision, "linked faces are not opposite");
    }
    ReconstructedShape out;
    std::map<CubeCoord, int> owner{{kOrigin, kBaseCubeId}};
    out.cell_of[kBaseCubeId] = kOrigin;
    std::deque<int> queue{kBaseCubeId};
    while (!queue.empty()) {
        const int id = queue.front();
        queue.pop_front();
        const CubeCoord here = out.cell_of.at(id);
        for (const auto& [face, other] : graph.neighbors(id)) {
            const CubeCoord there = here + face_step(face);
            auto placed = out.cell_of.find(other.cube_id);
            if (placed != out.cell_of.end()) {
                if (placed->second != there)
                    throw Error(ErrorCode::Collision, "cube " + std::to_string(other.cube_id) + " demanded at two cells");
                continue;
            }
            auto [it, fresh] = owner.emplace(there, other.cube_id);
            if (!fresh)
                throw Error(ErrorCode::Collision, "cubes " + std::to_string(it->second) + " and " +
                                                      std::to_string(other.cube_id) + " demand one cell");
            out.cell_of[other.cube_id] = there;
            queue.push_back(other.cube_id);
        }
    }
    std::vector<CubeCoord> cells;
    for (const auto& [id, c] : out.cell_of) cells.push_back(c);
    out.cells = Polycube(std::move(cells));
    return out;
}

struct AttachResult {
    TopologyGraph graph;
    NetEvent event;
    CubeCoord cell;
};

inline AttachResult attach(const TopologyGraph& graph, const CubeUnit& new_cube, int host_cube_id, Face host_face,
                           double t = 0.0) {
    if (!graph.has_cube(host_cube_id)) throw Error(ErrorCode::HostUnreachable, "unknown host cube");
    const auto shape = reconstruct_shape(graph);
    const auto host_cell = shape.cell_of.find(host_cube_id);
    if (host_cell == shape.cell_of.end()) throw Error(ErrorCode::HostUnreachable, "host not reachable from base");
    if (graph.has_cube(new_cube.cube_id)) throw Error(ErrorCode::Collision, "cube id already attached");
    if (graph.linked_to({host_cube_id, host_face})) throw Error(ErrorCode::FaceOccupied);
    const CubeCoord cell = host_cell->second + face_step(host_face);
    if (shape.cells.contains(cell)) throw Error(ErrorCode::CellOccupied);

    AttachResult out{graph, {}, cell};
    out.graph.cubes[new_cube.cube_id] = new_cube;
    const FaceRef host{host_cube_id, host_face};
    const Face mating = opposite(host_face);
    out.graph.links.insert(Link{host, {new_cube.cube_id, mating}});
    const auto& host_unit = graph.cubes.at(host_cube_id);
    out.event = NetEvent{t,   NetEventKind::Connect, new_cube.cube_id, cell, host, mating,
                         {host_unit.face_ids[static_cast<std::size_t>(face_index(host_face))],
                          new_cube.face_ids[static_cast<std::size_t>(face_index(mating))]}};
    return out;
}

struct DetachResult {
    TopologyGraph graph;
    std::vector<NetEvent> events;
};

/// Removes a cube and every cube that loses its path to the base. Events come
/// leaves first (decreasing hop distance from the base, then cube id) so each
/// prefix is a valid removal sequence.
inline DetachResult detach(const TopologyGraph& graph, int cube_id, double t = 0.0) {
    if (cube_id == kBaseCubeId) throw Error(ErrorCode::BaseRemoval);
    if (!graph.has_cube(cube_id)) throw Error(ErrorCode::UnknownCube);
    const auto shape = reconstruct_shape(graph);

    std::map<int, int> distance{{kBaseCubeId, 0}};
    for (int id : broadcast_scan(graph)) {
        for (const auto& [face, other] : graph.neighbors(id))
            if (!distance.count(other.cube_id)) distance[other.cube_id] = distance[id] + 1;
    }

    DetachResult out{graph, {}};
    for (auto it = out.graph.links.begin(); it != out.graph.links.end();) {
        if (it->a.cube_id == cube_id || it->b.cube_id == cube_id)
            it = out.graph.links.erase(it);
        else
            ++it;
    }
    out.graph.cubes.erase(cube_id);
    const auto still = broadcast_scan(out.graph);
    const std::set<int> reachable(still.begin(), still.end());

    std::vector<int> removed{cube_id};
    for (const auto& [id, unit] : graph.cubes)
        if (id != cube_id && !reachable.count(id)) removed.push_back(id);
    for (int id : removed) {
        out.graph.cubes.erase(id);
        for (auto it = out.graph.links.begin(); it != out.graph.links.end();) {
            if (it->a.cube_id == id || it->b.cube_id == id)
                it = out.graph.links.erase(it);
            else
                ++it;
        }
    }

    // Cubes that were already unreachable before the detach have no cell and emit nothing.
    std::vector<int> emitted;
    for (int id : removed)
        if (shape.cell_of.count(id)) emitted.push_back(id);
    std::sort(emitted.begin(), emitted.end(), [&](int a, int b) {
        if (distance.at(a) != distance.at(b)) return distance.at(a) > distance.at(b);
        return a < b;
    });
    for (int id : emitted) out.events.push_back(NetEvent{t, NetEventKind::Disconnect, id, shape.cell_of.at(id), std::nullopt, std::nullopt, {-1, -1}});
    return out;
}

/// One DiscoveryReply per reachable cube, in scan order.
inline std::vector<NetEvent> discovery_snapshot(const TopologyGraph& graph, double t) {
    const auto shape = reconstruct_shape(graph);
    std::vector<NetEvent> out;
    for (int id : broadcast_scan(graph))
        out.push_back(NetEvent{t, NetEventKind::DiscoveryReply, id, shape.cell_of.at(id), std::nullopt, std::nullopt, {-1, -1}});
    return out;
}

/// Links every free face of `cube_id` to a geometrically touching free face,
/// the way snap connectors close on their own when a cube is pushed into a
/// corner of the structure.
inline TopologyGraph snap_adjacent(TopologyGraph graph, int cube_id) {
    const auto shape = reconstruct_shape(graph);
    const auto here = shape.cell_of.find(cube_id);
    if (here == shape.cell_of.end()) return graph;
    for (Face f : kAllFaces) {
        if (graph.linked_to({cube_id, f})) continue;
        const CubeCoord there = here->second + face_step(f);
        for (const auto& [other, cell] : shape.cell_of) {
            if (cell != there) continue;
            if (!graph.linked_to({other, opposite(f)})) graph.links.insert(Link{{cube_id, f}, {other, opposite(f)}});
            break;
        }
    }
    return graph;
}

/// Single-owner simulator state machine over a topology graph.
class CubeNetwork {
public:
    CubeNetwork() = default;
    explicit CubeNetwork(bool snap) : snap_(snap) {}

    const TopologyGraph& graph() const noexcept { return graph_; }
    const std::vector<NetEvent>& log() const noexcept { return log_; }
    int next_cube_id() const noexcept { return next_id_; }

    /// Attaches a fresh cube to `host_face` of `host`; returns the new cube id.
    int attach(int host, Face host_face, double t) {
        const CubeUnit unit = make_cube_unit(next_id_);
        auto result = cogcubes::attach(graph_, unit, host, host_face, t);
        graph_ = snap_ ? snap_adjacent(std::move(result.graph), unit.cube_id) : std::move(result.graph);
        log_.push_back(result.event);
        return next_id_++;
    }

    std::vector<NetEvent> detach(int cube_id, double t) {
        auto result = cogcubes::detach(graph_, cube_id, t);
        graph_ = std::move(result.graph);
        log_.insert(log_.end(), result.events.begin(), result.events.end());
        return result.events;
    }

    void scan(double t) {
        const auto snapshot = discovery_snapshot(graph_, t);
        log_.insert(log_.end(), snapshot.begin(), snapshot.end());
    }

    ReconstructedShape shape() const { return reconstruct_shape(graph_); }

    /// Cube occupying `cell`, if any.
    std::optional<int> cube_at(const CubeCoord& cell) const {
        for (const auto& [id, c] : shape().cell_of)
            if (c == cell) return id;
        return std::nullopt;
    }

private:
    TopologyGraph graph_;
    std::vector<NetEvent> log_;
    int next_id_ = 1;
    bool snap_ = true;
};

/// Builds a base-rooted connected polycube cube by cube, breadth-first from
/// the origin, each cube attached to the face of its breadth-first parent.
inline CubeNetwork build_network(const Polycube& shape, double t0 = 0.0, double dt = 1.0, bool snap = true) {
    if (!shape.contains(kOrigin)) throw Error(ErrorCode::CellAbsent, "shape lacks the base cell");
    CubeNetwork net(snap);
    std::map<CubeCoord, int> id_of{{kOrigin, kBaseCubeId}};
    std::deque<CubeCoord> queue{kOrigin};
    double t = t0;
    while (!queue.empty()) {
        const CubeCoord cur = queue.front();
        queue.pop_front();
        for (Face f : kAllFaces) {
            const CubeCoord next = cur + face_step(f);
            if (!shape.contains(next) || id_of.count(next)) continue;
            t += dt;
            id_of[next] = net.attach(id_of.at(cur), f, round_ms(t));
            queue.push_back(next);
        }
    }
    if (id_of.size() != shape.size()) throw Error(ErrorCode::NotConnected);
    return net;
}

// ---------------------------------------------------------------------------
// Stream conversion, auditing, and fault injection

/// Strips network fields and discovery replies, leaving a measures-module event list.
inline std::vector<TaskEvent> to_task_events(std::span<const NetEvent> stream) {
    std::vector<TaskEvent> out;
    for (const auto& ev : stream) {
        if (ev.kind == NetEventKind::DiscoveryReply) continue;
        out.push_back(TaskEvent{ev.t, ev.kind == NetEventKind::Connect ? Action::Connect : Action::Disconnect,
                                ev.cell, ev.cube_id, std::nullopt});
    }
    return out;
}

/// Replays a network stream from `initial` (cube ids assigned as by
/// build_network), checking every action
/// against the rigid-grid rules and every run of discovery replies against the
/// replayed state. Throws on the first inconsistency.
inline void audit_stream(std::span<const NetEvent> stream, const Polycube& initial = Polycube{kOrigin}) {
    Polycube state = initial;
    std::map<int, CubeCoord> cell_of = build_network(initial).shape().cell_of;
    double last_t = 0.0;
    std::size_t i = 0;
    auto fail = [&](ErrorCode code, const std::string& what) {
        throw Error(code, "event " + std::to_string(i) + ": " + what);
    };
    while (i < stream.size()) {
        const NetEvent& ev = stream[i];
        if (!(ev.t >= last_t)) fail(ErrorCode::TimeOrder, "time went backwards");
        last_t = ev.t;
        if (ev.kind == NetEventKind::DiscoveryReply) {
            std::map<int, CubeCoord> seen;
            while (i < stream.size() && stream[i].kind == NetEventKind::DiscoveryReply) {
                if (!seen.emplace(stream[i].cube_id, stream[i].cell).second)
                    fail(ErrorCode::SnapshotMismatch, "cube reported twice");
                ++i;
            }
            if (seen != cell_of) fail(ErrorCode::SnapshotMismatch, "discovered topology differs from replayed state");
            continue;
        }
        const TaskEvent te{ev.t, ev.kind == NetEventKind::Connect ? Action::Connect : Action::Disconnect, ev.cell,
                           ev.cube_id, std::nullopt};
        auto apply = [&] {
            try {
                apply_event(state, te);
            } catch (const Error& e) {
                fail(e.code(), std::string(to_string(ev.kind)));
            }
        };
        if (ev.kind == NetEventKind::Connect) {
            if (!ev.host_face) fail(ErrorCode::ParseError, "connect without host face");
            auto host = cell_of.find(ev.host_face->cube_id);
            if (host == cell_of.end()) fail(ErrorCode::DanglingLink, "host cube absent");
            if (cell_of.count(ev.cube_id)) fail(ErrorCode::CellOccupied, "cube already attached");
            if (host->second + face_step(ev.host_face->face) != ev.cell)
                fail(ErrorCode::Collision, "cell inconsistent with host face");
            apply();
            cell_of[ev.cube_id] = ev.cell;
        } else {
            auto it = cell_of.find(ev.cube_id);
            if (it == cell_of.end()) fail(ErrorCode::UnknownCube, "disconnect of absent cube");
            if (it->second != ev.cell) fail(ErrorCode::Collision, "cube reported at wrong cell");
            apply();
            cell_of.erase(it);
        }
        ++i;
    }
}

struct Drop {
    std::size_t index;
};
struct Duplicate {
    std::size_t index;
};
struct Swap {
    std::size_t first;
    std::size_t second;
};
using Fault = std::variant<Drop, Duplicate, Swap>;

/// Perturbs a stream. Swap exchanges event payloads but keeps the time slots,
/// so timestamps stay non-decreasing.
inline std::vector<NetEvent> inject_fault(std::vector<NetEvent> stream, const Fault& fault) {
    std::visit(
        [&](const auto& f) {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, Drop>) {
                stream.erase(stream.begin() + static_cast<std::ptrdiff_t>(f.index));
            } else if constexpr (std::is_same_v<F, Duplicate>) {
                stream.insert(stream.begin() + static_cast<std::ptrdiff_t>(f.index) + 1, stream[f.index]);
            } else {
                const double t1 = stream[f.first].t;
                const double t2 = stream[f.second].t;
                std::swap(stream[f.first], stream[f.second]);
                stream[f.first].t = t1;
                stream[f.second].t = t2;
            }
        },
        fault);
    return stream;
}

inline Json net_event_to_json(const NetEvent& ev) {
    Json j;
    j["t"] = ev.t;
    j["action"] = std::string(to_string(ev.kind));
    j["x"] = ev.cell.x;
    j["y"] = ev.cell.y;
    j["z"] = ev.cell.z;
    j["cube_id"] = ev.cube_id;
    if (ev.host_face && ev.mating_face) {
        j["face"] = {{"host_cube", ev.host_face->cube_id},
                     {"host_face", std::string(to_string(ev.host_face->face))},
                     {"mating_face", std::string(to_string(*ev.mating_face))},
                     {"face_ids", {ev.face_ids[0], ev.face_ids[1]}}};
    }
    return j;
}

inline NetEvent net_event_from_json(const Json& j) {
    try {
        NetEvent ev;
        ev.t = j.at("t").get<double>();
        const auto action = j.at("action").get<std::string>();
        if (action == "connect")
            ev.kind = NetEventKind::Connect;
        else if (action == "disconnect")
            ev.kind = NetEventKind::Disconnect;
        else if (action == "discovery")
            ev.kind = NetEventKind::DiscoveryReply;
        else
            throw Error(ErrorCode::ParseError, "unknown action '" + action + "'");
        ev.cell = {j.at("x").get<int>(), j.at("y").get<int>(), j.at("z").get<int>()};
        ev.cube_id = j.at("cube_id").get<int>();
        if (j.contains("face")) {
            const auto& f = j["face"];
            ev.host_face = FaceRef{f.at("host_cube").get<int>(), face_from_string(f.at("host_face").get<std::string>())};
            ev.mating_face = face_from_string(f.at("mating_face").get<std::string>());
            if (f.contains("face_ids")) ev.face_ids = {f["face_ids"][0].get<int>(), f["face_ids"][1].get<int>()};
        }
        return ev;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

inline std::string format_net_stream(std::span<const NetEvent> stream) {
    std::string out;
    for (const auto& ev : stream) {
        out += net_event_to_json(ev).dump();
        out += '\n';
    }
    return out;
}

inline std::vector<NetEvent> parse_net_stream(std::istream& in) {
    std::vector<NetEvent> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(net_event_from_json(Json::parse(line)));
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::ParseError, e.what());
        }
    }
    return out;
}

} // namespace cogcubes
