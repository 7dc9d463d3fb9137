#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "network.hpp"
#include "record.hpp"
#include "similarity.hpp"
#include "tasks.hpp"

// Synthetic participants for fixtures and desk-scale studies.

namespace cogcubes {

enum class AgentKind { MonotoneBuilder, ErraticBuilder, SlowBuilder };

constexpr std::string_view to_string(AgentKind k) {
    switch (k) {
    case AgentKind::MonotoneBuilder: return "monotone";
    case AgentKind::ErraticBuilder: return "erratic";
    default: return "slow";
    }
}

inline AgentKind agent_kind_from_string(std::string_view s) {
    if (s == "monotone") return AgentKind::MonotoneBuilder;
    if (s == "erratic") return AgentKind::ErraticBuilder;
    if (s == "slow") return AgentKind::SlowBuilder;
    throw Error(ErrorCode::ParseError, "unknown agent kind '" + std::string(s) + "'");
}

struct AgentProfile {
    AgentKind kind = AgentKind::MonotoneBuilder;
    std::uint64_t seed = 1;
    double min_delay = 2.0; // seconds between actions, uniform
    double max_delay = 8.0;
    double mistake_rate = 0.35; // erratic only

    static AgentProfile defaults(AgentKind kind, std::uint64_t seed) {
        switch (kind) {
        case AgentKind::MonotoneBuilder: return {kind, seed, 2.0, 8.0, 0.0};
        case AgentKind::ErraticBuilder: return {kind, seed, 3.0, 10.0, 0.35};
        default: return {kind, seed, 6.0, 24.0, 0.0};
        }
    }
};

/// mt19937_64 with library-independent draws so logs are identical across
/// standard library implementations.
class AgentRng {
public:
    explicit AgentRng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) {
        const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

    bool chance(double p) { return uniform(0.0, 1.0) < p; }

private:
    std::mt19937_64 engine_;
};

struct Move {
    Action action;
    CubeCoord cell;
    Rational value; // similarity after the move
};

/// Every legal single action on a connected base-rooted structure, scored.
inline std::vector<Move> legal_moves(const Polycube& structure, const Polycube& prototype) {
    std::vector<CubeCoord> free_cells;
    for (const auto& c : structure)
        for (const auto& step : kFaceSteps) {
            const CubeCoord n = c + step;
            if (!structure.contains(n)) free_cells.push_back(n);
        }
    std::sort(free_cells.begin(), free_cells.end());
    free_cells.erase(std::unique(free_cells.begin(), free_cells.end()), free_cells.end());

    std::vector<Move> moves;
    for (const auto& c : free_cells) {
        Polycube next = structure;
        next.insert(c);
        moves.push_back({Action::Connect, c, best_similarity(next, prototype).value});
    }
    for (const auto& c : structure) {
        if (c == kOrigin || !removal_keeps_connected(structure, c)) continue;
        Polycube next = structure;
        next.erase(c);
        moves.push_back({Action::Disconnect, c, best_similarity(next, prototype).value});
    }
    return moves;
}

/// Plays one task. MonotoneBuilder and SlowBuilder only take moves that
/// strictly raise similarity; ErraticBuilder additionally makes deliberate
/// wrong connections and undoes them on the next action.
inline TaskRecord simulate_task(const TaskSpec& spec, const AgentProfile& profile, AgentRng& rng,
                                const std::string& participant_code) {
    TaskRecord rec;
    rec.task_id = spec.task_id;
    rec.prototype_id = spec.prototype_id;
    rec.participant_code = participant_code;
    rec.group = std::string(to_string(profile.kind));
    rec.initial = spec.initial;
    rec.prototype = spec.prototype;
    rec.outcome = Outcome::CompletedByParticipant;

    Polycube structure = spec.initial;
    std::map<CubeCoord, int> ids;
    int next_id = 1;
    for (const auto& c : structure) ids[c] = c == kOrigin ? 0 : next_id++;

    const Rational full(100, 1);
    Rational value = best_similarity(structure, spec.prototype).value;
    double t = 0.0;
    int mistakes = 0;
    bool improved_once = false;
    std::optional<CubeCoord> pending_undo;
    const std::size_t step_limit = 4 * (spec.prototype.size() + spec.initial.size()) + 16;

    auto emit = [&](Action action, const CubeCoord& cell, const Rational& new_value) {
        t = round_ms(t + rng.uniform(profile.min_delay, profile.max_delay));
        int id;
        if (action == Action::Connect) {
            id = next_id++;
            ids[cell] = id;
            structure.insert(cell);
        } else {
            id = ids.at(cell);
            ids.erase(cell);
            structure.erase(cell);
        }
        rec.events.push_back({t, action, cell, id, std::nullopt});
        value = new_value;
    };

    for (std::size_t step = 0; step < step_limit; ++step) {
        if (pending_undo) {
            Polycube next = structure;
            next.erase(*pending_undo);
            emit(Action::Disconnect, *pending_undo, best_similarity(next, spec.prototype).value);
            pending_undo.reset();
            continue;
        }
        if (value == full) break;
        const auto moves = legal_moves(structure, spec.prototype);

        if (profile.kind == AgentKind::ErraticBuilder && improved_once && mistakes < 3) {
            const bool forced = mistakes == 0;
            if (forced || rng.chance(profile.mistake_rate)) {
                std::vector<const Move*> worse;
                for (const auto& m : moves)
                    if (m.action == Action::Connect && m.value < value) worse.push_back(&m);
                if (!worse.empty()) {
                    const Move& m = *worse[rng.index(worse.size())];
                    emit(m.action, m.cell, m.value);
                    pending_undo = m.cell;
                    ++mistakes;
                    continue;
                }
            }
        }

        std::vector<const Move*> better;
        for (const auto& m : moves)
            if (m.value > value) better.push_back(&m);
        if (better.empty()) break;
        const Move& m = *better[rng.index(better.size())];
        emit(m.action, m.cell, m.value);
        improved_once = true;
    }
    if (value != full) rec.outcome = Outcome::StoppedByAssessor;
    return rec;
}

inline std::vector<TaskRecord> simulate_session(std::span<const TaskSpec> tasks, const AgentProfile& profile,
                                                const std::string& participant_code) {
    AgentRng rng(profile.seed);
    std::vector<TaskRecord> out;
    for (const auto& spec : tasks) out.push_back(simulate_task(spec, profile, rng, participant_code));
    return out;
}

/// Drives the network simulator with a record's actions. The initial
/// structure is assembled by build_network and is not part of the returned
/// stream; a discovery snapshot closes it.
inline std::vector<NetEvent> to_network_stream(const TaskRecord& record, bool closing_scan = true) {
    CubeNetwork net = build_network(record.initial);
    const std::size_t setup = net.log().size();
    for (const auto& ev : record.events) {
        if (ev.action == Action::Connect) {
            std::optional<std::pair<int, Face>> host;
            for (Face f : kAllFaces) {
                if (auto id = net.cube_at(ev.cell + face_step(opposite(f)))) {
                    host = {{*id, f}};
                    break;
                }
            }
            if (!host) throw Error(ErrorCode::NotAdjacent);
            net.attach(host->first, host->second, ev.t);
        } else {
            auto id = net.cube_at(ev.cell);
            if (!id) throw Error(ErrorCode::CellAbsent);
            net.detach(*id, ev.t);
        }
    }
    if (closing_scan) net.scan(record.events.empty() ? 0.0 : record.events.back().t);
    return {net.log().begin() + static_cast<std::ptrdiff_t>(setup), net.log().end()};
}

} // namespace cogcubes
