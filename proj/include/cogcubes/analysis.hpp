#pragma once

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "measures.hpp"
#include "record.hpp"
#include "similarity.hpp"
#include "tasks.hpp"

namespace cogcubes {

// ---------------------------------------------------------------------------
// Statistics

/// Sample Pearson correlation coefficient.
inline double pearson_r(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw Error(ErrorCode::LengthMismatch);
    if (xs.size() < 3) throw Error(ErrorCode::InsufficientData, "need at least 3 pairs");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::ZeroVariance);
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0; // sample (n - 1) standard deviation; 0 for a single value
};

inline MeanSd mean_sd(std::span<const double> v) {
    if (v.empty()) throw Error(ErrorCode::EmptyTable);
    MeanSd out;
    for (double x : v) out.mean += x;
    out.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - out.mean) * (x - out.mean);
        out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Measure table

struct MeasureRow {
    std::string participant_code;
    std::string group;
    std::string task_id;
    TaskKind kind = TaskKind::Match;
    ShapeType shape = ShapeType::TwoD;
    MeasureSet measures;
};

using MeasureTable = std::vector<MeasureRow>;

enum class Factor { Participant, Group, Task, Kind, Shape };

constexpr std::string_view to_string(Factor f) {
    switch (f) {
    case Factor::Participant: return "participant_code";
    case Factor::Group: return "group";
    case Factor::Task: return "task_id";
    case Factor::Kind: return "kind";
    default: return "shape_type";
    }
}

inline Factor factor_from_string(std::string_view s) {
    for (Factor f : {Factor::Participant, Factor::Group, Factor::Task, Factor::Kind, Factor::Shape})
        if (to_string(f) == s) return f;
    if (s == "participant") return Factor::Participant;
    if (s == "task") return Factor::Task;
    if (s == "shape") return Factor::Shape;
    throw Error(ErrorCode::ParseError, "unknown factor '" + std::string(s) + "'");
}

inline std::string factor_value(const MeasureRow& row, Factor f) {
    switch (f) {
    case Factor::Participant: return row.participant_code;
    case Factor::Group: return row.group;
    case Factor::Task: return row.task_id;
    case Factor::Kind: return std::string(to_string(row.kind));
    default: return std::string(to_string(row.shape));
    }
}

struct GroupSummary {
    std::vector<std::string> key; // one value per factor
    std::size_t n = 0;
    MeanSd similarity;
    MeanSd last_connect;
    MeanSd derivative;
    MeanSd zero_crossings;
};

/// Per-group mean and standard deviation of the four measures, groups in key order.
inline std::vector<GroupSummary> aggregate(const MeasureTable& table, std::span<const Factor> by) {
    if (table.empty()) throw Error(ErrorCode::EmptyTable);
    std::map<std::vector<std::string>, std::vector<const MeasureRow*>> groups;
    for (const auto& row : table) {
        std::vector<std::string> key;
        for (Factor f : by) key.push_back(factor_value(row, f));
        groups[key].push_back(&row);
    }
    std::vector<GroupSummary> out;
    for (const auto& [key, rows] : groups) {
        std::vector<double> sim, last, der, zc;
        for (const auto* r : rows) {
            sim.push_back(r->measures.similarity);
            last.push_back(r->measures.last_connect);
            der.push_back(r->measures.derivative);
            zc.push_back(static_cast<double>(r->measures.zero_crossings));
        }
        out.push_back({key, rows.size(), mean_sd(sim), mean_sd(last), mean_sd(der), mean_sd(zc)});
    }
    return out;
}

/// Resolves the prototype a record was scored against.
using PrototypeLookup = std::function<Polycube(const TaskRecord&)>;

/// Uses the record's embedded prototype, else the id-keyed map.
inline PrototypeLookup prototype_lookup(std::map<std::string, Polycube> by_id = {}) {
    return [by_id = std::move(by_id)](const TaskRecord& r) -> Polycube {
        if (r.prototype) return *r.prototype;
        auto it = by_id.find(r.prototype_id);
        if (it == by_id.end()) throw Error(ErrorCode::IoError, "no prototype '" + r.prototype_id + "'");
        return it->second;
    };
}

inline TaskKind guess_kind(const TaskRecord& r) {
    if (r.initial.size() > 1) return TaskKind::Reshape;
    if (r.task_id.rfind("intro", 0) == 0) return TaskKind::Intro;
    if (r.task_id.rfind("follow", 0) == 0) return TaskKind::Follow;
    return TaskKind::Match;
}

inline MeasureRow measure_row(const TaskRecord& r, const Polycube& prototype, std::optional<TaskKind> kind = {}) {
    return {r.participant_code, r.group, r.task_id, kind.value_or(guess_kind(r)), shape_type(prototype),
            compute_measures(r, prototype)};
}

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string csv_row(std::initializer_list<std::string> fields) {
    std::string out;
    bool first = true;
    for (const auto& f : fields) {
        if (!first) out += ',';
        out += csv_field(f);
        first = false;
    }
    out += "\r\n";
    return out;
}

inline std::string measure_table_csv(const MeasureTable& table) {
    std::string out = csv_row({"participant_code", "group", "task_id", "kind", "shape_type", "similarity",
                               "last_connect", "derivative", "zero_crossings"});
    for (const auto& r : table)
        out += csv_row({r.participant_code, r.group, r.task_id, std::string(to_string(r.kind)),
                        std::string(to_string(r.shape)), format_number(r.measures.similarity),
                        format_number(r.measures.last_connect), format_number(r.measures.derivative),
                        std::to_string(r.measures.zero_crossings)});
    return out;
}

inline std::string aggregate_csv(std::span<const GroupSummary> groups, std::span<const Factor> by) {
    std::string out;
    std::vector<std::string> header;
    for (Factor f : by) header.emplace_back(to_string(f));
    for (const char* h : {"n", "similarity_mean", "similarity_sd", "last_connect_mean", "last_connect_sd",
                          "derivative_mean", "derivative_sd", "zero_crossings_mean", "zero_crossings_sd"})
        header.emplace_back(h);
    auto join = [](const std::vector<std::string>& fields) {
        std::string line;
        for (std::size_t i = 0; i < fields.size(); ++i) line += (i ? "," : "") + csv_field(fields[i]);
        return line + "\r\n";
    };
    out += join(header);
    for (const auto& g : groups) {
        std::vector<std::string> f = g.key;
        f.push_back(std::to_string(g.n));
        for (const MeanSd* m : {&g.similarity, &g.last_connect, &g.derivative, &g.zero_crossings}) {
            f.push_back(format_number(m->mean));
            f.push_back(format_number(m->sd));
        }
        out += join(f);
    }
    return out;
}

/// Long-format similarity curves: one row per trace point.
inline std::string export_curves(std::span<const TaskRecord> records, const PrototypeLookup& lookup) {
    std::string out = csv_row({"participant_code", "task_id", "t", "similarity"});
    for (const auto& r : records) {
        for (const auto& pt : similarity_trace(r, lookup(r)))
            out += csv_row({r.participant_code, r.task_id, format_number(pt.t), format_number(pt.value.to_double())});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Construction-sequence trees

struct SequenceNode {
    Polycube canonical;           // rotation-merged state
    Polycube raw;                 // first observed cell set for this node
    std::optional<Action> action; // edge label from the parent
    std::size_t count = 0;
    std::size_t depth = 0;
    std::vector<std::size_t> children;
};

/// Trie of canonical construction states; node 0 is the root.
struct SequenceTree {
    std::string task_id;
    std::vector<SequenceNode> nodes;

    const SequenceNode& root() const { return nodes.front(); }
};

inline SequenceTree build_sequence_tree(std::span<const TaskRecord> records) {
    if (records.empty()) throw Error(ErrorCode::EmptyTable, "no records");
    SequenceTree tree;
    tree.task_id = records.front().task_id;
    const Polycube root_form = canonical_form(records.front().initial);
    tree.nodes.push_back({root_form, records.front().initial, std::nullopt, 0, 0, {}});
    for (const auto& r : records) {
        if (r.task_id != tree.task_id) throw Error(ErrorCode::MixedTasks, r.task_id + " vs " + tree.task_id);
        if (canonical_form(r.initial) != root_form) throw Error(ErrorCode::MixedTasks, "initial structures differ");
        const auto states = replay(r);
        std::size_t node = 0;
        ++tree.nodes[0].count;
        for (std::size_t k = 0; k < r.events.size(); ++k) {
            const Polycube form = canonical_form(states[k + 1]);
            const Action action = r.events[k].action;
            std::size_t next = tree.nodes.size();
            for (std::size_t child : tree.nodes[node].children) {
                if (tree.nodes[child].action == action && tree.nodes[child].canonical == form) {
                    next = child;
                    break;
                }
            }
            if (next == tree.nodes.size()) {
                tree.nodes.push_back({form, states[k + 1], action, 0, tree.nodes[node].depth + 1, {}});
                tree.nodes[node].children.push_back(next);
            }
            ++tree.nodes[next].count;
            node = next;
        }
    }
    return tree;
}

namespace detail {

inline std::string cells_text(const Polycube& p) {
    std::ostringstream os;
    os << p;
    return os.str();
}

inline void tree_text(const SequenceTree& tree, std::size_t node, std::string& out) {
    const auto& n = tree.nodes[node];
    out.append(2 * n.depth, ' ');
    out += n.action ? std::string(to_string(*n.action)) : std::string("start");
    out += ' ' + cells_text(n.canonical) + " x" + std::to_string(n.count) + '\n';
    for (std::size_t c : n.children) tree_text(tree, c, out);
}

inline Json tree_json(const SequenceTree& tree, std::size_t node) {
    const auto& n = tree.nodes[node];
    Json j;
    j["action"] = n.action ? std::string(to_string(*n.action)) : std::string("start");
    j["count"] = n.count;
    j["canonical"] = cells_to_json(n.canonical);
    j["cells"] = cells_to_json(n.raw);
    Json kids = Json::array();
    for (std::size_t c : n.children) kids.push_back(tree_json(tree, c));
    j["children"] = std::move(kids);
    return j;
}

} // namespace detail

inline std::string tree_to_text(const SequenceTree& tree) {
    std::string out = "task " + tree.task_id + '\n';
    detail::tree_text(tree, 0, out);
    return out;
}

inline Json tree_to_json(const SequenceTree& tree) {
    Json j;
    j["task_id"] = tree.task_id;
    j["root"] = detail::tree_json(tree, 0);
    return j;
}

} // namespace cogcubes
