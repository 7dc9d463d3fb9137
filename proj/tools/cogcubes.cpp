#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>

#include "CLI11.hpp"

#include "cogcubes/cogcubes.hpp"
#include "cogcubes/http_server.hpp"

namespace fs = std::filesystem;
using namespace cogcubes;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct Globals {
    std::uint64_t seed = 1;
    std::string out;
    std::string format = "lines";
};

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << content;
    if (!out) throw Error(ErrorCode::IoError, "write failed " + path.string());
}

// Prototypes from a library file, a directory of shape files, or a single shape file.
std::map<std::string, Polycube> load_prototypes(const fs::path& source) {
    std::map<std::string, Polycube> out;
    if (source.empty()) return out;
    if (source.extension() == ".json") {
        for (const auto& t : load_library(source).tasks) {
            out[t.prototype_id] = t.prototype;
            out[t.task_id] = t.prototype;
        }
    } else if (fs::is_directory(source)) {
        for (const auto& e : fs::directory_iterator(source))
            if (e.path().extension() == ".txt") {
                const auto p = load_prototype(e.path());
                out[p.id] = p.cells;
            }
    } else {
        const auto p = load_prototype(source);
        out[p.id] = p.cells;
    }
    return out;
}

Polycube prototype_for(const TaskRecord& r, const std::map<std::string, Polycube>& protos) {
    if (r.prototype) return *r.prototype;
    for (const auto& key : {r.prototype_id, r.task_id}) {
        auto it = protos.find(key);
        if (it != protos.end()) return it->second;
    }
    if (protos.size() == 1) return protos.begin()->second;
    throw Error(ErrorCode::IoError, "no prototype for task '" + r.task_id + "'");
}

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
    std::vector<fs::path> out;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            for (const auto& e : fs::recursive_directory_iterator(in))
                if (e.is_regular_file() && e.path().extension() == ".jsonl" &&
                    !e.path().stem().string().ends_with(".net"))
                    out.push_back(e.path());
        } else {
            out.emplace_back(in);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------

int cmd_score(const Globals& g, const std::string& record_path, const std::string& proto_path,
              const std::string& trace_path) {
    const auto rec = load_record(record_path);
    const auto protos = load_prototypes(proto_path);
    auto key = rec;
    if (!proto_path.empty()) key.prototype.reset(); // an explicit prototype wins
    const auto proto = prototype_for(key, protos);
    const auto m = compute_measures(rec, proto);
    std::string text;
    if (g.format == "csv") {
        text = "task_id,similarity,last_connect,derivative,zero_crossings\n" + rec.task_id + "," +
               format_number(m.similarity) + "," + format_number(m.last_connect) + "," + format_number(m.derivative) +
               "," + std::to_string(m.zero_crossings) + "\n";
    } else {
        text = "similarity " + format_number(m.similarity) + "\nlast_connect " + format_number(m.last_connect) +
               "\nderivative " + format_number(m.derivative) + "\nzero_crossings " + std::to_string(m.zero_crossings) +
               "\n";
    }
    if (g.out.empty()) std::cout << text;
    else write_file(g.out, text);
    if (!trace_path.empty()) {
        std::string csv = "t,similarity\n";
        for (const auto& pt : similarity_trace(rec, proto))
            csv += format_number(pt.t) + "," + format_number(pt.value.to_double()) + "\n";
        write_file(trace_path, csv);
    }
    return 0;
}

int cmd_simulate(const Globals& g, const std::string& library, const std::string& agent, int participants,
                 bool network) {
    const auto lib = load_library(library);
    const auto kind = agent_kind_from_string(agent);
    const fs::path out = g.out.empty() ? fs::path("simulated") : fs::path(g.out);
    for (int k = 0; k < participants; ++k) {
        const std::uint64_t seed = g.seed + static_cast<std::uint64_t>(k);
        const std::string code = std::string(to_string(kind)) + "_" + std::to_string(k + 1);
        const auto records = simulate_session(lib.tasks, AgentProfile::defaults(kind, seed), code);
        for (const auto& r : records) {
            const fs::path base = out / code / r.task_id;
            write_file(base.string() + ".jsonl", format_record(r));
            if (network) write_file(base.string() + ".net.jsonl", format_net_stream(to_network_stream(r)));
        }
        std::cout << code << ": " << records.size() << " records\n";
    }
    return 0;
}

int cmd_gen(const Globals& g, int cells, int count, const std::string& shape) {
    if (cells < 1) throw Error(ErrorCode::EmptyShape, "cells must be positive");
    if (static_cast<std::size_t>(cells) > kMaxPrototypeCubes)
        throw Error(ErrorCode::TooManyCubes, std::to_string(cells) + " > " + std::to_string(kMaxPrototypeCubes));
    std::optional<ShapeType> want;
    if (shape == "2D") want = ShapeType::TwoD;
    else if (shape == "3D") want = ShapeType::ThreeD;
    else if (shape != "any") throw Error(ErrorCode::ParseError, "shape must be 2D, 3D or any");
    if (want == ShapeType::ThreeD && cells < 4)
        throw Error(ErrorCode::NotConnected, "no 3D polycube has fewer than 4 cells");

    std::mt19937_64 rng(g.seed);
    std::set<Polycube> seen;
    std::vector<Polycube> found;
    const std::size_t attempts = static_cast<std::size_t>(count) * 2000 + 1000;
    for (std::size_t a = 0; a < attempts && found.size() < static_cast<std::size_t>(count); ++a) {
        Polycube p{kOrigin};
        while (p.size() < static_cast<std::size_t>(cells)) {
            const auto& c = p.cells()[std::uniform_int_distribution<std::size_t>(0, p.size() - 1)(rng)];
            p.insert(c + kFaceSteps[std::uniform_int_distribution<std::size_t>(0, 5)(rng)]);
        }
        if (want && shape_type(p) != *want) continue;
        if (!seen.insert(canonical_form(p)).second) continue;
        found.push_back(p);
    }
    const fs::path out = g.out.empty() ? fs::path("prototypes") : fs::path(g.out);
    fs::create_directories(out);
    for (std::size_t k = 0; k < found.size(); ++k) {
        PrototypeFile f;
        f.id = "gen" + std::to_string(cells) + "_" + std::to_string(k + 1);
        f.task_hint = "match";
        f.cells = found[k];
        save_prototype(out / (f.id + ".txt"), f);
    }
    std::cout << found.size() << " distinct prototypes written to " << out.string() << "\n";
    if (found.size() < static_cast<std::size_t>(count))
        std::cerr << "only " << found.size() << " distinct shapes found\n";
    return 0;
}

int cmd_analyze(const Globals& g, const std::vector<std::string>& inputs, const std::string& proto_path,
                const std::vector<std::string>& by_names) {
    const auto protos = load_prototypes(proto_path);
    const fs::path out = g.out.empty() ? fs::path("analysis") : fs::path(g.out);
    MeasureTable table;
    std::vector<TaskRecord> records;
    int failures = 0;
    for (const auto& path : expand_inputs(inputs)) {
        try {
            auto rec = load_record(path);
            if (!rec.prototype) rec.prototype = prototype_for(rec, protos);
            table.push_back(measure_row(rec, *rec.prototype));
            records.push_back(std::move(rec));
        } catch (const Error& e) {
            ++failures;
            std::cerr << path.string() << ": " << e.what() << "\n";
        }
    }
    if (table.empty()) throw Error(ErrorCode::EmptyTable, "no scorable records");

    write_file(out / "measures.csv", measure_table_csv(table));
    std::vector<Factor> by;
    for (const auto& name : by_names) by.push_back(factor_from_string(name));
    if (by.empty()) by = {Factor::Group, Factor::Task};
    write_file(out / "aggregate.csv", aggregate_csv(aggregate(table, by), by));
    write_file(out / "curves.csv", export_curves(records, prototype_lookup(protos)));

    const std::array<std::string, 4> names{"similarity", "last_connect", "derivative", "zero_crossings"};
    std::array<std::vector<double>, 4> cols;
    for (const auto& r : table) {
        cols[0].push_back(r.measures.similarity);
        cols[1].push_back(r.measures.last_connect);
        cols[2].push_back(r.measures.derivative);
        cols[3].push_back(static_cast<double>(r.measures.zero_crossings));
    }
    std::string corr = "measure_a,measure_b,n,r\n";
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = a + 1; b < 4; ++b) {
            std::string r;
            try {
                r = format_number(pearson_r(cols[a], cols[b]));
            } catch (const Error& e) {
                r = std::string(e.name());
                if (e.code() == ErrorCode::InsufficientData)
                    std::cerr << "correlation " << names[a] << "/" << names[b] << " refused: " << table.size()
                              << " records, need at least 3\n";
            }
            corr += names[a] + "," + names[b] + "," + std::to_string(table.size()) + "," + r + "\n";
        }
    write_file(out / "correlations.csv", corr);

    std::map<std::string, std::vector<TaskRecord>> by_task;
    for (const auto& r : records) by_task[r.task_id].push_back(r);
    for (const auto& [task, recs] : by_task) {
        try {
            const auto tree = build_sequence_tree(recs);
            write_file(out / "trees" / (task + ".txt"), tree_to_text(tree));
            write_file(out / "trees" / (task + ".json"), tree_to_json(tree).dump(2) + "\n");
        } catch (const Error& e) {
            ++failures;
            std::cerr << "tree " << task << ": " << e.what() << "\n";
        }
    }
    std::cout << table.size() << " records analysed, " << failures << " failures, output in " << out.string() << "\n";
    return failures ? kExitValidation : 0;
}

int cmd_audit(const std::string& stream_path) {
    std::ifstream in(stream_path);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + stream_path);
    const auto stream = parse_net_stream(in);
    audit_stream(stream);
    std::cout << "ok " << stream.size() << " events\n";
    return 0;
}

HttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

int cmd_serve(std::string listen, std::string sessions, std::string library, std::string token) {
    auto env = [](const char* name, std::string& v) {
        if (v.empty())
            if (const char* e = std::getenv(name)) v = e;
    };
    env("COGCUBES_LISTEN", listen);
    env("COGCUBES_SESSIONS", sessions);
    env("COGCUBES_LIBRARY", library);
    env("COGCUBES_ASSESSOR_TOKEN", token);
    if (listen.empty()) listen = "127.0.0.1:8080";
    if (sessions.empty()) sessions = "sessions";
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::ParseError, "listen must be host:port");
    const std::string host = listen.substr(0, colon);
    const int port = std::stoi(listen.substr(colon + 1));

    std::optional<fs::path> lib;
    if (!library.empty()) lib = library;
    SessionService service(sessions, lib);
    HttpServer server(service, token);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "listening on " << host << ":" << port << std::endl;
    if (!server.listen(host, port)) throw Error(ErrorCode::IoError, "cannot listen on " + listen);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cognitive Cubes scoring and assessment tools"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "random seed")->capture_default_str();
    app.add_option("--out", g.out, "output file or directory");
    app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"csv", "lines"}))->capture_default_str();

    auto* score = app.add_subcommand("score", "score one task record");
    std::string record_path, score_proto, trace_path;
    score->add_option("record", record_path, "task record (.jsonl)")->required();
    score->add_option("--prototype", score_proto, "prototype file, used when the record has none");
    score->add_option("--trace", trace_path, "write the similarity trace as CSV");

    auto* simulate = app.add_subcommand("simulate", "generate synthetic participants");
    std::string sim_library, agent = "monotone";
    int participants = 1;
    bool network = false;
    simulate->add_option("--library", sim_library, "task library")->required();
    simulate->add_option("--agent", agent, "monotone, erratic or slow")->capture_default_str();
    simulate->add_option("-n,--participants", participants)->capture_default_str()->check(CLI::PositiveNumber);
    simulate->add_flag("--network", network, "also write cube-network event streams");

    auto* gen = app.add_subcommand("gen-prototypes", "generate distinct random prototypes");
    int cells = 7, count = 5;
    std::string shape = "any";
    gen->add_option("--cells", cells)->capture_default_str();
    gen->add_option("--count", count)->capture_default_str()->check(CLI::PositiveNumber);
    gen->add_option("--shape", shape, "2D, 3D or any")->capture_default_str();

    auto* analyze = app.add_subcommand("analyze", "measure table, aggregates, correlations, curves, trees");
    std::vector<std::string> inputs, by;
    std::string analyze_proto;
    analyze->add_option("inputs", inputs, "record files or directories")->required();
    analyze->add_option("--prototypes", analyze_proto, "library json, prototype directory or file");
    analyze->add_option("--by", by, "grouping factors");

    auto* audit = app.add_subcommand("audit", "check a cube-network event stream");
    std::string stream_path;
    audit->add_option("stream", stream_path)->required();

    auto* serve = app.add_subcommand("serve", "run the assessment service");
    std::string listen, sessions, serve_library, token;
    serve->add_option("--listen", listen, "host:port (COGCUBES_LISTEN)");
    serve->add_option("--sessions", sessions, "sessions directory (COGCUBES_SESSIONS)");
    serve->add_option("--library", serve_library, "default task library (COGCUBES_LIBRARY)");
    serve->add_option("--token", token, "assessor token (COGCUBES_ASSESSOR_TOKEN)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*score) return cmd_score(g, record_path, score_proto, trace_path);
        if (*simulate) return cmd_simulate(g, sim_library, agent, participants, network);
        if (*gen) return cmd_gen(g, cells, count, shape);
        if (*analyze) return cmd_analyze(g, inputs, analyze_proto, by);
        if (*audit) return cmd_audit(stream_path);
        if (*serve) return cmd_serve(listen, sessions, serve_library, token);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::IoError ? kExitIo : kExitValidation;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: IoError: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return 0;
}
