#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "geometry.hpp"

namespace cogcubes {

// Prototype shape file:
//   # comment
//   prototype <id> <task-hint>      (optional)
//   x y z                           (one cell per line)
struct PrototypeFile {
    std::string id;
    std::string task_hint;
    Polycube cells;
};

inline PrototypeFile parse_prototype(std::istream& in, const std::string& fallback_id = {}) {
    PrototypeFile out;
    out.id = fallback_id;
    std::vector<CubeCoord> cells;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        if (line.compare(first, 9, "prototype") == 0) {
            std::string keyword;
            ls >> keyword >> out.id;
            ls >> out.task_hint;
            continue;
        }
        CubeCoord c;
        std::string extra;
        if (!(ls >> c.x >> c.y >> c.z) || (ls >> extra))
            throw Error(ErrorCode::ParseError, "prototype line " + std::to_string(line_no) + ": '" + line + "'");
        cells.push_back(c);
    }
    out.cells = Polycube(std::move(cells));
    return out;
}

inline PrototypeFile load_prototype(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return parse_prototype(in, path.stem().string());
}

inline std::string format_prototype(const PrototypeFile& proto) {
    std::ostringstream os;
    if (!proto.id.empty()) {
        os << "prototype " << proto.id;
        if (!proto.task_hint.empty()) os << ' ' << proto.task_hint;
        os << '\n';
    }
    for (const auto& c : proto.cells) os << c.x << ' ' << c.y << ' ' << c.z << '\n';
    return os.str();
}

inline void save_prototype(const std::filesystem::path& path, const PrototypeFile& proto) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << format_prototype(proto);
}

} // namespace cogcubes
