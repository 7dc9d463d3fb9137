#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <ostream>
#include <span>
#include <vector>

#include "error.hpp"

namespace cogcubes {

/// Integer cell position in cube-edge units. The base cube sits at the origin.
struct CubeCoord {
    int x = 0;
    int y = 0;
    int z = 0;

    friend constexpr auto operator<=>(const CubeCoord&, const CubeCoord&) = default;

    constexpr CubeCoord operator+(const CubeCoord& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr CubeCoord operator-(const CubeCoord& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr int operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
};

inline std::ostream& operator<<(std::ostream& os, const CubeCoord& c) {
    return os << '(' << c.x << ',' << c.y << ',' << c.z << ')';
}

inline constexpr CubeCoord kOrigin{0, 0, 0};

inline constexpr std::array<CubeCoord, 6> kFaceSteps{{
    {1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1},
}};

constexpr bool face_adjacent(const CubeCoord& a, const CubeCoord& b) {
    const int dx = a.x > b.x ? a.x - b.x : b.x - a.x;
    const int dy = a.y > b.y ? a.y - b.y : b.y - a.y;
    const int dz = a.z > b.z ? a.z - b.z : b.z - a.z;
    return dx + dy + dz == 1;
}

/// Proper rotation of the cube: a signed permutation matrix with determinant +1.
struct Rotation {
    std::array<std::array<int, 3>, 3> m{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

    friend constexpr bool operator==(const Rotation&, const Rotation&) = default;

    constexpr CubeCoord apply(const CubeCoord& c) const {
        return {m[0][0] * c.x + m[0][1] * c.y + m[0][2] * c.z,
                m[1][0] * c.x + m[1][1] * c.y + m[1][2] * c.z,
                m[2][0] * c.x + m[2][1] * c.y + m[2][2] * c.z};
    }

    constexpr Rotation transposed() const {
        Rotation r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
        return r;
    }

    constexpr Rotation inverse() const { return transposed(); }

    constexpr int determinant() const {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    }

    static constexpr Rotation identity() { return Rotation{}; }
};

/// Matrix product: (a * b).apply(c) == a.apply(b.apply(c)).
constexpr Rotation operator*(const Rotation& a, const Rotation& b) {
    Rotation r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            int sum = 0;
            for (int k = 0; k < 3; ++k) sum += a.m[i][k] * b.m[k][j];
            r.m[i][j] = sum;
        }
    return r;
}

namespace detail {

inline std::array<Rotation, 24> make_rotation_group() {
    static constexpr int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    static constexpr int perm_parity[6] = {1, -1, -1, 1, 1, -1};
    std::array<Rotation, 24> out{};
    std::size_t n = 0;
    for (int p = 0; p < 6; ++p) {
        for (int signs = 0; signs < 8; ++signs) {
            const int s0 = (signs & 4) ? -1 : 1;
            const int s1 = (signs & 2) ? -1 : 1;
            const int s2 = (signs & 1) ? -1 : 1;
            if (perm_parity[p] * s0 * s1 * s2 != 1) continue;
            Rotation r;
            r.m = {{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}};
            r.m[0][perms[p][0]] = s0;
            r.m[1][perms[p][1]] = s1;
            r.m[2][perms[p][2]] = s2;
            out[n++] = r;
        }
    }
    return out;
}

} // namespace detail

/// The 24 proper rotations of the cube. Index 0 is the identity; the order is
/// fixed and used for tie-breaking wherever a placement search needs one.
inline const std::array<Rotation, 24>& rotation_group() {
    static const std::array<Rotation, 24> group = detail::make_rotation_group();
    return group;
}

inline std::size_t rotation_index(const Rotation& r) {
    const auto& g = rotation_group();
    return static_cast<std::size_t>(std::find(g.begin(), g.end(), r) - g.begin());
}

/// Rotation by 90 degrees counter-clockwise about the z axis.
inline constexpr Rotation kQuarterTurnZ{{{{0, -1, 0}, {1, 0, 0}, {0, 0, 1}}}};

/// A set of distinct cube cells, held sorted by (x, y, z).
class Polycube {
public:
    Polycube() = default;
    Polycube(std::initializer_list<CubeCoord> cells) : cells_(cells) { canonicalize_storage(); }
    explicit Polycube(std::vector<CubeCoord> cells) : cells_(std::move(cells)) { canonicalize_storage(); }

    const std::vector<CubeCoord>& cells() const noexcept { return cells_; }
    std::size_t size() const noexcept { return cells_.size(); }
    bool empty() const noexcept { return cells_.empty(); }
    auto begin() const noexcept { return cells_.begin(); }
    auto end() const noexcept { return cells_.end(); }

    bool contains(const CubeCoord& c) const { return std::binary_search(cells_.begin(), cells_.end(), c); }

    /// Returns false if the cell was already present.
    bool insert(const CubeCoord& c) {
        auto it = std::lower_bound(cells_.begin(), cells_.end(), c);
        if (it != cells_.end() && *it == c) return false;
        cells_.insert(it, c);
        return true;
    }

    bool erase(const CubeCoord& c) {
        auto it = std::lower_bound(cells_.begin(), cells_.end(), c);
        if (it == cells_.end() || *it != c) return false;
        cells_.erase(it);
        return true;
    }

    bool touches(const CubeCoord& c) const {
        for (const auto& step : kFaceSteps)
            if (contains(c + step)) return true;
        return false;
    }

    friend bool operator==(const Polycube&, const Polycube&) = default;
    friend auto operator<=>(const Polycube& a, const Polycube& b) { return a.cells_ <=> b.cells_; }

private:
    void canonicalize_storage() {
        std::sort(cells_.begin(), cells_.end());
        cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
    }

    std::vector<CubeCoord> cells_;
};

inline std::ostream& operator<<(std::ostream& os, const Polycube& p) {
    os << '{';
    bool first = true;
    for (const auto& c : p) {
        if (!first) os << ',';
        os << c;
        first = false;
    }
    return os << '}';
}

struct BoundingBox {
    CubeCoord lo;
    CubeCoord hi;

    CubeCoord extent() const { return {hi.x - lo.x + 1, hi.y - lo.y + 1, hi.z - lo.z + 1}; }
};

inline BoundingBox bounding_box(const Polycube& poly) {
    if (poly.empty()) throw Error(ErrorCode::EmptyShape);
    BoundingBox box{poly.cells().front(), poly.cells().front()};
    for (const auto& c : poly) {
        box.lo = {std::min(box.lo.x, c.x), std::min(box.lo.y, c.y), std::min(box.lo.z, c.z)};
        box.hi = {std::max(box.hi.x, c.x), std::max(box.hi.y, c.y), std::max(box.hi.z, c.z)};
    }
    return box;
}

inline Polycube transform(const Polycube& poly, const Rotation& r, const CubeCoord& t) {
    std::vector<CubeCoord> out;
    out.reserve(poly.size());
    for (const auto& c : poly) out.push_back(r.apply(c) + t);
    return Polycube(std::move(out));
}

inline Polycube translate(const Polycube& poly, const CubeCoord& t) {
    return transform(poly, Rotation::identity(), t);
}

/// Number of cells reachable from `start` through face adjacency, skipping `excluded`.
inline std::size_t reachable_count(const Polycube& poly, const CubeCoord& start,
                                   const CubeCoord* excluded = nullptr) {
    if (!poly.contains(start) || (excluded && *excluded == start)) return 0;
    std::vector<char> seen(poly.size(), 0);
    auto index_of = [&](const CubeCoord& c) {
        return static_cast<std::size_t>(std::lower_bound(poly.begin(), poly.end(), c) - poly.begin());
    };
    std::deque<CubeCoord> queue{start};
    seen[index_of(start)] = 1;
    std::size_t count = 1;
    while (!queue.empty()) {
        const CubeCoord cur = queue.front();
        queue.pop_front();
        for (const auto& step : kFaceSteps) {
            const CubeCoord next = cur + step;
            if (!poly.contains(next) || (excluded && *excluded == next)) continue;
            auto& flag = seen[index_of(next)];
            if (flag) continue;
            flag = 1;
            ++count;
            queue.push_back(next);
        }
    }
    return count;
}

inline bool is_connected(const Polycube& poly) {
    if (poly.empty()) throw Error(ErrorCode::EmptyShape);
    return reachable_count(poly, poly.cells().front()) == poly.size();
}

/// True if removing `cell` from a connected polycube leaves the rest connected.
inline bool removal_keeps_connected(const Polycube& poly, const CubeCoord& cell) {
    if (!poly.contains(cell)) return false;
    if (poly.size() <= 1) return true;
    const CubeCoord& start = poly.cells().front() == cell ? poly.cells()[1] : poly.cells().front();
    return reachable_count(poly, start, &cell) == poly.size() - 1;
}

inline Polycube normalize(const Polycube& poly) {
    const auto box = bounding_box(poly);
    return translate(poly, CubeCoord{} - box.lo);
}

/// Lexicographically smallest normalized rotation of `poly`.
inline Polycube canonical_form(const Polycube& poly) {
    if (poly.empty()) throw Error(ErrorCode::EmptyShape);
    Polycube best;
    bool have = false;
    for (const auto& r : rotation_group()) {
        Polycube candidate = normalize(transform(poly, r, {}));
        if (!have || candidate.cells() < best.cells()) {
            best = std::move(candidate);
            have = true;
        }
    }
    return best;
}

enum class ShapeType { TwoD, ThreeD };

constexpr std::string_view to_string(ShapeType t) { return t == ShapeType::TwoD ? "2D" : "3D"; }

/// TwoD when the shape fits in a one-cell-thick slab along some axis.
inline ShapeType shape_type(const Polycube& poly) {
    const auto e = bounding_box(poly).extent();
    return (e.x == 1 || e.y == 1 || e.z == 1) ? ShapeType::TwoD : ShapeType::ThreeD;
}

} // namespace cogcubes

template <>
struct std::hash<cogcubes::CubeCoord> {
    std::size_t operator()(const cogcubes::CubeCoord& c) const noexcept {
        std::size_t h = static_cast<std::size_t>(c.x) * 73856093u;
        h ^= static_cast<std::size_t>(c.y) * 19349663u;
        h ^= static_cast<std::size_t>(c.z) * 83492791u;
        return h;
    }
};
