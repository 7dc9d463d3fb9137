#pragma once

#include <cstdint>
#include <numeric>
#include <unordered_map>
#include <utility>
#include <vector>

#include "geometry.hpp"
#include "record.hpp"

namespace cogcubes {

/// Exact rational number; similarity values have denominator |p|.
class Rational {
public:
    constexpr Rational() = default;
    Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
        if (den_ == 0) throw std::invalid_argument("Rational with zero denominator");
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        const std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
    }

    constexpr std::int64_t num() const noexcept { return num_; }
    constexpr std::int64_t den() const noexcept { return den_; }
    constexpr double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }
    constexpr int sign() const noexcept { return num_ > 0 ? 1 : (num_ < 0 ? -1 : 0); }

    friend Rational operator-(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
    }
    friend constexpr bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend constexpr std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        return a.num_ * b.den_ <=> b.num_ * a.den_;
    }

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

inline std::ostream& operator<<(std::ostream& os, const Rational& r) {
    os << r.num();
    if (r.den() != 1) os << '/' << r.den();
    return os;
}

struct Placement {
    Rotation rotation;
    CubeCoord offset;

    friend bool operator==(const Placement&, const Placement&) = default;
};

struct SimilarityScore {
    Rational value;             // percent
    Placement achieved_placement;
    std::size_t intersection_size = 0;

    double percent() const { return value.to_double(); }
};

inline std::size_t overlap(const Polycube& s, const Placement& placement, const Polycube& p) {
    if (s.empty() || p.empty()) throw Error(ErrorCode::EmptyShape);
    std::size_t n = 0;
    for (const auto& c : s)
        if (p.contains(placement.rotation.apply(c) + placement.offset)) ++n;
    return n;
}

/// 100 * (|i|/|p| - (|s|-|i|)/|p|), exact.
inline Rational score_given_overlap(std::int64_t i_size, std::int64_t s_size, std::int64_t p_size) {
    if (p_size <= 0) throw Error(ErrorCode::EmptyPrototype);
    return Rational(100 * (2 * i_size - s_size), p_size);
}

/// Maximizes the score over every rotation and translation of `s`.
///
/// For a fixed rotation, each pair (rotated s cell, p cell) votes for the one
/// offset that superimposes them; the vote count of an offset is exactly its
/// overlap. Offsets without votes overlap nothing and cannot beat the
/// disjoint floor. Ties go to the lowest rotation index, then the
/// lexicographically smallest offset.
inline SimilarityScore best_similarity(const Polycube& s, const Polycube& p) {
    if (p.empty()) throw Error(ErrorCode::EmptyPrototype);
    const auto s_size = static_cast<std::int64_t>(s.size());
    const auto p_size = static_cast<std::int64_t>(p.size());
    if (s.empty()) return {score_given_overlap(0, 0, p_size), {}, 0};

    const auto& group = rotation_group();
    std::size_t best_count = 0;
    Placement best{};
    std::unordered_map<CubeCoord, std::size_t> votes;
    votes.reserve(s.size() * p.size());
    std::vector<CubeCoord> rotated(s.size());
    for (const auto& r : group) {
        for (std::size_t k = 0; k < s.size(); ++k) rotated[k] = r.apply(s.cells()[k]);
        votes.clear();
        for (const auto& rc : rotated)
            for (const auto& pc : p) ++votes[pc - rc];
        std::size_t local_count = 0;
        CubeCoord local_offset{};
        for (const auto& [offset, count] : votes) {
            if (count > local_count || (count == local_count && offset < local_offset)) {
                local_count = count;
                local_offset = offset;
            }
        }
        if (local_count > best_count) {
            best_count = local_count;
            best = {r, local_offset};
        }
    }
    return {score_given_overlap(static_cast<std::int64_t>(best_count), s_size, p_size), best, best_count};
}

struct TracePoint {
    double t = 0.0;
    Rational value;
};

/// Similarity of the initial structure at t = 0, then after every event.
inline std::vector<TracePoint> similarity_trace(const TaskRecord& record, const Polycube& p) {
    const auto states = replay(record);
    std::vector<TracePoint> trace;
    trace.reserve(states.size());
    trace.push_back({0.0, best_similarity(states.front(), p).value});
    for (std::size_t k = 0; k < record.events.size(); ++k)
        trace.push_back({record.events[k].t, best_similarity(states[k + 1], p).value});
    return trace;
}

} // namespace cogcubes
