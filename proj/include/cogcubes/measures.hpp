#pragma once

#include <span>
#include <vector>

#include "record.hpp"
#include "similarity.hpp"

namespace cogcubes {

struct MeasureSet {
    double similarity = 0.0;   // percent, at task end
    double last_connect = 0.0; // seconds
    double derivative = 0.0;   // percent per second
    int zero_crossings = 0;
};

/// Counts sign alternations in a slope-sign sequence. Zero slopes carry the
/// previous nonzero sign; leading zeros are ignored.
inline int count_zero_crossings(std::span<const int> slope_signs) {
    int crossings = 0;
    int previous = 0;
    for (int s : slope_signs) {
        if (s == 0) continue;
        if (previous != 0 && s != previous) ++crossings;
        previous = s;
    }
    return crossings;
}

inline MeasureSet measures_from_trace(std::span<const TracePoint> trace) {
    if (trace.size() < 2) throw Error(ErrorCode::NoEvents);
    MeasureSet m;
    m.similarity = trace.back().value.to_double();
    m.last_connect = trace.back().t;
    std::vector<int> signs;
    signs.reserve(trace.size() - 1);
    double slope_sum = 0.0;
    for (std::size_t k = 0; k + 1 < trace.size(); ++k) {
        const double dt = trace[k + 1].t - trace[k].t;
        if (dt <= 0.0) throw Error(ErrorCode::ZeroDt, "trace points " + std::to_string(k) + " and " + std::to_string(k + 1));
        const Rational dv = trace[k + 1].value - trace[k].value;
        slope_sum += dv.to_double() / dt;
        signs.push_back(dv.sign());
    }
    m.derivative = slope_sum / static_cast<double>(signs.size());
    m.zero_crossings = count_zero_crossings(signs);
    return m;
}

inline MeasureSet compute_measures(const TaskRecord& record, const Polycube& p) {
    if (record.events.empty()) throw Error(ErrorCode::NoEvents);
    const auto trace = similarity_trace(record, p);
    return measures_from_trace(trace);
}

} // namespace cogcubes
