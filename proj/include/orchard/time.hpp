#pragma once

#include <cmath>
#include <compare>
#include <cstdint>

namespace orchard {

/// Fixed-point time in integer milli-hours (1 unit = 0.001 h).
/// All instance boundaries live on this grid so that event ordering and
/// interval-length arithmetic are exact.
struct TimePoint {
    std::int64_t mh = 0;

    constexpr auto operator<=>(const TimePoint&) const = default;

    constexpr TimePoint operator+(TimePoint o) const { return {mh + o.mh}; }
    constexpr TimePoint operator-(TimePoint o) const { return {mh - o.mh}; }

    double hours() const { return static_cast<double>(mh) / 1000.0; }

    static TimePoint from_hours(double h) {
        return {static_cast<std::int64_t>(std::llround(h * 1000.0))};
    }
};

/// Exact interval length in hours between two grid points.
inline double hours_between(TimePoint a, TimePoint b) { return (b - a).hours(); }

}  // namespace orchard
