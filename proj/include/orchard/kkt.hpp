#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "orchard/model.hpp"

namespace orchard {

inline constexpr double kKktTolKw = 1e-6;

/// Optimality check for a feasible schedule, per request:
///  1. intervals where 0 < x < U share one total rate;
///  2. intervals where x = 0 have totals at least the largest total seen
///     where x > 0;
///  3. intervals where x = U have totals at most the smallest total seen
///     where x < U.
struct KktReport {
    double max_balance_violation_kw = 0.0;
    double max_zero_rate_violation_kw = 0.0;
    double max_cap_rate_violation_kw = 0.0;
    bool passed = false;

    double worst() const {
        return std::max({max_balance_violation_kw, max_zero_rate_violation_kw,
                         max_cap_rate_violation_kw});
    }
};

inline KktReport verify_kkt(const RateSchedule& schedule,
                            const std::vector<ChargingRequest>& requests,
                            const IntervalDecomposition& decomp, double tol_kw = kKktTolKw) {
    // Rates within this margin of a bound count as sitting on the bound.
    const double edge = 1e-7;
    KktReport report;
    for (std::size_t i = 0; i < requests.size(); ++i) {
        const double cap = requests[i].max_rate_kw;
        double interior_min = std::numeric_limits<double>::infinity();
        double interior_max = -std::numeric_limits<double>::infinity();
        double positive_max = -std::numeric_limits<double>::infinity();
        double below_cap_min = std::numeric_limits<double>::infinity();
        std::vector<std::pair<double, double>> zero_totals, cap_totals;
        for (int k = decomp.span[i].first; k <= decomp.span[i].second; ++k) {
            const double x = schedule.rate(static_cast<int>(i), k, decomp);
            const double s = schedule.total_kw[k];
            const bool at_zero = x <= edge;
            const bool at_cap = x >= cap - edge;
            if (!at_zero && !at_cap) {
                interior_min = std::min(interior_min, s);
                interior_max = std::max(interior_max, s);
            }
            if (!at_zero) positive_max = std::max(positive_max, s);
            if (!at_cap) below_cap_min = std::min(below_cap_min, s);
            if (at_zero) zero_totals.emplace_back(s, x);
            if (at_cap) cap_totals.emplace_back(s, x);
        }
        if (interior_max > interior_min)
            report.max_balance_violation_kw =
                std::max(report.max_balance_violation_kw, interior_max - interior_min);
        for (auto [s, x] : zero_totals)
            if (positive_max > s)
                report.max_zero_rate_violation_kw =
                    std::max(report.max_zero_rate_violation_kw, positive_max - s);
        for (auto [s, x] : cap_totals)
            if (s > below_cap_min)
                report.max_cap_rate_violation_kw =
                    std::max(report.max_cap_rate_violation_kw, s - below_cap_min);
    }
    report.passed = report.worst() <= tol_kw;
    return report;
}

}  // namespace orchard
