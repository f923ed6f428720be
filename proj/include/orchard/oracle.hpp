#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "orchard/kkt.hpp"
#include "orchard/model.hpp"

namespace orchard {

/// Independent reference solver for cross-checking the peak-set algorithm.
/// Starts from the feasible even spread and repeatedly shifts energy, one
/// request and one interval pair at a time, from the more loaded interval to
/// the less loaded one until no profitable bounded move remains. This is
/// plain feasible-direction descent on the convex objective and shares no
/// code path with solve_offline.
struct OracleOptions {
    double tol_kw = 1e-7;
    int max_passes = 1'000'000;
};

inline RateSchedule oracle_solve(const std::vector<ChargingRequest>& requests,
                                 const IntervalDecomposition& decomp,
                                 const OracleOptions& opt = {}) {
    RateSchedule sched = RateSchedule::zeros(decomp);
    for (std::size_t i = 0; i < requests.size(); ++i) {
        double len = 0.0;
        for (int k = decomp.span[i].first; k <= decomp.span[i].second; ++k)
            len += decomp.length_h[k];
        const double x0 = requests[i].demand_kwh / len;
        for (int k = decomp.span[i].first; k <= decomp.span[i].second; ++k)
            sched.set_rate(static_cast<int>(i), k, decomp, x0);
    }

    for (int pass = 0; pass < opt.max_passes; ++pass) {
        double largest_move = 0.0;
        for (std::size_t i = 0; i < requests.size(); ++i) {
            const double cap = requests[i].max_rate_kw;
            const auto [lo, hi] = decomp.span[i];
            for (int k1 = lo; k1 <= hi; ++k1)
                for (int k2 = lo; k2 <= hi; ++k2) {
                    if (k1 == k2) continue;
                    const double s1 = sched.total_kw[k1];
                    const double s2 = sched.total_kw[k2];
                    if (s1 <= s2) continue;
                    const double x1 = sched.rate(static_cast<int>(i), k1, decomp);
                    const double x2 = sched.rate(static_cast<int>(i), k2, decomp);
                    // Moving energy e lowers s1 by e/d1 and raises s2 by
                    // e/d2; the unconstrained optimum equalizes the totals.
                    const double d1 = decomp.length_h[k1];
                    const double d2 = decomp.length_h[k2];
                    double e = (s1 - s2) / (1.0 / d1 + 1.0 / d2);
                    e = std::min(e, x1 * d1);
                    e = std::min(e, (cap - x2) * d2);
                    if (e <= 0.0) continue;
                    sched.set_rate(static_cast<int>(i), k1, decomp, x1 - e / d1);
                    sched.set_rate(static_cast<int>(i), k2, decomp, x2 + e / d2);
                    largest_move = std::max(largest_move, e / d1 + e / d2);
                }
        }
        if (largest_move < opt.tol_kw) {
            KktReport kkt = verify_kkt(sched, requests, decomp, 10.0 * opt.tol_kw);
            if (kkt.passed) return sched;
        }
    }
    KktReport kkt = verify_kkt(sched, requests, decomp, 10.0 * opt.tol_kw);
    if (kkt.passed) return sched;
    throw std::runtime_error("oracle did not converge; worst KKT violation " +
                             std::to_string(kkt.worst()) + " kW");
}

}  // namespace orchard
