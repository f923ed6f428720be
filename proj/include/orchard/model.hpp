#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "orchard/time.hpp"

namespace orchard {

inline constexpr double kDemandTolKwh = 1e-6;
inline constexpr double kRateTolKw = 1e-9;

/// One PEV's charging profile. Demands are energies in kWh, rates in kW.
struct ChargingRequest {
    int id = 0;
    TimePoint arrival;
    TimePoint deadline;
    double demand_kwh = 0.0;
    double max_rate_kw = 0.0;
    double capacity_kwh = 0.0;

    double window_h() const { return hours_between(arrival, deadline); }
};

/// Quadratic generation cost: a*s + b*s^2 per hour at total rate s.
struct CostModel {
    double a = 1e-4;   // $/kWh
    double b = 0.6e-4; // $/kWh/kW

    double power_cost(double total_kw) const {
        return a * total_kw + b * total_kw * total_kw;
    }
};

/// A request is feasible iff its demand fits both its parking window at the
/// maximum rate and its battery capacity.
inline bool check_request_feasible(const ChargingRequest& req) {
    return req.demand_kwh <= std::min(req.max_rate_kw * req.window_h(), req.capacity_kwh);
}

/// The instance timeline chopped at every distinct arrival/deadline, so that
/// the parked set is constant inside each interval.
struct IntervalDecomposition {
    std::vector<TimePoint> boundaries;       // K+1 strictly increasing grid points
    std::vector<double> length_h;            // K interval lengths, all > 0
    std::vector<std::vector<int>> parked;    // per interval: request indices present
    std::vector<std::pair<int, int>> span;   // per request: [first, last] interval index

    std::size_t num_intervals() const { return length_h.size(); }
    bool empty() const { return length_h.empty(); }

    bool contains(int req, int k) const {
        return k >= span[req].first && k <= span[req].second;
    }
};

inline IntervalDecomposition decompose_intervals(const std::vector<ChargingRequest>& requests) {
    IntervalDecomposition d;
    if (requests.empty()) return d;

    std::vector<TimePoint> b;
    b.reserve(requests.size() * 2);
    for (const auto& r : requests) {
        if (r.arrival >= r.deadline) throw std::invalid_argument("request window is empty");
        b.push_back(r.arrival);
        b.push_back(r.deadline);
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    d.boundaries = std::move(b);

    const std::size_t k_count = d.boundaries.size() - 1;
    d.length_h.resize(k_count);
    d.parked.resize(k_count);
    for (std::size_t k = 0; k < k_count; ++k)
        d.length_h[k] = hours_between(d.boundaries[k], d.boundaries[k + 1]);

    d.span.resize(requests.size());
    for (std::size_t i = 0; i < requests.size(); ++i) {
        const auto& r = requests[i];
        auto first_it = std::lower_bound(d.boundaries.begin(), d.boundaries.end(), r.arrival);
        auto last_it = std::lower_bound(d.boundaries.begin(), d.boundaries.end(), r.deadline);
        int first = static_cast<int>(first_it - d.boundaries.begin());
        int last = static_cast<int>(last_it - d.boundaries.begin()) - 1;
        d.span[i] = {first, last};
        for (int k = first; k <= last; ++k) d.parked[k].push_back(static_cast<int>(i));
    }
    return d;
}

/// Per-PEV piecewise-constant rates over a decomposition. Rates are stored
/// densely over each request's span; totals are kept per interval.
struct RateSchedule {
    std::vector<std::vector<double>> per_request; // request i -> rates over span(i)
    std::vector<double> total_kw;                 // per interval

    static RateSchedule zeros(const IntervalDecomposition& d) {
        RateSchedule s;
        s.total_kw.assign(d.num_intervals(), 0.0);
        s.per_request.resize(d.span.size());
        for (std::size_t i = 0; i < d.span.size(); ++i)
            s.per_request[i].assign(d.span[i].second - d.span[i].first + 1, 0.0);
        return s;
    }

    double rate(int req, int k, const IntervalDecomposition& d) const {
        if (!d.contains(req, k)) return 0.0;
        return per_request[req][k - d.span[req].first];
    }

    void set_rate(int req, int k, const IntervalDecomposition& d, double kw) {
        double& slot = per_request[req][k - d.span[req].first];
        total_kw[k] += kw - slot;
        slot = kw;
    }

    /// Energy delivered to a request across its span, in kWh.
    double delivered_kwh(int req, const IntervalDecomposition& d) const {
        double e = 0.0;
        for (int k = d.span[req].first; k <= d.span[req].second; ++k)
            e += per_request[req][k - d.span[req].first] * d.length_h[k];
        return e;
    }
};

/// Total cost of a schedule: sum over intervals of (a*s + b*s^2) * delta.
inline double evaluate_cost(const RateSchedule& schedule, const IntervalDecomposition& decomp,
                            const CostModel& cost) {
    if (schedule.total_kw.size() != decomp.num_intervals())
        throw std::invalid_argument("schedule does not match decomposition");
    double total = 0.0;
    for (std::size_t k = 0; k < decomp.num_intervals(); ++k)
        total += cost.power_cost(schedule.total_kw[k]) * decomp.length_h[k];
    return total;
}

struct RequestReport {
    int id = 0;
    double delivered_kwh = 0.0;
    double shortfall_kwh = 0.0;
    bool demand_met = true;
    bool rates_in_bounds = true;
};

struct FeasibilityReport {
    std::vector<RequestReport> requests;
    bool feasible = true;
};

/// Diagnostic check of constraints (demand satisfaction and rate bounds).
inline FeasibilityReport validate_schedule(const RateSchedule& schedule,
                                           const std::vector<ChargingRequest>& requests,
                                           const IntervalDecomposition& decomp,
                                           double demand_tol_kwh = kDemandTolKwh) {
    if (schedule.total_kw.size() != decomp.num_intervals())
        throw std::invalid_argument("schedule does not match decomposition");
    FeasibilityReport report;
    for (std::size_t i = 0; i < requests.size(); ++i) {
        RequestReport r;
        r.id = requests[i].id;
        r.delivered_kwh = schedule.delivered_kwh(static_cast<int>(i), decomp);
        r.shortfall_kwh = std::max(0.0, requests[i].demand_kwh - r.delivered_kwh);
        r.demand_met = r.shortfall_kwh <= demand_tol_kwh;
        for (double x : schedule.per_request[i]) {
            if (x < -kRateTolKw || x > requests[i].max_rate_kw + kRateTolKw) {
                r.rates_in_bounds = false;
                break;
            }
        }
        if (!r.demand_met || !r.rates_in_bounds) report.feasible = false;
        report.requests.push_back(r);
    }
    return report;
}

}  // namespace orchard
