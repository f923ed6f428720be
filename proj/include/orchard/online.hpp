#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "orchard/model.hpp"
#include "orchard/offline.hpp"

namespace orchard {

enum class Policy { OA, Orchard, Avg, Eg };

/// Online policy selector; q is the speed-up factor and only read by Orchard.
struct AlgorithmKind {
    Policy policy = Policy::OA;
    double q = 1.0;

    static AlgorithmKind oa() { return {Policy::OA, 1.0}; }
    static AlgorithmKind orchard(double q) { return {Policy::Orchard, q}; }
    static AlgorithmKind avg() { return {Policy::Avg, 1.0}; }
    static AlgorithmKind eg() { return {Policy::Eg, 1.0}; }

    const char* name() const {
        switch (policy) {
            case Policy::OA: return "oa";
            case Policy::Orchard: return "orchard";
            case Policy::Avg: return "avg";
            case Policy::Eg: return "eg";
        }
        return "?";
    }
};

/// Speed-up allocation: scale the OA total by q (capped at the sum of max
/// rates), hand each PEV extra rate proportional to its headroom, and
/// water-fill any clipping shortfall so the total is met exactly.
/// Guarantees x_hat >= x_bar, x_hat <= U, sum(x_hat) = s_hat.
inline std::vector<double> orchard_rates(const std::vector<double>& oa_rates,
                                         const std::vector<double>& caps, double q) {
    const std::size_t n = oa_rates.size();
    double sum_oa = 0.0, sum_cap = 0.0, headroom = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum_oa += oa_rates[i];
        sum_cap += caps[i];
        headroom += caps[i] - oa_rates[i];
    }
    if (headroom <= 1e-12) return caps;  // everyone saturated already

    const double s_hat = std::min(q * sum_oa, sum_cap);
    const double extra = (q - 1.0) / q * s_hat;
    std::vector<double> out(n);
    double sum_out = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = std::min(oa_rates[i] + (caps[i] - oa_rates[i]) / headroom * extra, caps[i]);
        sum_out += out[i];
    }
    // Clipping can leave the total short of s_hat; pour the deficit over the
    // unclipped PEVs, proportional to remaining headroom. Each pass either
    // finishes or saturates a PEV.
    for (std::size_t pass = 0; pass <= n; ++pass) {
        const double deficit = s_hat - sum_out;
        if (deficit <= 1e-12) break;
        double open = 0.0;
        for (std::size_t i = 0; i < n; ++i) open += caps[i] - out[i];
        if (open <= 1e-15) break;
        const double frac = std::min(1.0, deficit / open);
        sum_out = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = std::min(out[i] + (caps[i] - out[i]) * frac, caps[i]);
            sum_out += out[i];
        }
    }
    return out;
}

/// AVG baseline: a flat rate spreading the demand over the parking window.
inline double avg_rate(const ChargingRequest& req) {
    return req.demand_kwh / req.window_h();
}

struct TraceSpan {
    double start_h = 0.0;
    double end_h = 0.0;
    double total_kw = 0.0;
    std::vector<std::pair<int, double>> rates;  // (request id, kW), nonzero only
};

struct OnlineResult {
    double total_cost = 0.0;
    std::vector<TraceSpan> trace;
    bool all_demands_met = true;
    double max_shortfall_kwh = 0.0;
};

namespace detail {

/// Causal event-driven run of one policy over one instance. Decisions are
/// recomputed at arrivals and finishes; rates are constant in between.
class OnlineEngine {
public:
    OnlineEngine(const std::vector<ChargingRequest>& requests, const CostModel& cost,
                 AlgorithmKind algo, bool record_trace)
        : reqs_(requests), cost_(cost), algo_(algo), record_(record_trace) {
        order_.resize(reqs_.size());
        for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
        std::sort(order_.begin(), order_.end(), [&](int a, int b) {
            if (reqs_[a].arrival != reqs_[b].arrival) return reqs_[a].arrival < reqs_[b].arrival;
            return reqs_[a].id < reqs_[b].id;
        });
        residual_.resize(reqs_.size());
        rate_.assign(reqs_.size(), 0.0);
        for (std::size_t i = 0; i < reqs_.size(); ++i) residual_[i] = reqs_[i].demand_kwh;
    }

    OnlineResult run() {
        std::size_t next_arrival = 0;
        if (order_.empty()) return result_;
        now_ = reqs_[order_[0]].arrival.hours();
        bool decisions_stale = false;
        for (;;) {
            // Admit arrivals at the current instant.
            while (next_arrival < order_.size() &&
                   reqs_[order_[next_arrival]].arrival.hours() <= now_ + kTimeEps) {
                present_.push_back(order_[next_arrival]);
                ++next_arrival;
                decisions_stale = true;
            }
            // Retire finished and departed PEVs.
            for (std::size_t p = 0; p < present_.size();) {
                const int i = present_[p];
                const bool finished = residual_[i] <= kDemandTolKwh;
                const bool departed = reqs_[i].deadline.hours() <= now_ + kTimeEps;
                if (finished || departed) {
                    if (departed && residual_[i] > kDemandTolKwh) {
                        result_.all_demands_met = false;
                        result_.max_shortfall_kwh =
                            std::max(result_.max_shortfall_kwh, residual_[i]);
                    }
                    if (finished) {
                        residual_[i] = 0.0;
                        decisions_stale = true;
                    }
                    rate_[i] = 0.0;
                    present_[p] = present_.back();
                    present_.pop_back();
                } else {
                    ++p;
                }
            }
            if (present_.empty() && next_arrival == order_.size()) break;

            if (decisions_stale && !present_.empty()) {
                decide();
                decisions_stale = false;
            }

            // Advance to the next arrival, projected finish, or departure.
            double t_next = std::numeric_limits<double>::infinity();
            if (next_arrival < order_.size())
                t_next = reqs_[order_[next_arrival]].arrival.hours();
            for (int i : present_) {
                const double dl = reqs_[i].deadline.hours();
                t_next = std::min(t_next, dl);
                if (rate_[i] > 1e-12)
                    t_next = std::min(t_next, std::min(now_ + residual_[i] / rate_[i], dl));
            }
            if (!std::isfinite(t_next))
                throw std::runtime_error("online engine stalled");
            t_next = std::max(t_next, now_);
            advance_to(t_next);
        }
        return result_;
    }

private:
    static constexpr double kTimeEps = 1e-12;

    void advance_to(double t) {
        const double dt = t - now_;
        if (dt > 0.0) {
            double total = 0.0;
            TraceSpan span;
            for (int i : present_) {
                total += rate_[i];
                residual_[i] = std::max(0.0, residual_[i] - rate_[i] * dt);
                if (record_ && rate_[i] > 0.0) span.rates.emplace_back(reqs_[i].id, rate_[i]);
            }
            result_.total_cost += cost_.power_cost(total) * dt;
            if (record_) {
                span.start_h = now_;
                span.end_h = t;
                span.total_kw = total;
                std::sort(span.rates.begin(), span.rates.end());
                result_.trace.push_back(std::move(span));
            }
        }
        now_ = t;
    }

    void decide() {
        switch (algo_.policy) {
            case Policy::Avg:
                for (int i : present_) rate_[i] = residual_[i] > kDemandTolKwh ? avg_rate(reqs_[i]) : 0.0;
                break;
            case Policy::Eg:
                for (int i : present_)
                    rate_[i] = residual_[i] > kDemandTolKwh ? reqs_[i].max_rate_kw : 0.0;
                break;
            case Policy::OA:
            case Policy::Orchard: {
                std::vector<double> oa = solve_snapshot();
                std::vector<double> caps(present_.size());
                for (std::size_t p = 0; p < present_.size(); ++p)
                    caps[p] = reqs_[present_[p]].max_rate_kw;
                const double q = algo_.policy == Policy::Orchard ? algo_.q : 1.0;
                std::vector<double> x = orchard_rates(oa, caps, q);
                double sum_oa = 0.0, sum_cap = 0.0, sum_x = 0.0;
                for (std::size_t p = 0; p < present_.size(); ++p) {
                    if (x[p] < oa[p] - 1e-9 || x[p] > caps[p] + 1e-9)
                        throw std::runtime_error("speed-up allocation broke a rate bound");
                    sum_oa += oa[p];
                    sum_cap += caps[p];
                    sum_x += x[p];
                }
                if (std::abs(sum_x - std::min(q * sum_oa, sum_cap)) > 1e-6)
                    throw std::runtime_error("speed-up allocation lost total rate");
                for (std::size_t p = 0; p < present_.size(); ++p) rate_[present_[p]] = x[p];
                break;
            }
        }
        // Deadline-pressure guard: with no slack left, only the cap is
        // feasible regardless of policy.
        for (int i : present_) {
            const double slack =
                reqs_[i].max_rate_kw * (reqs_[i].deadline.hours() - now_) - residual_[i];
            if (slack <= kDemandTolKwh) rate_[i] = reqs_[i].max_rate_kw;
        }
    }

    /// OA snapshot: the no-future-arrivals instance over [now, latest
    /// deadline], solved only far enough to freeze the first interval.
    std::vector<double> solve_snapshot() {
        const std::size_t m = present_.size();
        std::vector<double> deadlines;
        deadlines.reserve(m);
        for (int i : present_) deadlines.push_back(reqs_[i].deadline.hours());
        std::sort(deadlines.begin(), deadlines.end());
        deadlines.erase(std::unique(deadlines.begin(), deadlines.end()), deadlines.end());

        IntervalDecomposition d;
        d.boundaries.reserve(deadlines.size() + 1);
        d.boundaries.push_back(TimePoint::from_hours(now_));
        for (double t : deadlines) d.boundaries.push_back(TimePoint::from_hours(t));
        d.length_h.resize(deadlines.size());
        d.parked.resize(deadlines.size());
        double prev = now_;
        for (std::size_t k = 0; k < deadlines.size(); ++k) {
            d.length_h[k] = deadlines[k] - prev;
            prev = deadlines[k];
        }

        std::vector<ChargingRequest> snap(m);
        d.span.resize(m);
        for (std::size_t p = 0; p < m; ++p) {
            const ChargingRequest& r = reqs_[present_[p]];
            const double window = r.deadline.hours() - now_;
            ChargingRequest s;
            s.id = r.id;
            s.arrival = TimePoint::from_hours(now_);
            s.deadline = r.deadline;
            s.max_rate_kw = r.max_rate_kw;
            s.capacity_kwh = r.capacity_kwh;
            s.demand_kwh = std::min(residual_[present_[p]], r.max_rate_kw * window);
            if (residual_[present_[p]] > r.max_rate_kw * window + kDemandTolKwh)
                throw std::runtime_error("infeasible residual for request id " +
                                         std::to_string(r.id));
            snap[p] = s;
            const int last = static_cast<int>(
                std::lower_bound(deadlines.begin(), deadlines.end(), r.deadline.hours()) -
                deadlines.begin());
            d.span[p] = {0, last};
            for (int k = 0; k <= last; ++k) d.parked[k].push_back(static_cast<int>(p));
        }

        OfflineSolution sol = solve_offline_prefix(snap, std::move(d), 0);
        std::vector<double> first(m);
        for (std::size_t p = 0; p < m; ++p)
            first[p] = sol.schedule.rate(static_cast<int>(p), 0, sol.decomp);
        return first;
    }

    const std::vector<ChargingRequest>& reqs_;
    CostModel cost_;
    AlgorithmKind algo_;
    bool record_;
    std::vector<int> order_;
    std::vector<int> present_;
    std::vector<double> residual_;
    std::vector<double> rate_;
    double now_ = 0.0;
    OnlineResult result_;
};

}  // namespace detail

inline OnlineResult run_online(const std::vector<ChargingRequest>& requests,
                               const CostModel& cost, AlgorithmKind algo,
                               bool record_trace = false) {
    for (const auto& r : requests)
        if (!check_request_feasible(r))
            throw std::invalid_argument("infeasible request id " + std::to_string(r.id));
    detail::OnlineEngine engine(requests, cost, algo, record_trace);
    return engine.run();
}

}  // namespace orchard
