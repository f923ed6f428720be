#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <stdexcept>
#include <vector>

#include "orchard/model.hpp"

namespace orchard {

/// A candidate interval set: the top-m intervals (by intensity) of one time
/// window, with their combined length.
struct IntervalSet {
    std::vector<int> members;    // interval indices, in intensity order
    double total_length_h = 0.0; // Delta = sum of member lengths
};

/// Intensity of interval k: the upper bound on its total charging rate,
/// sum over parked PEVs of min{U_i, D_i/delta_k}.
inline double interval_intensity(const IntervalDecomposition& decomp,
                                 const std::vector<ChargingRequest>& requests, int k) {
    double rho = 0.0;
    for (int i : decomp.parked[k])
        rho += std::min(requests[i].max_rate_kw, requests[i].demand_kwh / decomp.length_h[k]);
    return rho;
}

/// Residual demand of a request on an interval set: what is left after
/// charging at the maximum rate on all its parking intervals outside the set.
/// May be negative; callers clamp at zero where the formulas require it.
inline double residual_demand(const ChargingRequest& req, int req_index, const IntervalSet& set,
                              const IntervalDecomposition& decomp) {
    double outside_h = 0.0;
    bool overlaps = false;
    for (int k = decomp.span[req_index].first; k <= decomp.span[req_index].second; ++k) {
        if (std::find(set.members.begin(), set.members.end(), k) != set.members.end())
            overlaps = true;
        else
            outside_h += decomp.length_h[k];
    }
    if (!overlaps) throw std::domain_error("request does not park in the interval set");
    return req.demand_kwh - req.max_rate_kw * outside_h;
}

/// Balanced total rate of an interval set: clamped residual demands (each
/// parked request counted once) plus carried energy, spread over the set.
inline double balanced_rate(const IntervalSet& set, const std::vector<ChargingRequest>& requests,
                            const IntervalDecomposition& decomp,
                            const std::vector<double>& carried_rate) {
    if (set.members.empty()) throw std::invalid_argument("empty interval set");
    double num = 0.0;
    double len = 0.0;
    std::vector<char> seen(requests.size(), 0);
    for (int k : set.members) {
        len += decomp.length_h[k];
        num += carried_rate.empty() ? 0.0 : carried_rate[k] * decomp.length_h[k];
        for (int i : decomp.parked[k]) {
            if (seen[i]) continue;
            seen[i] = 1;
            num += std::max(0.0, residual_demand(requests[i], i, set, decomp));
        }
    }
    return num / len;
}

struct IterationLog {
    double peak_rate_kw = 0.0;      // s* of this iteration
    double total_length_h = 0.0;    // Delta*
    std::vector<int> members;       // frozen intervals
    std::vector<int> scheduled;     // requests fully scheduled this iteration
};

struct OfflineSolution {
    IntervalDecomposition decomp;
    RateSchedule schedule;
    std::vector<IterationLog> iterations;

    std::vector<double> peak_rates() const {
        std::vector<double> p;
        p.reserve(iterations.size());
        for (const auto& it : iterations) p.push_back(it.peak_rate_kw);
        return p;
    }
};

namespace detail {

/// Feasible transportation fill: route each request's energy to member
/// intervals under the per-PEV rate caps so that every interval reaches its
/// target total. Used when the uniform closed-form split does not apply.
class TransportFill {
public:
    TransportFill(int n_requests, int n_intervals)
        : n_(n_requests + n_intervals + 2),
          req_base_(1),
          int_base_(1 + n_requests),
          cap_(static_cast<std::size_t>(n_) * n_, 0.0) {}

    double& cap(int u, int v) { return cap_[static_cast<std::size_t>(u) * n_ + v]; }

    void set_supply(int req, double e) { cap(0, req_base_ + req) = e; }
    void set_edge(int req, int iv, double e) { cap(req_base_ + req, int_base_ + iv) = e; }
    void set_target(int iv, double e) { cap(int_base_ + iv, n_ - 1) = e; }

    double solve() {
        const int s = 0, t = n_ - 1;
        double flow = 0.0;
        std::vector<int> prev(n_);
        for (;;) {
            std::fill(prev.begin(), prev.end(), -1);
            prev[s] = s;
            std::deque<int> queue{s};
            while (!queue.empty() && prev[t] < 0) {
                int u = queue.front();
                queue.pop_front();
                for (int v = 0; v < n_; ++v)
                    if (prev[v] < 0 && cap(u, v) > 1e-12) {
                        prev[v] = u;
                        queue.push_back(v);
                    }
            }
            if (prev[t] < 0) break;
            double push = std::numeric_limits<double>::infinity();
            for (int v = t; v != s; v = prev[v]) push = std::min(push, cap(prev[v], v));
            for (int v = t; v != s; v = prev[v]) {
                cap(prev[v], v) -= push;
                cap(v, prev[v]) += push;
            }
            flow += push;
        }
        return flow;
    }

    double flow_on_edge(int req, int iv) { return cap(int_base_ + iv, req_base_ + req); }

    /// Interval nodes still reachable from the source in the residual graph.
    /// Non-empty exactly when the fill fell short; those intervals form a
    /// subset whose balanced rate exceeds the attempted target.
    std::vector<int> reachable_intervals() {
        std::vector<char> seen(n_, 0);
        seen[0] = 1;
        std::deque<int> queue{0};
        while (!queue.empty()) {
            int u = queue.front();
            queue.pop_front();
            for (int v = 0; v < n_; ++v)
                if (!seen[v] && cap(u, v) > 1e-12) {
                    seen[v] = 1;
                    queue.push_back(v);
                }
        }
        std::vector<int> out;
        for (int v = int_base_; v < n_ - 1; ++v)
            if (seen[v]) out.push_back(v - int_base_);
        return out;
    }

private:
    int n_;
    int req_base_;
    int int_base_;
    std::vector<double> cap_;
};

/// Dinic max-flow on a small layered graph with double capacities; also
/// reports the (maximal) source side of a minimum cut.
class MaxFlow {
public:
    explicit MaxFlow(int n) : adj_(n), level_(n), it_(n) {}

    void add_edge(int from, int to, double cap) {
        adj_[from].push_back({to, cap, static_cast<int>(adj_[to].size())});
        adj_[to].push_back({from, 0.0, static_cast<int>(adj_[from].size()) - 1});
    }

    double run(int s, int t) {
        double flow = 0.0;
        while (bfs(s, t)) {
            std::fill(it_.begin(), it_.end(), 0);
            for (;;) {
                const double f = dfs(s, t, std::numeric_limits<double>::infinity());
                if (f <= 0.0) break;
                flow += f;
            }
        }
        return flow;
    }

    /// After run(): every node that cannot reach the sink in the residual
    /// graph, i.e. the maximal source side of a minimum cut.
    std::vector<char> source_side(int t) const {
        std::vector<char> reaches(adj_.size(), 0);
        reaches[t] = 1;
        std::deque<int> queue{t};
        while (!queue.empty()) {
            const int v = queue.front();
            queue.pop_front();
            for (const Edge& e : adj_[v]) {
                const Edge& rev = adj_[e.to][e.rev];  // the edge e.to -> v
                if (!reaches[e.to] && rev.cap > kEps) {
                    reaches[e.to] = 1;
                    queue.push_back(e.to);
                }
            }
        }
        for (auto& r : reaches) r = static_cast<char>(!r);
        return reaches;
    }

private:
    struct Edge {
        int to;
        double cap;
        int rev;
    };
    static constexpr double kEps = 1e-11;

    bool bfs(int s, int t) {
        std::fill(level_.begin(), level_.end(), -1);
        level_[s] = 0;
        std::deque<int> queue{s};
        while (!queue.empty()) {
            const int v = queue.front();
            queue.pop_front();
            for (const Edge& e : adj_[v])
                if (level_[e.to] < 0 && e.cap > kEps) {
                    level_[e.to] = level_[v] + 1;
                    queue.push_back(e.to);
                }
        }
        return level_[t] >= 0;
    }

    double dfs(int v, int t, double limit) {
        if (v == t) return limit;
        for (int& i = it_[v]; i < static_cast<int>(adj_[v].size()); ++i) {
            Edge& e = adj_[v][i];
            if (e.cap <= kEps || level_[e.to] != level_[v] + 1) continue;
            const double f = dfs(e.to, t, std::min(limit, e.cap));
            if (f > 0.0) {
                e.cap -= f;
                adj_[e.to][e.rev].cap += f;
                return f;
            }
        }
        return 0.0;
    }

    std::vector<std::vector<Edge>> adj_;
    std::vector<int> level_;
    std::vector<int> it_;
};

class OfflineSolver {
public:
    OfflineSolver(const std::vector<ChargingRequest>& requests, IntervalDecomposition decomp)
        : reqs_(requests), decomp_(std::move(decomp)) {
        const int K = static_cast<int>(decomp_.num_intervals());
        const int N = static_cast<int>(reqs_.size());
        interval_active_.assign(K, 1);
        request_active_.assign(N, 1);
        carried_.assign(K, 0.0);
        remaining_len_.assign(N, 0.0);
        overlap_.assign(N, 0.0);
        first_active_.resize(N);
        last_active_.resize(N);
        stamp_.assign(N, -1);
        for (int i = 0; i < N; ++i) {
            first_active_[i] = decomp_.span[i].first;
            last_active_[i] = decomp_.span[i].second;
            for (int k = first_active_[i]; k <= last_active_[i]; ++k)
                remaining_len_[i] += decomp_.length_h[k];
        }
        schedule_ = RateSchedule::zeros(decomp_);
    }

    /// Runs iterations until every request is scheduled. If stop_interval is
    /// non-negative, stops as soon as that interval is frozen (all rates in
    /// it are then final), which is all the online engine needs.
    OfflineSolution run(int stop_interval = -1) {
        int active_requests = static_cast<int>(reqs_.size());
        const int max_iters = 2 * static_cast<int>(decomp_.num_intervals()) + 8;
        int iter = 0;
        while (active_requests > 0) {
            if (++iter > max_iters)
                throw std::runtime_error("offline solver failed to terminate");
            IterationLog log = iterate();
            active_requests -= static_cast<int>(log.scheduled.size());
            iterations_.push_back(std::move(log));
            if (stop_interval >= 0 && !interval_active_[stop_interval]) break;
        }
        OfflineSolution sol;
        sol.decomp = std::move(decomp_);
        sol.schedule = std::move(schedule_);
        sol.iterations = std::move(iterations_);
        return sol;
    }

private:
    struct Selection {
        std::vector<int> members;
        double rate = 0.0;
    };

    // Energy that must land inside the member set in any feasible schedule:
    // clamped residuals of the active requests touching it plus the carried
    // load already committed to its intervals.
    double set_energy(const std::vector<int>& members) {
        ++epoch_;
        touched_.clear();
        double e = 0.0;
        for (int k : members) {
            e += carried_[k] * decomp_.length_h[k];
            for (int i : decomp_.parked[k]) {
                if (!request_active_[i]) continue;
                if (stamp_[i] != epoch_) {
                    stamp_[i] = epoch_;
                    overlap_[i] = 0.0;
                    touched_.push_back(i);
                }
                overlap_[i] += decomp_.length_h[k];
            }
        }
        for (int i : touched_)
            e += std::max(0.0, reqs_[i].demand_kwh -
                                   reqs_[i].max_rate_kw * (remaining_len_[i] - overlap_[i]));
        return e;
    }

    // The next frozen set maximises the balanced rate E(S)/Delta(S). For a
    // trial rate q, max_S E(S) - q*Delta(S) is a minimum cut: each demand
    // either escapes through intervals outside S (capped at U_i per
    // interval) or is charged against S at rate q net of carried load.
    // Dinkelbach iteration on q yields the exact maximiser in a handful of
    // max-flow computations on a three-layer graph.
    Selection select_peak_set() {
        const int K = static_cast<int>(decomp_.num_intervals());
        const int N = static_cast<int>(reqs_.size());

        // Starting point: the better of the whole active timeline and the
        // best single interval. The singletons also pin the selected rate at
        // or above every carried load, which the balanced allocation
        // relies on.
        Selection best;
        std::vector<int> all;
        double delta_all = 0.0;
        for (int k = 0; k < K; ++k)
            if (interval_active_[k]) {
                all.push_back(k);
                delta_all += decomp_.length_h[k];
            }
        if (all.empty()) throw std::runtime_error("no active intervals left");
        best.members = all;
        best.rate = set_energy(all) / delta_all;
        for (int k : all) {
            double e = carried_[k] * decomp_.length_h[k];
            for (int i : decomp_.parked[k])
                if (request_active_[i])
                    e += std::max(0.0, reqs_[i].demand_kwh -
                                           reqs_[i].max_rate_kw *
                                               (remaining_len_[i] - decomp_.length_h[k]));
            const double rate = e / decomp_.length_h[k];
            if (rate > best.rate) best = {{k}, rate};
        }

        double d_total = 0.0;
        for (int i = 0; i < N; ++i)
            if (request_active_[i]) d_total += reqs_[i].demand_kwh;
        const double tol = 1e-10 * std::max(1.0, d_total);

        // Node layout: 0 = source, 1..N requests, N+1..N+K intervals, sink.
        const int src = 0;
        const int sink = 1 + N + K;
        for (int round = 0; round < 64; ++round) {
            MaxFlow net(2 + N + K);
            for (int i = 0; i < N; ++i) {
                if (!request_active_[i]) continue;
                net.add_edge(src, 1 + i, reqs_[i].demand_kwh);
                for (int k = first_active_[i]; k <= last_active_[i]; ++k)
                    if (interval_active_[k])
                        net.add_edge(1 + i, 1 + N + k,
                                     reqs_[i].max_rate_kw * decomp_.length_h[k]);
            }
            for (int k : all)
                net.add_edge(1 + N + k, sink,
                             std::max(0.0, best.rate - carried_[k]) * decomp_.length_h[k]);
            const double flow = net.run(src, sink);
            if (d_total - flow <= tol) break;  // nothing beats the current rate
            const std::vector<char> side = net.source_side(sink);
            std::vector<int> members;
            double delta = 0.0;
            for (int k : all)
                if (side[1 + N + k]) {
                    members.push_back(k);
                    delta += decomp_.length_h[k];
                }
            if (members.empty()) break;
            const double rate = set_energy(members) / delta;
            if (rate <= best.rate) break;  // numerical stalemate
            best.members = std::move(members);
            best.rate = rate;
        }
        return best;
    }

    IterationLog iterate() {
        Selection sel = select_peak_set();
        std::vector<int> members = std::move(sel.members);

        // Repair loop: balance the candidate set, and if the allocation is
        // infeasible shrink to the min-cut subset (which balances strictly
        // higher) and try again. Terminates because the set shrinks.
        std::vector<int> winners;
        std::vector<double> energy;      // residual energy to place inside the set
        std::vector<double> inside_len;  // overlap of each winner with the set
        double s_star = 0.0;
        double delta_star = 0.0;
        for (;;) {
            member_mark_.assign(decomp_.num_intervals(), 0);
            for (int k : members) member_mark_[k] = 1;

            // Residuals of active requests touching the set; those with
            // non-negative residual are fully scheduled this iteration.
            winners.clear();
            energy.clear();
            inside_len.clear();
            double sum_energy = 0.0;
            double sum_carried = 0.0;
            delta_star = 0.0;
            for (int k : members) {
                delta_star += decomp_.length_h[k];
                sum_carried += carried_[k] * decomp_.length_h[k];
            }
            ++epoch_;
            for (int k : members)
                for (int i : decomp_.parked[k]) {
                    if (!request_active_[i] || stamp_[i] == epoch_) continue;
                    stamp_[i] = epoch_;
                    double inside = 0.0;
                    for (int kk : members)
                        if (decomp_.contains(i, kk)) inside += decomp_.length_h[kk];
                    double residual = reqs_[i].demand_kwh -
                                      reqs_[i].max_rate_kw * (remaining_len_[i] - inside);
                    // Tolerate length-bookkeeping dust: a residual at zero
                    // means max-rate charging outside the set exactly meets
                    // the demand, so the request is finished this iteration.
                    if (residual >= -kRateTolKw * std::max(1.0, reqs_[i].max_rate_kw)) {
                        residual = std::max(0.0, residual);
                        winners.push_back(i);
                        energy.push_back(residual);
                        inside_len.push_back(inside);
                        sum_energy += residual;
                    }
                }
            s_star = (sum_energy + sum_carried) / delta_star;

            std::vector<int> cut =
                try_allocate(members, winners, energy, inside_len, s_star, delta_star);
            if (cut.empty()) break;
            members = std::move(cut);
        }

        // Winners charge at the cap on their active intervals outside the
        // set; that committed rate carries into later iterations.
        for (int i : winners) {
            for (int k = first_active_[i]; k <= last_active_[i]; ++k) {
                if (!interval_active_[k] || member_mark_[k]) continue;
                schedule_.set_rate(i, k, decomp_, reqs_[i].max_rate_kw);
                carried_[k] += reqs_[i].max_rate_kw;
            }
            request_active_[i] = 0;
        }

        for (int k : members) interval_active_[k] = 0;
        for (int k : members)
            for (int i : decomp_.parked[k])
                if (request_active_[i]) {
                    remaining_len_[i] -= decomp_.length_h[k];
                    while (first_active_[i] <= last_active_[i] &&
                           !interval_active_[first_active_[i]])
                        ++first_active_[i];
                    while (last_active_[i] >= first_active_[i] &&
                           !interval_active_[last_active_[i]])
                        --last_active_[i];
                }

        IterationLog log;
        log.peak_rate_kw = s_star;
        log.total_length_h = delta_star;
        log.members = std::move(members);
        log.scheduled = std::move(winners);
        return log;
    }

    // Writes the balanced allocation into the schedule and returns {}. If the
    // per-interval targets cannot be met, returns the residual-reachable
    // subset of member intervals instead (the caller re-balances on it).
    std::vector<int> try_allocate(const std::vector<int>& members,
                                  const std::vector<int>& winners,
                                  const std::vector<double>& energy,
                                  const std::vector<double>& inside_len, double s_star,
                                  double delta_star) {
        if (winners.empty()) return {};

        bool uniform = true;
        for (std::size_t w = 0; w < winners.size() && uniform; ++w)
            if (std::abs(inside_len[w] - delta_star) > 1e-12) uniform = false;
        for (std::size_t m = 1; m < members.size() && uniform; ++m)
            if (std::abs(carried_[members[m]] - carried_[members[0]]) > 1e-12) uniform = false;

        if (uniform) {
            // Every winner spans the whole set and the carried rate is flat:
            // the allocation formula collapses to an even spread of each
            // winner's residual energy over the set.
            for (std::size_t w = 0; w < winners.size(); ++w) {
                const double x = energy[w] / delta_star;
                if (x < -kRateTolKw || x > reqs_[winners[w]].max_rate_kw + kRateTolKw)
                    throw std::runtime_error("allocation outside [0, U]");
                for (int k : members) schedule_.set_rate(winners[w], k, decomp_, x);
            }
            return {};
        }

        // General case: per-interval targets s* - carried, solved as a
        // feasible transportation problem under the rate caps.
        TransportFill net(static_cast<int>(winners.size()), static_cast<int>(members.size()));
        double total_energy = 0.0;
        for (std::size_t w = 0; w < winners.size(); ++w) {
            net.set_supply(static_cast<int>(w), energy[w]);
            total_energy += energy[w];
            for (std::size_t m = 0; m < members.size(); ++m)
                if (decomp_.contains(winners[w], members[m]))
                    net.set_edge(static_cast<int>(w), static_cast<int>(m),
                                 reqs_[winners[w]].max_rate_kw * decomp_.length_h[members[m]]);
        }
        for (std::size_t m = 0; m < members.size(); ++m)
            net.set_target(static_cast<int>(m),
                           std::max(0.0, s_star - carried_[members[m]]) *
                               decomp_.length_h[members[m]]);
        const double placed = net.solve();
        if (placed < total_energy - 1e-9 * std::max(1.0, total_energy)) {
            std::vector<int> reach = net.reachable_intervals();
            std::vector<int> cut;
            for (int m : reach) cut.push_back(members[m]);
            if (cut.empty() || cut.size() == members.size())
                throw std::runtime_error("peak-set allocation is infeasible");
            return cut;
        }
        for (std::size_t w = 0; w < winners.size(); ++w)
            for (std::size_t m = 0; m < members.size(); ++m)
                if (decomp_.contains(winners[w], members[m])) {
                    const double x = net.flow_on_edge(static_cast<int>(w), static_cast<int>(m)) /
                                     decomp_.length_h[members[m]];
                    if (x > reqs_[winners[w]].max_rate_kw + kRateTolKw)
                        throw std::runtime_error("allocation outside [0, U]");
                    schedule_.set_rate(winners[w], members[m], decomp_, x);
                }
        return {};
    }

    const std::vector<ChargingRequest>& reqs_;
    IntervalDecomposition decomp_;
    RateSchedule schedule_;
    std::vector<IterationLog> iterations_;
    std::vector<char> interval_active_;
    std::vector<char> request_active_;
    std::vector<double> carried_;
    std::vector<double> remaining_len_;
    std::vector<int> first_active_;
    std::vector<int> last_active_;
    // scratch
    std::vector<double> overlap_;
    std::vector<int> touched_;
    std::vector<int> stamp_;
    int epoch_ = 0;
    std::vector<char> member_mark_;
};

}  // namespace detail

/// Globally optimal schedule for a feasible instance, via iterative peak-set
/// freezing. Rejects infeasible requests up front.
inline OfflineSolution solve_offline(const std::vector<ChargingRequest>& requests) {
    for (const auto& r : requests)
        if (!check_request_feasible(r))
            throw std::invalid_argument("infeasible request id " + std::to_string(r.id));
    if (requests.empty()) {
        OfflineSolution sol;
        sol.schedule = RateSchedule::zeros(sol.decomp);
        return sol;
    }
    detail::OfflineSolver solver(requests, decompose_intervals(requests));
    return solver.run();
}

/// Variant used by the online engine: stops as soon as the given interval is
/// frozen, at which point every request's rate in it is final.
inline OfflineSolution solve_offline_prefix(const std::vector<ChargingRequest>& requests,
                                            IntervalDecomposition decomp, int stop_interval) {
    detail::OfflineSolver solver(requests, std::move(decomp));
    return solver.run(stop_interval);
}

}  // namespace orchard
