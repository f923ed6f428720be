#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "orchard/model.hpp"
#include "orchard/offline.hpp"
#include "orchard/online.hpp"
#include "orchard/scenario.hpp"

namespace orchard {

struct ReplicationResult {
    std::uint64_t seed = 0;
    double offline_cost = 0.0;
    std::vector<double> costs;   // per requested algorithm
    std::vector<double> ratios;  // cost / offline_cost; 1 on empty instances
};

/// One instance end to end: offline optimum plus every requested online
/// policy, sharing the instance and the offline cost.
inline ReplicationResult run_replication(const ScenarioConfig& config, std::uint64_t seed,
                                         const std::vector<AlgorithmKind>& algorithms) {
    ReplicationResult res;
    res.seed = seed;
    const std::vector<ChargingRequest> requests = generate_instance(config, seed);
    if (requests.empty()) {
        res.costs.assign(algorithms.size(), 0.0);
        res.ratios.assign(algorithms.size(), 1.0);
        return res;
    }
    OfflineSolution off = solve_offline(requests);
    res.offline_cost = evaluate_cost(off.schedule, off.decomp, config.cost);
    for (const auto& algo : algorithms) {
        OnlineResult on = run_online(requests, config.cost, algo);
        if (!on.all_demands_met)
            throw std::runtime_error("online run left unmet demand (seed " +
                                     std::to_string(seed) + ", " + algo.name() + ")");
        res.costs.push_back(on.total_cost);
        res.ratios.push_back(res.offline_cost > 0.0 ? on.total_cost / res.offline_cost : 1.0);
    }
    return res;
}

namespace detail {

template <typename Fn>
void parallel_seeds(std::size_t count, Fn&& fn) {
    const unsigned hw = std::thread::hardware_concurrency();
    const unsigned workers = std::min<unsigned>(hw > 0 ? hw : 1, static_cast<unsigned>(count));
    if (workers <= 1) {
        for (std::size_t r = 0; r < count; ++r) fn(r);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t r = next.fetch_add(1);
                if (r >= count) return;
                fn(r);
            }
        });
    for (auto& t : pool) t.join();
}

}  // namespace detail

/// Replications with seeds seed_base, seed_base+1, ... Results are indexed
/// by replication, so the output is independent of scheduling order.
inline std::vector<ReplicationResult> run_batch(const ScenarioConfig& config,
                                                const std::vector<AlgorithmKind>& algorithms,
                                                std::size_t replications,
                                                std::uint64_t seed_base) {
    std::vector<ReplicationResult> results(replications);
    detail::parallel_seeds(replications, [&](std::size_t r) {
        results[r] = run_replication(config, seed_base + r, algorithms);
    });
    return results;
}

struct RatioSummary {
    std::string algorithm;
    double q = 1.0;
    double mean_ratio = 0.0;
    double std_error = 0.0;
    double max_ratio = 0.0;
    std::size_t count = 0;
};

inline std::vector<RatioSummary> aggregate_ratios(const std::vector<ReplicationResult>& results,
                                                  const std::vector<AlgorithmKind>& algorithms) {
    std::vector<RatioSummary> out;
    for (std::size_t a = 0; a < algorithms.size(); ++a) {
        RatioSummary s;
        s.algorithm = algorithms[a].name();
        s.q = algorithms[a].q;
        s.count = results.size();
        double sum = 0.0;
        for (const auto& r : results) {
            sum += r.ratios[a];
            s.max_ratio = std::max(s.max_ratio, r.ratios[a]);
        }
        s.mean_ratio = results.empty() ? 0.0 : sum / results.size();
        double var = 0.0;
        for (const auto& r : results) {
            const double d = r.ratios[a] - s.mean_ratio;
            var += d * d;
        }
        if (results.size() > 1)
            s.std_error = std::sqrt(var / (results.size() - 1)) / std::sqrt(double(results.size()));
        out.push_back(std::move(s));
    }
    return out;
}

struct QPoint {
    double q = 1.0;
    double mean_ratio = 0.0;
    double std_error = 0.0;
    double max_ratio = 0.0;
};

/// Mean speed-up performance across q values with common random numbers:
/// every q sees the same instances, and each instance's offline optimum is
/// solved once.
inline std::vector<QPoint> q_sweep(const ScenarioConfig& config,
                                   const std::vector<double>& q_values,
                                   std::size_t replications, std::uint64_t seed_base) {
    std::vector<std::vector<double>> ratios(q_values.size(),
                                            std::vector<double>(replications, 1.0));
    detail::parallel_seeds(replications, [&](std::size_t r) {
        const std::uint64_t seed = seed_base + r;
        const std::vector<ChargingRequest> requests = generate_instance(config, seed);
        if (requests.empty()) return;
        OfflineSolution off = solve_offline(requests);
        const double off_cost = evaluate_cost(off.schedule, off.decomp, config.cost);
        for (std::size_t qi = 0; qi < q_values.size(); ++qi) {
            OnlineResult on =
                run_online(requests, config.cost, AlgorithmKind::orchard(q_values[qi]));
            if (!on.all_demands_met)
                throw std::runtime_error("orchard left unmet demand (seed " +
                                         std::to_string(seed) + ")");
            ratios[qi][r] = off_cost > 0.0 ? on.total_cost / off_cost : 1.0;
        }
    });
    std::vector<QPoint> out(q_values.size());
    for (std::size_t qi = 0; qi < q_values.size(); ++qi) {
        QPoint& p = out[qi];
        p.q = q_values[qi];
        double sum = 0.0;
        for (double x : ratios[qi]) {
            sum += x;
            p.max_ratio = std::max(p.max_ratio, x);
        }
        p.mean_ratio = replications ? sum / replications : 0.0;
        double var = 0.0;
        for (double x : ratios[qi]) var += (x - p.mean_ratio) * (x - p.mean_ratio);
        if (replications > 1)
            p.std_error = std::sqrt(var / (replications - 1)) / std::sqrt(double(replications));
    }
    return out;
}

inline std::size_t argmin_q(const std::vector<QPoint>& sweep) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < sweep.size(); ++i)
        if (sweep[i].mean_ratio < sweep[best].mean_ratio) best = i;
    return best;
}

}  // namespace orchard
