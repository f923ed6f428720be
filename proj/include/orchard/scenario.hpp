#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "orchard/model.hpp"

namespace orchard {

/// Deterministic random stream. Transforms are done by hand (inverse CDF on
/// top of mt19937_64) so a (config, seed) pair reproduces the same instance
/// on any standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double exponential(double mean) { return -mean * std::log1p(-uniform()); }

    std::uint64_t bits() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

struct ScenarioSegment {
    double start_h = 0.0;
    double end_h = 0.0;
    double arrival_rate_per_h = 0.0;
    double mean_parking_h = 0.0;
};

struct PevType {
    double max_rate_kw = 0.0;
    double capacity_kwh = 0.0;
    double probability = 0.0;
};

struct ScenarioConfig {
    std::vector<ScenarioSegment> segments;
    std::vector<PevType> pev_types;
    CostModel cost;
    double horizon_h = 24.0;

    void validate() const {
        if (segments.empty()) throw std::invalid_argument("scenario has no segments");
        double p = 0.0;
        for (const auto& t : pev_types) p += t.probability;
        if (std::abs(p - 1.0) > 1e-9)
            throw std::invalid_argument("pev type probabilities must sum to 1");
        for (const auto& s : segments) {
            if (s.end_h <= s.start_h) throw std::invalid_argument("empty scenario segment");
            if (s.arrival_rate_per_h < 0.0) throw std::invalid_argument("negative arrival rate");
        }
    }
};

/// The three benchmark traffic scenarios (light / moderate / heavy): the
/// standard two PEV types and day-segmented Poisson arrival rates paired
/// with exponential mean parking times. Peak-hour rates are 10/30/50 per
/// hour respectively.
inline ScenarioConfig standard_scenario(int which) {
    if (which < 1 || which > 3) throw std::invalid_argument("scenario index must be 1..3");
    const double peak = which == 1 ? 10.0 : which == 2 ? 30.0 : 50.0;
    ScenarioConfig c;
    c.segments = {
        {8.0, 10.0, 7.0, 10.0}, {10.0, 12.0, 5.0, 0.5}, {12.0, 14.0, peak, 2.0},
        {14.0, 18.0, 5.0, 0.5}, {18.0, 20.0, peak, 2.0}, {20.0, 24.0, 5.0, 10.0},
    };
    c.pev_types = {{3.3, 35.0, 0.5}, {1.4, 16.0, 0.5}};
    c.cost = CostModel{1e-4, 0.6e-4};
    c.horizon_h = 24.0;
    return c;
}

/// Draws one stochastic instance. Arrivals form a Poisson process with the
/// segment's rate; parking time is exponential with the mean of the arrival
/// segment; the demand is uniform over what the window and battery allow, so
/// every emitted request is feasible by construction. Times are quantized to
/// the milli-hour grid; departures may overhang the horizon.
inline std::vector<ChargingRequest> generate_instance(const ScenarioConfig& config,
                                                      std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    std::vector<ChargingRequest> out;
    int next_id = 1;
    for (const auto& seg : config.segments) {
        if (seg.arrival_rate_per_h <= 0.0) continue;
        double t = seg.start_h;
        for (;;) {
            t += rng.exponential(1.0 / seg.arrival_rate_per_h);
            if (t >= seg.end_h) break;
            const double u_type = rng.uniform();
            double acc = 0.0;
            const PevType* type = &config.pev_types.back();
            for (const auto& ty : config.pev_types) {
                acc += ty.probability;
                if (u_type < acc) {
                    type = &ty;
                    break;
                }
            }
            const double parking = rng.exponential(seg.mean_parking_h);
            ChargingRequest r;
            r.id = next_id++;
            r.arrival = TimePoint::from_hours(t);
            r.deadline = TimePoint::from_hours(t + parking);
            if (r.deadline <= r.arrival) r.deadline = r.arrival + TimePoint{1};
            r.max_rate_kw = type->max_rate_kw;
            r.capacity_kwh = type->capacity_kwh;
            r.demand_kwh =
                rng.uniform() * std::min(r.max_rate_kw * r.window_h(), r.capacity_kwh);
            out.push_back(r);
        }
    }
    return out;
}

/// Small random instance for the property suites: a handful of PEVs of the
/// two standard types with windows inside half a day.
inline std::vector<ChargingRequest> random_instance(int max_requests, Rng& rng) {
    const int n = 1 + static_cast<int>(rng.uniform() * max_requests);
    std::vector<ChargingRequest> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        const bool heavy = rng.uniform() < 0.5;
        ChargingRequest r;
        r.id = i + 1;
        r.max_rate_kw = heavy ? 3.3 : 1.4;
        r.capacity_kwh = heavy ? 35.0 : 16.0;
        const double start = rng.uniform(0.0, 10.0);
        const double len = rng.uniform(0.2, 6.0);
        r.arrival = TimePoint::from_hours(start);
        r.deadline = TimePoint::from_hours(start + len);
        if (r.deadline <= r.arrival) r.deadline = r.arrival + TimePoint{1};
        r.demand_kwh = rng.uniform() * std::min(r.max_rate_kw * r.window_h(), r.capacity_kwh);
        out.push_back(r);
    }
    return out;
}

}  // namespace orchard
