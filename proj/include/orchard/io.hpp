#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "orchard/model.hpp"
#include "orchard/offline.hpp"
#include "orchard/scenario.hpp"
#include "orchard/simulate.hpp"

namespace orchard::io {

using nlohmann::json;

/// Shortest round-trippable decimal form; used everywhere numbers are
/// written so re-runs are byte-identical.
inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("parse error in " + path + ": " + e.what());
    }
    return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

// ---- instance files ----
// {"cost": {"a": ..., "b": ...},
//  "requests": [{"id", "arrival_h", "deadline_h", "demand_kwh",
//                "max_rate_kw", "capacity_kwh"}, ...]}

struct Instance {
    CostModel cost;
    std::vector<ChargingRequest> requests;
};

inline Instance load_instance(const std::string& path) {
    const json j = read_json_file(path);
    Instance inst;
    try {
        inst.cost.a = j.at("cost").at("a").get<double>();
        inst.cost.b = j.at("cost").at("b").get<double>();
        for (const auto& rj : j.at("requests")) {
            ChargingRequest r;
            r.id = rj.at("id").get<int>();
            r.arrival = TimePoint::from_hours(rj.at("arrival_h").get<double>());
            r.deadline = TimePoint::from_hours(rj.at("deadline_h").get<double>());
            r.demand_kwh = rj.at("demand_kwh").get<double>();
            r.max_rate_kw = rj.at("max_rate_kw").get<double>();
            r.capacity_kwh = rj.at("capacity_kwh").get<double>();
            inst.requests.push_back(r);
        }
    } catch (const json::exception& e) {
        throw std::runtime_error("bad instance file " + path + ": " + e.what());
    }
    return inst;
}

inline void save_instance(const Instance& inst, const std::string& path) {
    json j;
    j["cost"] = {{"a", inst.cost.a}, {"b", inst.cost.b}};
    j["requests"] = json::array();
    for (const auto& r : inst.requests)
        j["requests"].push_back({{"id", r.id},
                                 {"arrival_h", r.arrival.hours()},
                                 {"deadline_h", r.deadline.hours()},
                                 {"demand_kwh", r.demand_kwh},
                                 {"max_rate_kw", r.max_rate_kw},
                                 {"capacity_kwh", r.capacity_kwh}});
    write_text_file(path, j.dump(2) + "\n");
}

// ---- scenario config files ----

inline ScenarioConfig load_scenario(const std::string& path) {
    const json j = read_json_file(path);
    ScenarioConfig c;
    try {
        for (const auto& sj : j.at("segments"))
            c.segments.push_back({sj.at("start_h").get<double>(), sj.at("end_h").get<double>(),
                                  sj.at("arrival_rate_per_h").get<double>(),
                                  sj.at("mean_parking_h").get<double>()});
        for (const auto& tj : j.at("pev_types"))
            c.pev_types.push_back({tj.at("max_rate_kw").get<double>(),
                                   tj.at("capacity_kwh").get<double>(),
                                   tj.at("probability").get<double>()});
        c.cost.a = j.at("cost").at("a").get<double>();
        c.cost.b = j.at("cost").at("b").get<double>();
        c.horizon_h = j.value("horizon_h", 24.0);
    } catch (const json::exception& e) {
        throw std::runtime_error("bad scenario config " + path + ": " + e.what());
    }
    c.validate();
    return c;
}

inline void save_scenario(const ScenarioConfig& c, const std::string& path) {
    json j;
    j["segments"] = json::array();
    for (const auto& s : c.segments)
        j["segments"].push_back({{"start_h", s.start_h},
                                 {"end_h", s.end_h},
                                 {"arrival_rate_per_h", s.arrival_rate_per_h},
                                 {"mean_parking_h", s.mean_parking_h}});
    j["pev_types"] = json::array();
    for (const auto& t : c.pev_types)
        j["pev_types"].push_back({{"max_rate_kw", t.max_rate_kw},
                                  {"capacity_kwh", t.capacity_kwh},
                                  {"probability", t.probability}});
    j["cost"] = {{"a", c.cost.a}, {"b", c.cost.b}};
    j["horizon_h"] = c.horizon_h;
    write_text_file(path, j.dump(2) + "\n");
}

// ---- schedule output ----
// Per interval: {start_h, end_h, total_kw, rates: {"<id>": kw}} plus cost.

inline json schedule_to_json(const OfflineSolution& sol,
                             const std::vector<ChargingRequest>& requests,
                             const CostModel& cost) {
    json j;
    j["total_cost"] = evaluate_cost(sol.schedule, sol.decomp, cost);
    j["intervals"] = json::array();
    for (std::size_t k = 0; k < sol.decomp.num_intervals(); ++k) {
        json ij;
        ij["start_h"] = sol.decomp.boundaries[k].hours();
        ij["end_h"] = sol.decomp.boundaries[k + 1].hours();
        ij["total_kw"] = sol.schedule.total_kw[k];
        json rates = json::object();
        for (int i : sol.decomp.parked[k])
            rates[std::to_string(requests[i].id)] =
                sol.schedule.rate(i, static_cast<int>(k), sol.decomp);
        ij["rates"] = std::move(rates);
        j["intervals"].push_back(std::move(ij));
    }
    return j;
}

// ---- CSV results ----

inline std::string replications_csv(const std::vector<ReplicationResult>& results,
                                    const std::vector<AlgorithmKind>& algorithms) {
    std::ostringstream out;
    out << "seed,algorithm,q,cost,offline_cost,ratio\n";
    for (const auto& r : results)
        for (std::size_t a = 0; a < algorithms.size(); ++a)
            out << r.seed << ',' << algorithms[a].name() << ',' << num(algorithms[a].q) << ','
                << num(r.costs[a]) << ',' << num(r.offline_cost) << ',' << num(r.ratios[a])
                << '\n';
    return out.str();
}

inline std::string summary_csv(const std::vector<RatioSummary>& summary) {
    std::ostringstream out;
    out << "algorithm,q,runs,mean_ratio,std_error,max_ratio\n";
    for (const auto& s : summary)
        out << s.algorithm << ',' << num(s.q) << ',' << s.count << ',' << num(s.mean_ratio)
            << ',' << num(s.std_error) << ',' << num(s.max_ratio) << '\n';
    return out.str();
}

inline std::string sweep_csv(const std::vector<QPoint>& sweep) {
    std::ostringstream out;
    out << "q,mean_ratio,std_error,max_ratio\n";
    for (const auto& p : sweep)
        out << num(p.q) << ',' << num(p.mean_ratio) << ',' << num(p.std_error) << ','
            << num(p.max_ratio) << '\n';
    return out.str();
}

}  // namespace orchard::io
