#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "orchard/io.hpp"
#include "orchard/offline.hpp"

using namespace orchard;
using Catch::Matchers::ContainsSubstring;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("orchard_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("instance files round-trip") {
    TempDir tmp;
    io::Instance inst;
    inst.cost = CostModel{1e-4, 0.6e-4};
    ChargingRequest r;
    r.id = 7;
    r.arrival = TimePoint::from_hours(8.25);
    r.deadline = TimePoint::from_hours(12.5);
    r.demand_kwh = 6.125;
    r.max_rate_kw = 3.3;
    r.capacity_kwh = 35.0;
    inst.requests.push_back(r);

    const std::string path = tmp.file("inst.json");
    io::save_instance(inst, path);
    io::Instance back = io::load_instance(path);
    REQUIRE(back.requests.size() == 1);
    CHECK(back.cost.a == inst.cost.a);
    CHECK(back.cost.b == inst.cost.b);
    CHECK(back.requests[0].id == 7);
    CHECK(back.requests[0].arrival == r.arrival);
    CHECK(back.requests[0].deadline == r.deadline);
    CHECK(back.requests[0].demand_kwh == r.demand_kwh);
    CHECK(back.requests[0].max_rate_kw == r.max_rate_kw);
    CHECK(back.requests[0].capacity_kwh == r.capacity_kwh);

    // writes are reproducible byte for byte
    const std::string first = slurp(path);
    io::save_instance(back, path);
    CHECK(slurp(path) == first);
}

TEST_CASE("scenario files round-trip") {
    TempDir tmp;
    const ScenarioConfig c = standard_scenario(3);
    const std::string path = tmp.file("scenario.json");
    io::save_scenario(c, path);
    ScenarioConfig back = io::load_scenario(path);
    REQUIRE(back.segments.size() == c.segments.size());
    for (std::size_t i = 0; i < c.segments.size(); ++i) {
        CHECK(back.segments[i].start_h == c.segments[i].start_h);
        CHECK(back.segments[i].end_h == c.segments[i].end_h);
        CHECK(back.segments[i].arrival_rate_per_h == c.segments[i].arrival_rate_per_h);
        CHECK(back.segments[i].mean_parking_h == c.segments[i].mean_parking_h);
    }
    REQUIRE(back.pev_types.size() == 2);
    CHECK(back.pev_types[0].max_rate_kw == 3.3);
    CHECK(back.horizon_h == 24.0);

    // the same seed drives out the same instance through a file round-trip
    CHECK(generate_instance(back, 11).size() == generate_instance(c, 11).size());
}

TEST_CASE("malformed files raise errors that name the file") {
    TempDir tmp;
    CHECK_THROWS_WITH(io::load_instance(tmp.file("missing.json")),
                      ContainsSubstring("missing.json"));

    const std::string garbled = tmp.file("garbled.json");
    io::write_text_file(garbled, "{not json");
    CHECK_THROWS_WITH(io::load_instance(garbled), ContainsSubstring("garbled.json"));

    const std::string wrong = tmp.file("wrong.json");
    io::write_text_file(wrong, R"({"cost": {"a": 1}, "requests": []})");
    CHECK_THROWS_WITH(io::load_instance(wrong), ContainsSubstring("wrong.json"));

    const std::string badscen = tmp.file("badscen.json");
    io::write_text_file(badscen, R"({"segments": []})");
    CHECK_THROWS_AS(io::load_scenario(badscen), std::runtime_error);
}

TEST_CASE("schedule serialization") {
    std::vector<ChargingRequest> reqs(1);
    reqs[0].id = 3;
    reqs[0].arrival = TimePoint::from_hours(0);
    reqs[0].deadline = TimePoint::from_hours(4);
    reqs[0].demand_kwh = 4.0;
    reqs[0].max_rate_kw = 3.3;
    reqs[0].capacity_kwh = 35.0;
    OfflineSolution sol = solve_offline(reqs);
    auto j = io::schedule_to_json(sol, reqs, CostModel{1e-4, 0.6e-4});
    REQUIRE(j["intervals"].size() == 1);
    CHECK(j["intervals"][0]["start_h"] == 0.0);
    CHECK(j["intervals"][0]["end_h"] == 4.0);
    CHECK(j["intervals"][0]["rates"]["3"] == 1.0);
    CHECK(j["total_cost"].get<double>() > 0.0);
}

TEST_CASE("csv rendering") {
    std::vector<AlgorithmKind> algos{AlgorithmKind::orchard(1.46), AlgorithmKind::avg()};
    ReplicationResult rep;
    rep.seed = 9;
    rep.offline_cost = 0.5;
    rep.costs = {0.55, 0.75};
    rep.ratios = {1.1, 1.5};
    CHECK(io::replications_csv({rep}, algos) ==
          "seed,algorithm,q,cost,offline_cost,ratio\n"
          "9,orchard,1.46,0.55,0.5,1.1\n"
          "9,avg,1,0.75,0.5,1.5\n");

    RatioSummary s;
    s.algorithm = "orchard";
    s.q = 1.46;
    s.mean_ratio = 1.068;
    s.std_error = 0.002;
    s.max_ratio = 1.25;
    s.count = 1000;
    CHECK(io::summary_csv({s}) ==
          "algorithm,q,runs,mean_ratio,std_error,max_ratio\n"
          "orchard,1.46,1000,1.068,0.002,1.25\n");

    QPoint p{1.8, 1.053, 0.001, 1.2};
    CHECK(io::sweep_csv({p}) ==
          "q,mean_ratio,std_error,max_ratio\n"
          "1.8,1.053,0.001,1.2\n");
}

TEST_CASE("csv output is byte-stable across runs") {
    const ScenarioConfig c = standard_scenario(1);
    const std::vector algos{AlgorithmKind::orchard(1.46), AlgorithmKind::oa()};
    auto b1 = run_batch(c, algos, 4, 77);
    auto b2 = run_batch(c, algos, 4, 77);
    CHECK(io::replications_csv(b1, algos) == io::replications_csv(b2, algos));
    CHECK(io::summary_csv(aggregate_ratios(b1, algos)) ==
          io::summary_csv(aggregate_ratios(b2, algos)));
}
