#include <catch_amalgamated.hpp>

#include "orchard/scenario.hpp"
#include "orchard/simulate.hpp"

using namespace orchard;
using Catch::Matchers::WithinAbs;

namespace {

bool same_requests(const std::vector<ChargingRequest>& a, const std::vector<ChargingRequest>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& x = a[i];
        const auto& y = b[i];
        if (x.id != y.id || x.arrival != y.arrival || x.deadline != y.deadline) return false;
        if (x.demand_kwh != y.demand_kwh || x.max_rate_kw != y.max_rate_kw ||
            x.capacity_kwh != y.capacity_kwh)
            return false;
    }
    return true;
}

}  // namespace

TEST_CASE("instance generation is deterministic in (config, seed)") {
    const ScenarioConfig c = standard_scenario(2);
    auto a = generate_instance(c, 42);
    auto b = generate_instance(c, 42);
    CHECK(same_requests(a, b));
    CHECK_FALSE(same_requests(a, generate_instance(c, 43)));
}

TEST_CASE("arrivals stay inside their segments") {
    ScenarioConfig c = standard_scenario(1);
    // silence everything outside the morning block
    for (std::size_t s = 1; s < c.segments.size(); ++s) c.segments[s].arrival_rate_per_h = 0.0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed)
        for (const auto& r : generate_instance(c, seed)) {
            CHECK(r.arrival.hours() >= 8.0);
            CHECK(r.arrival.hours() < 10.0);
        }
}

TEST_CASE("arrival counts match the poisson rate") {
    ScenarioConfig c = standard_scenario(1);
    for (std::size_t s = 1; s < c.segments.size(); ++s) c.segments[s].arrival_rate_per_h = 0.0;
    // 7/h over two hours: the sample mean over 2000 draws should sit near 14
    double total = 0.0;
    const int reps = 2000;
    for (int seed = 0; seed < reps; ++seed)
        total += static_cast<double>(generate_instance(c, 1000 + seed).size());
    CHECK_THAT(total / reps, WithinAbs(14.0, 0.5));
}

TEST_CASE("generated requests are feasible by construction") {
    for (int which = 1; which <= 3; ++which) {
        const ScenarioConfig c = standard_scenario(which);
        for (std::uint64_t seed = 1; seed <= 20; ++seed)
            for (const auto& r : generate_instance(c, seed)) {
                CHECK(check_request_feasible(r));
                CHECK(r.deadline > r.arrival);
                CHECK((r.max_rate_kw == 3.3 || r.max_rate_kw == 1.4));
            }
    }
}

TEST_CASE("replication with no arrivals reports unit ratios") {
    ScenarioConfig c = standard_scenario(1);
    for (auto& s : c.segments) s.arrival_rate_per_h = 0.0;
    auto res = run_replication(c, 7, {AlgorithmKind::oa(), AlgorithmKind::eg()});
    CHECK(res.offline_cost == 0.0);
    CHECK(res.ratios == std::vector<double>{1.0, 1.0});
}

TEST_CASE("ratio aggregation") {
    const ScenarioConfig c = standard_scenario(1);
    const std::vector algos{AlgorithmKind::oa()};
    auto batch = run_batch(c, algos, 8, 100);
    REQUIRE(batch.size() == 8);
    for (std::size_t r = 0; r < batch.size(); ++r) CHECK(batch[r].seed == 100 + r);

    auto summary = aggregate_ratios(batch, algos);
    REQUIRE(summary.size() == 1);
    CHECK(summary[0].algorithm == "oa");
    CHECK(summary[0].count == 8);
    CHECK(summary[0].mean_ratio >= 1.0 - 1e-9);
    CHECK(summary[0].max_ratio >= summary[0].mean_ratio - 1e-12);

    // identical samples have zero spread
    auto clones = batch;
    for (auto& b : clones) b.ratios = batch[0].ratios;
    CHECK(aggregate_ratios(clones, algos)[0].std_error == 0.0);
}

TEST_CASE("q sweep shares instances with the plain batch") {
    const ScenarioConfig c = standard_scenario(1);
    const std::vector algos{AlgorithmKind::oa()};
    const std::size_t reps = 6;
    auto batch = run_batch(c, algos, reps, 500);
    auto sweep = q_sweep(c, {1.0, 1.46}, reps, 500);
    REQUIRE(sweep.size() == 2);

    double mean_oa = 0.0;
    for (const auto& b : batch) mean_oa += b.ratios[0];
    mean_oa /= reps;
    // q = 1 is the plain snapshot policy on the very same seeds
    CHECK_THAT(sweep[0].mean_ratio, WithinAbs(mean_oa, 1e-12));
    CHECK(sweep[1].mean_ratio >= 1.0 - 1e-9);
    CHECK(sweep[0].q == 1.0);
    CHECK(sweep[1].q == 1.46);
}

TEST_CASE("scenario validation") {
    ScenarioConfig c = standard_scenario(1);
    CHECK_NOTHROW(c.validate());
    c.pev_types[0].probability = 0.7;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = standard_scenario(1);
    c.segments[0].end_h = c.segments[0].start_h;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK_THROWS_AS(standard_scenario(0), std::invalid_argument);
}
