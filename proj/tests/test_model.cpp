#include <catch_amalgamated.hpp>

#include "orchard/model.hpp"
#include "orchard/scenario.hpp"

using namespace orchard;

namespace {

ChargingRequest make_request(int id, double arrival_h, double deadline_h, double demand,
                             double max_rate = 3.3, double capacity = 35.0) {
    ChargingRequest r;
    r.id = id;
    r.arrival = TimePoint::from_hours(arrival_h);
    r.deadline = TimePoint::from_hours(deadline_h);
    r.demand_kwh = demand;
    r.max_rate_kw = max_rate;
    r.capacity_kwh = capacity;
    return r;
}

}  // namespace

TEST_CASE("request feasibility rule") {
    CHECK(check_request_feasible(make_request(1, 0, 4, 13.0)));        // 13 <= min{13.2, 35}
    CHECK_FALSE(check_request_feasible(make_request(1, 0, 4, 14.0)));  // 14 > 13.2
    CHECK(check_request_feasible(make_request(1, 0, 4, 0.0)));
    // capacity-limited branch
    CHECK_FALSE(check_request_feasible(make_request(1, 0, 20, 40.0)));
}

TEST_CASE("interval decomposition") {
    SECTION("single request") {
        auto d = decompose_intervals({make_request(1, 0, 4, 4)});
        REQUIRE(d.num_intervals() == 1);
        CHECK(d.length_h[0] == 4.0);
        CHECK(d.parked[0] == std::vector<int>{0});
    }
    SECTION("two staggered requests") {
        auto d = decompose_intervals({make_request(1, 0, 3, 1), make_request(2, 1, 4, 1)});
        REQUIRE(d.num_intervals() == 3);
        CHECK(d.length_h == std::vector<double>{1.0, 2.0, 1.0});
        CHECK(d.parked[0] == std::vector<int>{0});
        CHECK(d.parked[1] == std::vector<int>{0, 1});
        CHECK(d.parked[2] == std::vector<int>{1});
        CHECK(d.span[0] == std::pair<int, int>{0, 1});
        CHECK(d.span[1] == std::pair<int, int>{1, 2});
    }
    SECTION("identical windows merge boundaries") {
        auto d = decompose_intervals({make_request(1, 2, 5, 1), make_request(2, 2, 5, 1)});
        REQUIRE(d.num_intervals() == 1);
        CHECK(d.parked[0] == std::vector<int>{0, 1});
    }
    SECTION("empty instance") {
        CHECK(decompose_intervals({}).empty());
    }
}

TEST_CASE("cost evaluation") {
    CostModel cost{1e-4, 0.6e-4};
    SECTION("flat 10 kW for one hour") {
        std::vector reqs{make_request(1, 0, 1, 3)};
        auto d = decompose_intervals(reqs);
        auto s = RateSchedule::zeros(d);
        s.total_kw[0] = 10.0;
        CHECK_THAT(evaluate_cost(s, d, cost), Catch::Matchers::WithinAbs(0.007, 1e-12));
        s.total_kw[0] = 0.0;
        CHECK(evaluate_cost(s, d, cost) == 0.0);
    }
    SECTION("piecewise profile") {
        std::vector reqs{make_request(1, 0, 2, 1), make_request(2, 2, 3, 1)};
        auto d = decompose_intervals(reqs);
        auto s = RateSchedule::zeros(d);
        s.total_kw[0] = 1.0;
        s.total_kw[1] = 3.0;
        CHECK_THAT(evaluate_cost(s, d, cost), Catch::Matchers::WithinAbs(1.16e-3, 1e-12));
    }
    SECTION("mismatched schedule is rejected") {
        auto d = decompose_intervals({make_request(1, 0, 1, 1)});
        RateSchedule s;  // no intervals
        CHECK_THROWS_AS(evaluate_cost(s, d, cost), std::invalid_argument);
    }
}

TEST_CASE("schedule validation") {
    std::vector reqs{make_request(1, 0, 4, 4.0, 2.0)};
    auto d = decompose_intervals(reqs);
    auto s = RateSchedule::zeros(d);
    SECTION("exact delivery") {
        s.set_rate(0, 0, d, 1.0);
        auto rep = validate_schedule(s, reqs, d);
        CHECK(rep.feasible);
        CHECK_THAT(rep.requests[0].delivered_kwh, Catch::Matchers::WithinAbs(4.0, 1e-12));
    }
    SECTION("shortfall") {
        s.set_rate(0, 0, d, 0.9);
        auto rep = validate_schedule(s, reqs, d);
        CHECK_FALSE(rep.feasible);
        CHECK_THAT(rep.requests[0].shortfall_kwh, Catch::Matchers::WithinAbs(0.4, 1e-12));
    }
    SECTION("rate bound breach") {
        s.set_rate(0, 0, d, 2.1);
        auto rep = validate_schedule(s, reqs, d);
        CHECK_FALSE(rep.feasible);
        CHECK_FALSE(rep.requests[0].rates_in_bounds);
    }
}

TEST_CASE("decomposition properties on random instances") {
    Rng rng(20240817);
    for (int trial = 0; trial < 50; ++trial) {
        auto reqs = random_instance(50, rng);
        auto d = decompose_intervals(reqs);

        // partition: span lengths add up exactly to the parking window
        for (std::size_t i = 0; i < reqs.size(); ++i) {
            std::int64_t mh = 0;
            for (int k = d.span[i].first; k <= d.span[i].second; ++k)
                mh += (d.boundaries[k + 1] - d.boundaries[k]).mh;
            CHECK(mh == (reqs[i].deadline - reqs[i].arrival).mh);
        }

        // membership duality: i in parked(k) <=> k in span(i)
        for (std::size_t k = 0; k < d.num_intervals(); ++k)
            for (std::size_t i = 0; i < reqs.size(); ++i) {
                const bool in_parked = std::find(d.parked[k].begin(), d.parked[k].end(),
                                                 static_cast<int>(i)) != d.parked[k].end();
                CHECK(in_parked == d.contains(static_cast<int>(i), static_cast<int>(k)));
            }

        for (double len : d.length_h) CHECK(len > 0.0);
    }
}

TEST_CASE("cost is strictly increasing in any single rate") {
    CostModel cost{1e-4, 0.6e-4};
    std::vector reqs{make_request(1, 0, 3, 2), make_request(2, 1, 4, 2)};
    auto d = decompose_intervals(reqs);
    auto s = RateSchedule::zeros(d);
    s.set_rate(0, 0, d, 1.0);
    s.set_rate(1, 1, d, 0.5);
    const double before = evaluate_cost(s, d, cost);
    s.set_rate(1, 1, d, 0.6);
    CHECK(evaluate_cost(s, d, cost) > before);
}

TEST_CASE("cost is invariant under splitting an interval") {
    CostModel cost{1e-4, 0.6e-4};
    std::vector whole{make_request(1, 0, 4, 4)};
    auto d1 = decompose_intervals(whole);
    auto s1 = RateSchedule::zeros(d1);
    s1.set_rate(0, 0, d1, 1.0);

    // a zero-demand request splits [0,4] at t=2 without changing the load
    std::vector split{make_request(1, 0, 4, 4), make_request(2, 0, 2, 0)};
    auto d2 = decompose_intervals(split);
    REQUIRE(d2.num_intervals() == 2);
    auto s2 = RateSchedule::zeros(d2);
    s2.set_rate(0, 0, d2, 1.0);
    s2.set_rate(0, 1, d2, 1.0);

    CHECK_THAT(evaluate_cost(s1, d1, cost),
               Catch::Matchers::WithinAbs(evaluate_cost(s2, d2, cost), 1e-15));
}
