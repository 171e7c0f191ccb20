#include <doctest.h>

#include "support.hpp"

using namespace amsc;
using testsupport::make_random_pmedian;

namespace {

PMedianProblem manual_problem(std::vector<std::string> candidates,
                              std::vector<std::string> clients, std::vector<double> demand,
                              std::vector<std::vector<double>> cost, int p) {
    PMedianProblem prob;
    prob.candidate_ids = std::move(candidates);
    prob.client_ids = std::move(clients);
    prob.client_demand = std::move(demand);
    prob.cost = std::move(cost);
    prob.p = p;
    prob.check();
    return prob;
}

} // namespace

TEST_CASE("p equal to candidate count self-assigns everyone at zero cost") {
    // candidates == clients, diagonal cost zero
    auto prob = manual_problem({"A", "B", "C"}, {"A", "B", "C"}, {2, 5, 1},
                               {{0, 1, 1}, {1, 0, 1}, {1, 1, 0}}, 3);
    ClusterSolution sol = solve_pmedian(prob);
    CHECK(sol.objective == 0.0);
    CHECK(sol.open_ifs == std::vector<std::string>{"A", "B", "C"});
    CHECK(sol.assignment.at("A") == "A");
    CHECK(sol.assignment.at("B") == "B");
    CHECK(sol.assignment.at("C") == "C");
}

TEST_CASE("three collinear clients put the single median on the heavy middle") {
    // positions 0, 1, 2 with demands 1, 10, 1; cost proportional to distance
    std::vector<std::vector<double>> cost = {
        {0, 1, 2}, // open at A
        {1, 0, 1}, // open at B
        {2, 1, 0}, // open at C
    };
    auto prob = manual_problem({"A", "B", "C"}, {"A", "B", "C"}, {1, 10, 1}, cost, 1);

    // Brute force over the three single-facility choices:
    //   A: 0*1 + 1*10 + 2*1 = 12, B: 1 + 0 + 1 = 2, C: 2 + 10 + 0 = 12.
    ClusterSolution oracle = brute_force_pmedian(prob);
    CHECK(oracle.open_ifs == std::vector<std::string>{"B"});
    CHECK(oracle.objective == doctest::Approx(2.0));

    ClusterSolution sol = solve_pmedian(prob);
    CHECK(sol.open_ifs == oracle.open_ifs);
    CHECK(sol.objective == doctest::Approx(oracle.objective));
}

TEST_CASE("six candidates, p = 2, seed 7: enumeration fixes the optimum") {
    PMedianProblem prob;
    {
        testsupport::SeededRng rng(7);
        for (int i = 0; i < 6; ++i) {
            prob.candidate_ids.push_back(std::string("R") + std::to_string(i + 1));
            prob.client_ids.push_back(std::string("F") + std::to_string(i + 1));
            prob.client_demand.push_back(1.0 + static_cast<double>(rng.uniform_index(9)));
        }
        prob.cost.assign(6, std::vector<double>(6, 0.0));
        for (int r = 0; r < 6; ++r)
            for (int f = 0; f < 6; ++f) prob.cost[r][f] = rng.uniform01();
        prob.p = 2;
        prob.check();
    }
    ClusterSolution oracle = brute_force_pmedian(prob);
    // frozen from the enumeration over all C(6,2) subsets
    CHECK(oracle.objective == doctest::Approx(5.869261950446961).epsilon(1e-12));
    CHECK(oracle.open_ifs == std::vector<std::string>{"R3", "R4"});

    ClusterSolution sol = solve_pmedian(prob);
    CHECK(sol.objective == doctest::Approx(oracle.objective).epsilon(1e-12));
    CHECK(sol.open_ifs == oracle.open_ifs);
    CHECK(sol.assignment == oracle.assignment);
}

TEST_CASE("brute force size cap") {
    PMedianProblem prob;
    for (int i = 0; i < 20; ++i)
        prob.candidate_ids.push_back(std::string("R") + std::to_string(100 + i));
    prob.client_ids = {"F1"};
    prob.client_demand = {1.0};
    prob.cost.assign(20, std::vector<double>(1, 1.0));
    prob.p = 1;
    try {
        brute_force_pmedian(prob);
        FAIL("expected a size-cap error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SizeCap);
    }
}

TEST_CASE("p = 1 with two candidates picks the cheaper demand-weighted column") {
    auto prob = manual_problem({"A", "B"}, {"F1", "F2"}, {3, 4},
                               {{0.5, 0.9}, {0.6, 0.7}}, 1);
    // A: 3*0.5 + 4*0.9 = 5.1, B: 3*0.6 + 4*0.7 = 4.6
    ClusterSolution sol = brute_force_pmedian(prob);
    CHECK(sol.open_ifs == std::vector<std::string>{"B"});
    CHECK(sol.objective == doctest::Approx(4.6));
}

TEST_CASE("oracle equivalence on random problems") {
    for (uint64_t seed = 1; seed <= 60; ++seed) {
        PMedianProblem prob = make_random_pmedian(seed);
        ClusterSolution expected = brute_force_pmedian(prob);
        ClusterSolution got = solve_pmedian(prob);
        CAPTURE(seed);
        CHECK(got.objective == doctest::Approx(expected.objective).epsilon(1e-12));
        CHECK(got.open_ifs == expected.open_ifs);
    }
}

TEST_CASE("optimal objective is non-increasing in p") {
    PMedianProblem prob = make_random_pmedian(99);
    double previous = std::numeric_limits<double>::infinity();
    for (int p = 1; p <= static_cast<int>(prob.candidate_ids.size()); ++p) {
        PMedianProblem at_p = prob;
        at_p.p = p;
        double obj = solve_pmedian(at_p).objective;
        CHECK(obj <= previous + 1e-12);
        previous = obj;
    }
}

TEST_CASE("no client can improve by switching to another open facility") {
    for (uint64_t seed : {3u, 17u, 29u}) {
        PMedianProblem prob = make_random_pmedian(seed);
        ClusterSolution sol = solve_pmedian(prob);
        for (size_t f = 0; f < prob.client_ids.size(); ++f) {
            auto assigned = sol.assignment.at(prob.client_ids[f]);
            size_t assigned_idx =
                std::lower_bound(prob.candidate_ids.begin(), prob.candidate_ids.end(), assigned) -
                prob.candidate_ids.begin();
            double assigned_cost = prob.cost[assigned_idx][f];
            for (const auto& open_id : sol.open_ifs) {
                size_t r = std::lower_bound(prob.candidate_ids.begin(), prob.candidate_ids.end(),
                                            open_id) -
                           prob.candidate_ids.begin();
                CHECK(prob.cost[r][f] >= assigned_cost - 1e-12);
            }
        }
    }
}

TEST_CASE("aggregation: counts, means, population stddev") {
    ClusterSolution clusters;
    clusters.open_ifs = {"A"};
    clusters.assignment = {{"A", "A"}, {"B", "A"}};

    SUBCASE("two orders of the same part") {
        std::vector<OrderLine> orders = {{"A", "P1", 2}, {"B", "P1", 4}};
        ClusterSolution agg = aggregate_clusters(clusters, orders);
        CHECK(agg.stats.at("A").at("P1").order_count == 2);
        CHECK(agg.stats.at("A").at("P1").mean_demand == doctest::Approx(3.0));
        CHECK(agg.stats.at("A").at("P1").stddev_demand == doctest::Approx(1.0));
        CHECK(agg.demand_table.at("A").at("P1") == doctest::Approx(6.0));
        CHECK(agg.order_table.at("A").at("P1") == 2);
    }
    SUBCASE("single order has zero stddev") {
        std::vector<OrderLine> orders = {{"B", "P2", 5}};
        ClusterSolution agg = aggregate_clusters(clusters, orders);
        CHECK(agg.stats.at("A").at("P2").order_count == 1);
        CHECK(agg.stats.at("A").at("P2").mean_demand == doctest::Approx(5.0));
        CHECK(agg.stats.at("A").at("P2").stddev_demand == doctest::Approx(0.0));
    }
    SUBCASE("unassigned client is an error") {
        std::vector<OrderLine> orders = {{"Z", "P1", 1}};
        CHECK_THROWS_AS(aggregate_clusters(clusters, orders), Error);
    }
}

TEST_CASE("aggregation conserves totals on the scenario-1 instance") {
    Instance inst = testsupport::make_scenario1_instance();
    ClusterSolution clusters = testsupport::self_clusters(inst);

    long long total_units = 0;
    for (const auto& line : inst.orders) total_units += line.quantity;

    double aggregated_units = 0.0;
    long long aggregated_orders = 0;
    for (const auto& [facility, parts] : clusters.demand_table)
        for (const auto& [part, units] : parts) aggregated_units += units;
    for (const auto& [facility, parts] : clusters.order_table)
        for (const auto& [part, count] : parts) aggregated_orders += count;

    CHECK(aggregated_units == doctest::Approx(static_cast<double>(total_units)));
    CHECK(aggregated_orders == static_cast<long long>(inst.orders.size()));
}

TEST_CASE("cluster solution JSON round-trips") {
    Instance inst = testsupport::make_scenario1_instance();
    ClusterSolution clusters = testsupport::self_clusters(inst);
    testsupport::TempDir dir;
    save_clusters(clusters, dir.file("clusters.json"));
    ClusterSolution back = load_clusters(dir.file("clusters.json"));
    CHECK(back.open_ifs == clusters.open_ifs);
    CHECK(back.assignment == clusters.assignment);
    CHECK(back.objective == clusters.objective);
    CHECK(back.demand_table == clusters.demand_table);
    CHECK(back.order_table == clusters.order_table);
    CHECK(serialize_clusters(back) == serialize_clusters(clusters));
}
