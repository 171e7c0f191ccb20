#include <doctest.h>

#include "support.hpp"

using namespace amsc;
using testsupport::make_random_design_model;

namespace {

// Minimal hand-editable model: nr facilities, np parts, ns suppliers, no
// demand, generous defaults. Tests poke the tables directly.
DesignModel blank_model(int nr, int np, int ns) {
    DesignModel m;
    for (int r = 0; r < nr; ++r) m.if_ids.push_back(std::string("F") + std::to_string(r + 1));
    for (int p = 0; p < np; ++p) m.part_ids.push_back(std::string("P") + std::to_string(p + 1));
    for (int s = 0; s < ns; ++s) m.supplier_ids.push_back(std::string("S") + std::to_string(s + 1));
    m.facility_fixed_cost = 1000.0;
    m.printer_fixed_cost = 400.0;
    m.printer_capacity_hours = 200.0; // half-capacity 100
    m.max_printers = 3;
    m.max_lead_hours = 50.0;
    m.demand.assign(nr, std::vector<double>(np, 0.0));
    m.orders.assign(nr, std::vector<long long>(np, 0));
    m.has_demand.assign(nr, std::vector<char>(np, 0));
    m.delivery_cost.assign(nr, std::vector<double>(nr, 0.0));
    m.delivery_time_hours.assign(nr, std::vector<double>(nr, 0.0));
    for (int a = 0; a < nr; ++a)
        for (int b = 0; b < nr; ++b)
            if (a != b) {
                m.delivery_cost[a][b] = 3.0;
                m.delivery_time_hours[a][b] = 5.0;
            }
    m.print_time_hours.assign(nr, std::vector<double>(np, 1.0));
    m.print_unit_cost.assign(nr, std::vector<double>(np, 10.0));
    m.internal_order_cost.assign(nr, std::vector<double>(np, 2.0));
    m.internal_order_time_hours.assign(nr, std::vector<double>(np, 1.0));
    const double nan = std::numeric_limits<double>::quiet_NaN();
    m.supplier_price.assign(ns, std::vector<double>(np, nan));
    m.supplier_order_time.assign(ns, std::vector<double>(np, nan));
    m.supplier_delivery_cost.assign(ns, std::vector<double>(nr, nan));
    m.supplier_delivery_time.assign(ns, std::vector<double>(nr, nan));
    return m;
}

void set_demand(DesignModel& m, int r, int p, double units, long long orders) {
    m.demand[r][p] = units;
    m.orders[r][p] = orders;
    m.has_demand[r][p] = units > 0.0 ? 1 : 0;
}

} // namespace

TEST_CASE("build_design_model assembles coefficients and lead times") {
    Instance inst;
    for (const char* id : {"A", "B"}) {
        Location loc;
        loc.id = id;
        loc.label = id;
        inst.locations.push_back(loc);
    }
    Part part;
    part.id = "P1";
    part.width_mm = part.height_mm = part.depth_mm = 10.0;
    for (const char* id : {"A", "B"}) {
        part.print_time_hours[id] = 4.0;
        part.print_unit_cost[id] = 22.0;
        part.internal_order_cost[id] = 5.0;
        part.internal_order_time_hours[id] = 1.0;
    }
    inst.parts.push_back(part);
    inst.economics.facility_fixed_cost = 20000.0;
    inst.economics.printer_fixed_cost = 11500.0;
    inst.economics.printer_capacity_hours = 2112.0;
    inst.economics.max_printers = 5;
    for (const char* a : {"A", "B"})
        for (const char* b : {"A", "B"}) {
            inst.economics.delivery_cost[{a, b}] = std::string(a) == b ? 0.0 : 7.0;
            inst.economics.delivery_time_hours[{a, b}] = std::string(a) == b ? 0.0 : 10.0;
        }
    inst.orders.push_back({"B", "P1", 10});

    ClusterSolution clusters;
    clusters.open_ifs = {"A", "B"};
    clusters.assignment = {{"A", "A"}, {"B", "B"}};
    clusters = aggregate_clusters(clusters, inst.orders);

    SUBCASE("demanded pair and Eq.-style lead sums") {
        DesignModel m = build_design_model(clusters, inst, 48.0);
        CHECK(m.if_ids == std::vector<std::string>{"A", "B"});
        CHECK(m.demand[1][0] == doctest::Approx(10.0));
        CHECK(m.has_demand[1][0] == 1);
        CHECK(m.has_demand[0][0] == 0);
        // pt 4 + dt 10 + ioct 1
        CHECK(m.internal_lead(0, 1, 0) == doctest::Approx(15.0));
        CHECK(m.internal_lead(1, 1, 0) == doctest::Approx(5.0)); // self: dt 0
    }
    SUBCASE("zero demand everywhere means has_demand all false") {
        Instance no_orders = inst;
        no_orders.orders.clear();
        ClusterSolution empty_clusters;
        empty_clusters.open_ifs = {"A", "B"};
        empty_clusters.assignment = {{"A", "A"}, {"B", "B"}};
        empty_clusters = aggregate_clusters(empty_clusters, no_orders.orders);
        DesignModel m = build_design_model(empty_clusters, no_orders, 48.0);
        for (const auto& row : m.has_demand)
            for (char h : row) CHECK(h == 0);
    }
    SUBCASE("missing delivery coefficient is named") {
        Instance broken = inst;
        broken.economics.delivery_time_hours.erase({"A", "B"});
        try {
            build_design_model(clusters, broken, 48.0);
            FAIL("expected a missing-coefficient error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MissingCoefficient);
            CHECK(std::string(e.what()).find("(A, B)") != std::string::npos);
        }
    }
}

TEST_CASE("cheap feasible supplier beats opening any center") {
    DesignModel m = blank_model(1, 1, 1);
    set_demand(m, 0, 0, 10.0, 4);
    m.supplier_price[0][0] = 1.0;
    m.supplier_order_time[0][0] = 5.0;
    m.supplier_delivery_cost[0][0] = 2.0;
    m.supplier_delivery_time[0][0] = 10.0;
    // Designs by hand: buy = 1*10 + 2*4 = 18; make = 1000 + 400 + 10*10 + 2*4 = 1508.
    DesignSolution sol = solve_design(m);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.open_pcs.empty());
    REQUIRE(sol.external_routes.size() == 1);
    CHECK(sol.internal_routes.empty());
    CHECK(sol.total_cost == doctest::Approx(18.0));

    DesignSolution oracle = brute_force_design(m);
    CHECK(oracle.total_cost == doctest::Approx(sol.total_cost));
    CHECK(oracle.open_pcs == sol.open_pcs);
}

TEST_CASE("slow suppliers force the one feasible center open with minimal printers") {
    DesignModel m = blank_model(1, 1, 1);
    set_demand(m, 0, 0, 100.0, 6);
    m.print_time_hours[0][0] = 2.0; // load 200 over half-capacity 100 -> 2 printers
    m.supplier_price[0][0] = 0.5;
    m.supplier_order_time[0][0] = 500.0; // far over the 50 h cap
    m.supplier_delivery_cost[0][0] = 1.0;
    m.supplier_delivery_time[0][0] = 1.0;

    DesignSolution sol = solve_design(m);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.open_pcs == std::vector<std::string>{"F1"});
    CHECK(sol.printers.at("F1") == 2);
    // FC^R + 2 FC^P + uc*D + dc*no + ioc*no = 1000 + 800 + 10*100 + 0 + 2*6
    CHECK(sol.total_cost == doctest::Approx(1000.0 + 800.0 + 1000.0 + 0.0 + 12.0));

    DesignSolution oracle = brute_force_design(m);
    CHECK(oracle.total_cost == doctest::Approx(sol.total_cost));
    CHECK(oracle.printers.at("F1") == 2);
}

TEST_CASE("uncoverable pair yields an infeasible status with a witness") {
    DesignModel m = blank_model(2, 1, 1);
    set_demand(m, 1, 0, 5.0, 1);
    m.max_lead_hours = 3.0; // self print lead is 1 + 0 + 1 = 2, spoil it:
    m.print_time_hours[0][0] = 9.0;
    m.print_time_hours[1][0] = 9.0;
    m.supplier_price[0][0] = 1.0;
    m.supplier_order_time[0][0] = 99.0;
    m.supplier_delivery_cost[0][0] = 1.0;
    m.supplier_delivery_cost[0][1] = 1.0;
    m.supplier_delivery_time[0][0] = 99.0;
    m.supplier_delivery_time[0][1] = 99.0;

    DesignSolution sol = solve_design(m);
    REQUIRE(sol.status == SolveStatus::Infeasible);
    REQUIRE(sol.infeasible_pairs.size() == 1);
    CHECK(sol.infeasible_pairs[0] == std::pair<std::string, std::string>{"F2", "P1"});

    DesignSolution oracle = brute_force_design(m);
    REQUIRE(oracle.status == SolveStatus::Infeasible);
    CHECK(oracle.infeasible_pairs == sol.infeasible_pairs);
}

TEST_CASE("load exactly at nominal capacity needs two printers") {
    DesignModel m = blank_model(1, 1, 0);
    set_demand(m, 0, 0, 100.0, 1);
    m.print_time_hours[0][0] = 2.0; // load 200 == printer_capacity_hours
    REQUIRE(m.demand[0][0] * m.print_time_hours[0][0] == doctest::Approx(200.0));
    DesignSolution sol = solve_design(m);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.printers.at("F1") == 2);
}

TEST_CASE("zero-demand model yields the empty design at zero cost") {
    DesignModel m = blank_model(3, 2, 1);
    DesignSolution sol = solve_design(m);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.open_pcs.empty());
    CHECK(sol.internal_routes.empty());
    CHECK(sol.external_routes.empty());
    CHECK(sol.total_cost == 0.0);

    DesignSolution oracle = brute_force_design(m);
    CHECK(oracle.total_cost == 0.0);
    CHECK(oracle.open_pcs.empty());
}

TEST_CASE("symmetric two-facility tie falls to the lexicographically smaller set") {
    DesignModel m = blank_model(2, 1, 0);
    set_demand(m, 0, 0, 5.0, 2);
    set_demand(m, 1, 0, 5.0, 2);
    // fully symmetric: same production costs, symmetric delivery
    DesignSolution oracle = brute_force_design(m);
    DesignSolution sol = solve_design(m);
    CHECK(oracle.open_pcs == std::vector<std::string>{"F1"});
    CHECK(sol.open_pcs == std::vector<std::string>{"F1"});
    CHECK(sol.total_cost == doctest::Approx(oracle.total_cost));
}

TEST_CASE("brute force size caps") {
    DesignModel m = blank_model(5, 3, 2);
    m.max_printers = 4;
    CHECK_THROWS_AS(brute_force_design(m), Error);
    DesignModel big = blank_model(5, 3, 2);
    big.if_ids.push_back("F6"); // malformed on purpose to trip the cap first
    CHECK_THROWS_AS(brute_force_design(big), Error);
}

TEST_CASE("oracle equivalence over random in-cap models") {
    int infeasible_count = 0;
    for (uint64_t seed = 1; seed <= 60; ++seed) {
        DesignModel m = make_random_design_model(seed);
        DesignSolution expected = brute_force_design(m);
        DesignSolution got = solve_design(m);
        CAPTURE(seed);
        REQUIRE(got.status == expected.status);
        if (expected.status == SolveStatus::Infeasible) {
            ++infeasible_count;
            CHECK(got.infeasible_pairs == expected.infeasible_pairs);
            continue;
        }
        CHECK(std::fabs(got.total_cost - expected.total_cost) <=
              1e-9 * std::max(1.0, std::fabs(expected.total_cost)));
        CHECK(got.open_pcs == expected.open_pcs);
        CHECK(got.printers == expected.printers);
    }
    // The generator should exercise both outcomes.
    CHECK(infeasible_count > 0);
    CHECK(infeasible_count < 60);
}

TEST_CASE("evaluate_cost recomputes reported totals") {
    SUBCASE("empty design on a zero-demand model") {
        DesignModel m = blank_model(2, 1, 0);
        DesignSolution sol = solve_design(m);
        CHECK(evaluate_cost(sol, m) == 0.0);
    }
    SUBCASE("double-entry bookkeeping on random models") {
        for (uint64_t seed = 100; seed < 130; ++seed) {
            DesignModel m = make_random_design_model(seed);
            DesignSolution sol = solve_design(m);
            if (sol.status != SolveStatus::Optimal) continue;
            CHECK(std::fabs(evaluate_cost(sol, m) - sol.total_cost) <= 1e-6);
        }
    }
    SUBCASE("hand-built design matches hand arithmetic") {
        DesignModel m = blank_model(1, 1, 0);
        set_demand(m, 0, 0, 100.0, 6);
        m.print_time_hours[0][0] = 2.0;
        DesignSolution sol;
        sol.open_pcs = {"F1"};
        sol.printers["F1"] = 2;
        sol.internal_routes.push_back({"F1", "F1", "P1", 100.0, 2.0, 0.0});
        double expected = 1000.0 + 2 * 400.0 + 10.0 * 100.0 + 0.0 * 6.0 + 2.0 * 6.0;
        CHECK(evaluate_cost(sol, m) == doctest::Approx(expected));
    }
    SUBCASE("dangling reference throws") {
        DesignModel m = blank_model(1, 1, 0);
        DesignSolution sol;
        sol.open_pcs = {"F9"};
        sol.printers["F9"] = 1;
        CHECK_THROWS_AS(evaluate_cost(sol, m), Error);
    }
}

TEST_CASE("check_feasibility is clean on solver output and catches injected breaks") {
    DesignModel m = blank_model(2, 1, 1);
    set_demand(m, 0, 0, 10.0, 2);
    set_demand(m, 1, 0, 20.0, 3);
    m.supplier_price[0][0] = 4.0;
    m.supplier_order_time[0][0] = 5.0;
    m.supplier_delivery_cost[0][0] = 2.0;
    m.supplier_delivery_cost[0][1] = 2.0;
    m.supplier_delivery_time[0][0] = 5.0;
    m.supplier_delivery_time[0][1] = 5.0;

    DesignSolution sol = solve_design(m);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(check_feasibility(sol, m).empty());

    auto has_equation = [](const std::vector<ConstraintViolation>& vs, const std::string& eq) {
        for (const auto& v : vs)
            if (v.equation == eq) return true;
        return false;
    };

    SUBCASE("route from a closed center") {
        DesignSolution closed;
        closed.internal_routes.push_back({"F2", "F1", "P1", 10.0, 2.0, 0.0});
        closed.internal_routes.push_back({"F2", "F2", "P1", 20.0, 2.0, 0.0});
        auto vs = check_feasibility(closed, m);
        CHECK(has_equation(vs, "11"));
        CHECK(has_equation(vs, "12") == false);
    }
    SUBCASE("overloaded center") {
        DesignSolution overloaded;
        overloaded.open_pcs = {"F1"};
        overloaded.printers["F1"] = 1; // half-capacity 100 < load 10+20 hours... scale up
        overloaded.internal_routes.push_back({"F1", "F1", "P1", 10.0, 2.0, 0.0});
        overloaded.internal_routes.push_back({"F1", "F2", "P1", 20.0, 7.0, 0.0});
        DesignModel heavy = m;
        heavy.print_time_hours[0][0] = 8.0; // load 240 > 1 printer's 100
        auto vs = check_feasibility(overloaded, heavy);
        CHECK(has_equation(vs, "16"));
    }
    SUBCASE("open center that supplies nothing") {
        DesignSolution idle = sol;
        idle.open_pcs.push_back("F2");
        std::sort(idle.open_pcs.begin(), idle.open_pcs.end());
        idle.printers["F2"] = 1;
        auto vs = check_feasibility(idle, m);
        CHECK(has_equation(vs, "12"));
    }
    SUBCASE("demanded pair with no route") {
        DesignSolution missing = sol;
        REQUIRE(!missing.external_routes.empty());
        missing.external_routes.pop_back();
        auto vs = check_feasibility(missing, m);
        CHECK((has_equation(vs, "15") || has_equation(vs, "17")));
    }
    SUBCASE("printer ceiling") {
        DesignSolution many = sol;
        if (many.open_pcs.empty()) {
            many.open_pcs = {"F1"};
            many.internal_routes.push_back({"F1", "F1", "P1", 10.0, 2.0, 0.0});
        }
        many.printers[many.open_pcs[0]] = m.max_printers + 1;
        auto vs = check_feasibility(many, m);
        CHECK(has_equation(vs, "7"));
    }
}

TEST_CASE("capacity tightness: no printer can be shed") {
    for (uint64_t seed = 200; seed < 230; ++seed) {
        DesignModel m = make_random_design_model(seed);
        DesignSolution sol = solve_design(m);
        if (sol.status != SolveStatus::Optimal) continue;
        std::map<std::string, double> load;
        for (const auto& route : sol.internal_routes) {
            int r = 0, p = 0;
            for (size_t i = 0; i < m.if_ids.size(); ++i)
                if (m.if_ids[i] == route.source) r = static_cast<int>(i);
            for (size_t i = 0; i < m.part_ids.size(); ++i)
                if (m.part_ids[i] == route.part) p = static_cast<int>(i);
            int dest = 0;
            for (size_t i = 0; i < m.if_ids.size(); ++i)
                if (m.if_ids[i] == route.destination) dest = static_cast<int>(i);
            load[route.source] += m.demand[dest][p] * m.print_time_hours[r][p];
        }
        for (const auto& [pc, printers] : sol.printers) {
            CAPTURE(seed);
            CHECK(printers == m.printers_for_load(load[pc]));
            if (printers > 1)
                CHECK(load[pc] >
                      static_cast<double>(printers - 1) * m.half_capacity() * (1.0 - 1e-9));
        }
    }
}

TEST_CASE("lead-time monotonicity pointwise") {
    for (uint64_t seed : {301u, 302u, 303u, 304u, 305u}) {
        DesignModel m = make_random_design_model(seed);
        double previous = std::numeric_limits<double>::infinity();
        for (double cap : {0.6, 1.0, 1.6, 2.5}) {
            DesignModel scaled = m;
            scaled.max_lead_hours = m.max_lead_hours * cap;
            DesignSolution sol = solve_design(scaled);
            if (sol.status != SolveStatus::Optimal) continue;
            CAPTURE(seed);
            CAPTURE(cap);
            CHECK(sol.total_cost <= previous + 1e-6);
            previous = sol.total_cost;
        }
    }
}

TEST_CASE("single-sourcing holds on solver outputs") {
    for (uint64_t seed = 400; seed < 420; ++seed) {
        DesignModel m = make_random_design_model(seed);
        DesignSolution sol = solve_design(m);
        if (sol.status != SolveStatus::Optimal) continue;
        std::map<std::pair<std::string, std::string>, int> covered;
        for (const auto& route : sol.internal_routes) ++covered[{route.destination, route.part}];
        for (const auto& route : sol.external_routes) ++covered[{route.destination, route.part}];
        size_t demanded = 0;
        for (size_t r = 0; r < m.if_ids.size(); ++r)
            for (size_t p = 0; p < m.part_ids.size(); ++p)
                if (m.has_demand[r][p]) {
                    ++demanded;
                    CHECK(covered[{m.if_ids[r], m.part_ids[p]}] == 1);
                }
        CHECK(covered.size() == demanded);
    }
}

TEST_CASE("at the minimal cap every demand is served within its print lead") {
    // dt is zero on the diagonal, so max(pt + ioct) over demanded pairs is
    // attainable by self-supply everywhere.
    DesignModel m = blank_model(3, 2, 0);
    set_demand(m, 0, 0, 4.0, 1);
    set_demand(m, 1, 1, 6.0, 2);
    set_demand(m, 2, 0, 3.0, 1);
    m.print_time_hours[0][0] = 4.0;
    m.print_time_hours[1][1] = 2.0;
    m.print_time_hours[2][0] = 4.0;
    double cap = 0.0;
    for (int r = 0; r < 3; ++r)
        for (int p = 0; p < 2; ++p)
            if (m.has_demand[r][p])
                cap = std::max(cap, m.print_time_hours[r][p] + m.internal_order_time_hours[r][p]);
    m.max_lead_hours = cap;
    DesignSolution sol = solve_design(m);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.worst_lead_hours <= cap + 1e-12);

    DesignModel below = m;
    below.max_lead_hours = cap - 1e-6;
    CHECK(solve_design(below).status == SolveStatus::Infeasible);
}

TEST_CASE("design JSON round-trips") {
    DesignModel m = make_random_design_model(7);
    DesignSolution sol = solve_design(m);
    testsupport::TempDir dir;
    save_design(sol, dir.file("design.json"));
    DesignSolution back = load_design(dir.file("design.json"));
    CHECK(back.status == sol.status);
    CHECK(back.open_pcs == sol.open_pcs);
    CHECK(back.printers == sol.printers);
    CHECK(back.total_cost == sol.total_cost);
    CHECK(back.worst_lead_hours == sol.worst_lead_hours);
    CHECK(back.internal_routes.size() == sol.internal_routes.size());
    CHECK(back.external_routes.size() == sol.external_routes.size());
    CHECK(back.solve_seconds == 0.0); // timings stay out of payloads by default
}
