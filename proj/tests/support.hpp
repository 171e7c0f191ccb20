#pragma once

// Shared fixtures: deterministic synthetic instances shaped like the three
// study scenarios, random models for oracle comparisons, and CLI helpers.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "amsc/costmatrix.hpp"
#include "amsc/locdesign.hpp"
#include "amsc/model.hpp"
#include "amsc/pmedian.hpp"
#include "amsc/scenarios.hpp"
#include "amsc/shipping.hpp"
#include "amsc/sweep.hpp"

namespace testsupport {

using namespace amsc;

// Synthetic geography: cities on a golden-angle spiral, planar kilometres.
struct CityGrid {
    std::vector<double> x_km, y_km;
    std::vector<Location> locations;
};

inline CityGrid make_city_grid(int count, double base_km, double step_km,
                               const char* id_prefix = "C") {
    CityGrid grid;
    for (int k = 0; k < count; ++k) {
        double radius = base_km + step_km * static_cast<double>(k);
        double angle = 2.399963229728653 * static_cast<double>(k);
        double x = radius * std::cos(angle);
        double y = radius * std::sin(angle);
        grid.x_km.push_back(x);
        grid.y_km.push_back(y);
        char id[16];
        std::snprintf(id, sizeof(id), "%s%03d", id_prefix, k + 1);
        Location loc;
        loc.id = id;
        loc.label = std::string("city ") + id;
        loc.latitude = -15.0 + y / 111.0;
        loc.longitude = -50.0 + x / 111.0;
        char postal[16];
        std::snprintf(postal, sizeof(postal), "%05d", 10000 + 137 * k);
        loc.postal_code = postal;
        grid.locations.push_back(std::move(loc));
    }
    return grid;
}

inline double km_between(const CityGrid& grid, int a, int b) {
    double dx = grid.x_km[a] - grid.x_km[b];
    double dy = grid.y_km[a] - grid.y_km[b];
    return std::sqrt(dx * dx + dy * dy);
}

// Base instance over a city grid with the five study parts, paper-style
// economics, and two slow external suppliers. Orders are left empty.
inline Instance make_base_instance(int city_count, double base_km, double step_km,
                                   const char* id_prefix = "C") {
    CityGrid grid = make_city_grid(city_count, base_km, step_km, id_prefix);

    Instance inst;
    inst.locations = grid.locations;

    const double part_pt[5] = {4.0, 1.0, 3.5, 2.0, 3.0};
    const double part_uc[5] = {22.0, 7.0, 21.0, 14.0, 47.0};
    const double part_dim[5] = {80.0, 40.0, 150.0, 60.0, 220.0};
    for (int p = 0; p < 5; ++p) {
        Part part;
        char id[8];
        std::snprintf(id, sizeof(id), "P%d", p + 1);
        part.id = id;
        part.width_mm = part_dim[p];
        part.height_mm = part_dim[p] * 0.6;
        part.depth_mm = part_dim[p] * 0.4;
        for (const auto& loc : inst.locations) {
            part.print_time_hours[loc.id] = part_pt[p];
            part.print_unit_cost[loc.id] = part_uc[p];
            part.internal_order_cost[loc.id] = 5.0;
            part.internal_order_time_hours[loc.id] = 0.0;
        }
        inst.parts.push_back(std::move(part));
    }

    inst.economics.facility_fixed_cost = 20000.0;
    inst.economics.printer_fixed_cost = 11500.0;
    inst.economics.printer_capacity_hours = 2112.0;
    inst.economics.max_printers = 5;
    for (int a = 0; a < city_count; ++a) {
        for (int b = 0; b < city_count; ++b) {
            PairKey key{inst.locations[a].id, inst.locations[b].id};
            if (a == b) {
                inst.economics.delivery_cost[key] = 0.0;
                inst.economics.delivery_time_hours[key] = 0.0;
            } else {
                double km = km_between(grid, a, b);
                inst.economics.delivery_cost[key] = 12.0 + 0.04 * km;
                inst.economics.delivery_time_hours[key] = 6.0 + km / 80.0;
            }
        }
    }

    // Suppliers sit off-grid; their order times keep buying slower than
    // printing, the trade the study scenarios explore.
    struct SupplierSpec {
        const char* id;
        double x_km, y_km;
        double price_factor, price_base;
        double order_time_base;
        bool all_parts;
    };
    const SupplierSpec specs[2] = {{"S1", 300.0, 200.0, 1.6, 10.0, 120.0, true},
                                   {"S2", -800.0, -500.0, 1.2, 0.0, 200.0, false}};
    for (const auto& spec : specs) {
        Supplier sup;
        sup.id = spec.id;
        for (int p = 0; p < 5; ++p) {
            if (!spec.all_parts && p != 1 && p != 3) continue; // S2 sells P2 and P4
            char id[8];
            std::snprintf(id, sizeof(id), "P%d", p + 1);
            sup.price[id] = part_uc[p] * spec.price_factor + spec.price_base;
            sup.order_time_hours[id] = spec.order_time_base + 10.0 * static_cast<double>(p);
        }
        for (int a = 0; a < city_count; ++a) {
            double dx = grid.x_km[a] - spec.x_km;
            double dy = grid.y_km[a] - spec.y_km;
            double km = std::sqrt(dx * dx + dy * dy);
            sup.delivery_cost[inst.locations[a].id] = 18.0 + 0.03 * km;
            sup.delivery_time_hours[inst.locations[a].id] = 24.0 + km / 90.0;
        }
        inst.suppliers.push_back(std::move(sup));
    }

    InlineMatrix matrix;
    for (int a = 0; a < city_count; ++a) {
        for (int b = 0; b < city_count; ++b) {
            PairKey key{inst.locations[a].id, inst.locations[b].id};
            double km = a == b ? 0.0 : km_between(grid, a, b);
            matrix.distance_m[key] = km * 1000.0;
            matrix.travel_time_s[key] = km / 70.0 * 3600.0;
        }
    }
    inst.matrix = std::move(matrix);
    return inst;
}

// Scenario-1 shape: 32 cities, 5 parts, 87 order lines of low demand.
inline Instance make_scenario1_instance() {
    Instance inst = make_base_instance(32, 50.0, 70.0);
    SeededRng rng(11);
    for (int i = 0; i < 87; ++i) {
        size_t city = rng.uniform_index(inst.locations.size());
        size_t part = rng.uniform_index(inst.parts.size());
        long long qty = 1 + static_cast<long long>(rng.uniform_index(4));
        inst.orders.push_back({inst.locations[city].id, inst.parts[part].id, qty});
    }
    return inst;
}

// Scenario-3 shape: 98 cities, 267 orders drawn from scenario 1's fitted
// demand distribution.
inline Instance make_scenario3_instance() {
    // Distinct ids from scenario 1: the fitted client weights carry no mass
    // here, so orders scatter uniformly over all 98 cities.
    Instance base = make_base_instance(98, 30.0, 22.0, "G");
    Instance s1 = make_scenario1_instance();
    DemandDistribution dist = fit_demand_distribution(s1.orders);
    base.orders = generate_orders(dist, 267, 23, base.locations);
    return base;
}

// Clusters with every location open and self-assigned (the p = |R| setting
// the study scenarios use), with aggregation applied.
inline ClusterSolution self_clusters(const Instance& inst) {
    ClusterSolution sol;
    for (const auto& loc : inst.locations) {
        sol.open_ifs.push_back(loc.id);
        sol.assignment[loc.id] = loc.id;
    }
    std::sort(sol.open_ifs.begin(), sol.open_ifs.end());
    sol.objective = 0.0;
    return aggregate_clusters(sol, inst.orders);
}

// Random design models inside the reference-solver caps. Roughly one in ten
// is lead-time infeasible; capacities frequently bind.
inline DesignModel make_random_design_model(uint64_t seed) {
    SeededRng rng(seed);
    auto u = [&]() { return rng.uniform01(); };

    DesignModel m;
    int nr = 1 + static_cast<int>(rng.uniform_index(5));
    int np = 1 + static_cast<int>(rng.uniform_index(3));
    int ns = static_cast<int>(rng.uniform_index(3));
    for (int r = 0; r < nr; ++r) m.if_ids.push_back(std::string("F") + std::to_string(r + 1));
    for (int p = 0; p < np; ++p) m.part_ids.push_back(std::string("P") + std::to_string(p + 1));
    for (int s = 0; s < ns; ++s) m.supplier_ids.push_back(std::string("S") + std::to_string(s + 1));

    m.facility_fixed_cost = u() < 0.1 ? 0.0 : 500.0 + u() * 2000.0;
    m.printer_fixed_cost = u() < 0.1 ? 0.0 : 200.0 + u() * 1500.0;
    m.printer_capacity_hours = 20.0 + u() * 80.0;
    m.max_printers = 1 + static_cast<int>(rng.uniform_index(3));
    m.max_lead_hours = 8.0 + u() * 40.0;

    m.demand.assign(nr, std::vector<double>(np, 0.0));
    m.orders.assign(nr, std::vector<long long>(np, 0));
    m.has_demand.assign(nr, std::vector<char>(np, 0));
    for (int r = 0; r < nr; ++r) {
        for (int p = 0; p < np; ++p) {
            if (u() < 0.55) {
                m.demand[r][p] = 1.0 + static_cast<double>(rng.uniform_index(30));
                m.orders[r][p] = 1 + static_cast<long long>(rng.uniform_index(5));
                m.has_demand[r][p] = 1;
            }
        }
    }

    m.delivery_cost.assign(nr, std::vector<double>(nr, 0.0));
    m.delivery_time_hours.assign(nr, std::vector<double>(nr, 0.0));
    for (int a = 0; a < nr; ++a) {
        for (int b = 0; b < nr; ++b) {
            if (a == b) {
                m.delivery_cost[a][b] = 0.0;
                m.delivery_time_hours[a][b] = u() < 0.5 ? 0.0 : u() * 2.0;
            } else {
                m.delivery_cost[a][b] = u() * 15.0;
                m.delivery_time_hours[a][b] = u() * 20.0;
            }
        }
    }

    m.print_time_hours.assign(nr, std::vector<double>(np, 0.0));
    m.print_unit_cost.assign(nr, std::vector<double>(np, 0.0));
    m.internal_order_cost.assign(nr, std::vector<double>(np, 0.0));
    m.internal_order_time_hours.assign(nr, std::vector<double>(np, 0.0));
    for (int r = 0; r < nr; ++r) {
        for (int p = 0; p < np; ++p) {
            m.print_time_hours[r][p] = u() * 3.0;
            m.print_unit_cost[r][p] = u() * 20.0;
            m.internal_order_cost[r][p] = u() * 10.0;
            m.internal_order_time_hours[r][p] = u() * 4.0;
        }
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    m.supplier_price.assign(ns, std::vector<double>(np, nan));
    m.supplier_order_time.assign(ns, std::vector<double>(np, nan));
    m.supplier_delivery_cost.assign(ns, std::vector<double>(nr, nan));
    m.supplier_delivery_time.assign(ns, std::vector<double>(nr, nan));
    for (int s = 0; s < ns; ++s) {
        for (int p = 0; p < np; ++p) {
            if (u() < 0.7) {
                m.supplier_price[s][p] = u() * 30.0;
                m.supplier_order_time[s][p] = u() * 30.0;
            }
        }
        for (int r = 0; r < nr; ++r) {
            if (u() < 0.8) {
                m.supplier_delivery_cost[s][r] = u() * 10.0;
                m.supplier_delivery_time[s][r] = u() * 25.0;
            }
        }
    }
    m.check();
    return m;
}

inline PMedianProblem make_random_pmedian(uint64_t seed) {
    SeededRng rng(seed);
    PMedianProblem prob;
    int n = 2 + static_cast<int>(rng.uniform_index(11)); // 2..12 candidates
    int f = 1 + static_cast<int>(rng.uniform_index(15)); // 1..15 clients
    for (int r = 0; r < n; ++r) {
        char id[8];
        std::snprintf(id, sizeof(id), "R%02d", r + 1);
        prob.candidate_ids.push_back(id);
    }
    for (int c = 0; c < f; ++c) {
        char id[8];
        std::snprintf(id, sizeof(id), "F%02d", c + 1);
        prob.client_ids.push_back(id);
        prob.client_demand.push_back(static_cast<double>(rng.uniform_index(10)));
    }
    prob.p = 1 + static_cast<int>(rng.uniform_index(n));
    prob.cost.assign(n, std::vector<double>(f, 0.0));
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < f; ++c) prob.cost[r][c] = rng.uniform01();
    prob.check();
    return prob;
}

// --- filesystem and CLI helpers ---

struct TempDir {
    std::filesystem::path path;

    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        for (int i = 0; i < 10000; ++i) {
            auto candidate = base / ("amsc_test_" + std::to_string(::getpid()) + "_" +
                                     std::to_string(counter() + i));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path = candidate;
                counter() += i + 1;
                return;
            }
        }
        throw std::runtime_error("cannot create temp dir");
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }

private:
    static int& counter() {
        static int c = 0;
        return c;
    }
};

inline std::string amsc_bin() {
    const char* bin = std::getenv("AMSC_BIN");
    return bin ? bin : "";
}

// Runs the CLI, captures stdout+stderr, returns the exit code.
inline int run_cli(const std::string& args, const std::string& capture_path) {
    std::string cmd = "\"" + amsc_bin() + "\" " + args + " > \"" + capture_path + "\" 2>&1";
    int rc = std::system(cmd.c_str());
    if (rc == -1) return -1;
    return WEXITSTATUS(rc);
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace testsupport
