#pragma once

#include <map>
#include <string>
#include <vector>

#include "amsc/model.hpp"
#include "amsc/pmedian.hpp"

namespace amsc {

// Phase-2 coefficient tables, indexed against the sorted id lists below.
// Supplier entries may be absent (quiet NaN): an absent price means the
// supplier does not sell the part, an absent delivery entry means it cannot
// deliver to that facility.
struct DesignModel {
    std::vector<std::string> if_ids;       // index r / r'
    std::vector<std::string> part_ids;     // index p
    std::vector<std::string> supplier_ids; // index s

    std::vector<std::vector<double>> demand;    // D[r'][p], units/year
    std::vector<std::vector<long long>> orders; // no[r'][p], orders/year
    std::vector<std::vector<char>> has_demand;  // derived: demand > 0

    double facility_fixed_cost = 0.0;  // FC per open facility
    double printer_fixed_cost = 0.0;   // FC per printer
    double printer_capacity_hours = 0.0;
    int max_printers = 1;
    std::vector<std::vector<double>> delivery_cost;       // dc[r][r']
    std::vector<std::vector<double>> delivery_time_hours; // dt[r][r']

    std::vector<std::vector<double>> print_time_hours;          // pt[r][p]
    std::vector<std::vector<double>> print_unit_cost;           // uc[r][p]
    std::vector<std::vector<double>> internal_order_cost;       // ioc[r][p]
    std::vector<std::vector<double>> internal_order_time_hours; // ioct[r][p]

    std::vector<std::vector<double>> supplier_price;          // price[s][p]
    std::vector<std::vector<double>> supplier_order_time;     // oct[s][p]
    std::vector<std::vector<double>> supplier_delivery_cost;  // sdc[s][r']
    std::vector<std::vector<double>> supplier_delivery_time;  // st[s][r']

    double max_lead_hours = 0.0;

    // Usable annual hours per printer: half the nominal capacity, reserved
    // for availability when orders arrive.
    double half_capacity() const { return printer_capacity_hours / 2.0; }

    // production time + inter-facility delivery + internal order handling
    double internal_lead(int r, int r_dest, int p) const {
        return print_time_hours[r][p] + delivery_time_hours[r][r_dest] +
               internal_order_time_hours[r][p];
    }
    // supplier delivery + supplier order handling
    double external_lead(int s, int r_dest, int p) const {
        return supplier_delivery_time[s][r_dest] + supplier_order_time[s][p];
    }

    bool supplier_sells(int s, int p) const;
    bool supplier_delivers(int s, int r_dest) const;

    // Fewest printers that cover `load_hours` of annual print load on a
    // supplying facility (never less than one).
    int printers_for_load(double load_hours) const;
    bool load_fits(double load_hours) const; // within max_printers

    void check() const; // throws Error(Domain) when invariants fail
};

DesignModel build_design_model(const ClusterSolution& clusters, const Instance& instance,
                               double max_lead_hours);

enum class SolveStatus { Optimal, Infeasible };

struct InternalRoute {
    std::string source;      // producing center
    std::string destination; // receiving facility
    std::string part;
    double annual_units = 0.0;
    double lead_hours = 0.0;
    double annual_cost = 0.0;
};

struct ExternalRoute {
    std::string supplier;
    std::string destination;
    std::string part;
    double annual_units = 0.0;
    double lead_hours = 0.0;
    double annual_cost = 0.0;
};

struct DesignSolution {
    SolveStatus status = SolveStatus::Optimal;
    std::vector<std::string> open_pcs;    // sorted
    std::map<std::string, int> printers;  // pc -> count
    std::vector<InternalRoute> internal_routes; // sorted by (destination, part)
    std::vector<ExternalRoute> external_routes; // sorted by (destination, part)
    double total_cost = 0.0;
    double worst_lead_hours = 0.0;
    double solve_seconds = 0.0;
    // When infeasible: demanded pairs with no lead-time-feasible source even
    // with every facility opened.
    std::vector<std::pair<std::string, std::string>> infeasible_pairs;
};

// Exact solver. Two-level branch and bound: the outer level fixes facilities
// open or closed, the inner level solves the single-source assignment with
// step-function printer costs. Ties fall to fewer open centers, then fewer
// printers, then the lexicographically smallest open set.
DesignSolution solve_design(const DesignModel& model);

// Exhaustive reference. Caps: 5 facilities, 3 parts, 2 suppliers, 3 printers.
DesignSolution brute_force_design(const DesignModel& model);

// Recomputes the annual cost of a design from the model coefficients,
// independently of any solver bookkeeping.
double evaluate_cost(const DesignSolution& solution, const DesignModel& model);

struct ConstraintViolation {
    std::string equation; // "7".."17"
    std::string detail;
};

// One checker per constraint family; empty result means feasible.
std::vector<ConstraintViolation> check_feasibility(const DesignSolution& solution,
                                                   const DesignModel& model);

std::string serialize_design(const DesignSolution& solution, bool include_timings = false);
DesignSolution parse_design(const std::string& json_text);
void save_design(const DesignSolution& solution, const std::string& path,
                 bool include_timings = false);
DesignSolution load_design(const std::string& path);

} // namespace amsc
