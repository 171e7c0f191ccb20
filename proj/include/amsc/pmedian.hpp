#pragma once

#include <map>
#include <string>
#include <vector>

#include "amsc/costmatrix.hpp"
#include "amsc/model.hpp"

namespace amsc {

// Demand-weighted clustering input. Candidate and client ids are kept sorted;
// cost[r][f] follows those orders.
struct PMedianProblem {
    std::vector<std::string> candidate_ids;
    std::vector<std::string> client_ids;
    std::vector<double> client_demand;      // parallel to client_ids
    std::vector<std::vector<double>> cost;  // cost[candidate][client]
    int p = 1;

    static PMedianProblem build(const CostMatrix& matrix,
                                const std::map<std::string, double>& demand, int p,
                                std::vector<std::string> candidates,
                                std::vector<std::string> clients);

    void check() const; // throws Error(Domain) when invariants fail
};

struct DemandStats {
    long long order_count = 0;
    double mean_demand = 0.0;
    double stddev_demand = 0.0; // population
};

struct ClusterSolution {
    std::vector<std::string> open_ifs;             // sorted
    std::map<std::string, std::string> assignment; // client -> facility
    double objective = 0.0;

    // Populated by aggregate_clusters: facility -> part -> value.
    std::map<std::string, std::map<std::string, double>> demand_table;
    std::map<std::string, std::map<std::string, long long>> order_table;
    std::map<std::string, std::map<std::string, DemandStats>> stats;
};

// Exact solver: branch and bound over open subsets. Clients are assigned to
// the cheapest open facility, ties to the lowest id; among equal-objective
// subsets the lexicographically smallest id vector wins.
ClusterSolution solve_pmedian(const PMedianProblem& problem);

// Exhaustive reference. Capped at 15 candidates.
ClusterSolution brute_force_pmedian(const PMedianProblem& problem);

// Per-(facility, part) order statistics plus the demand/order tables that feed
// the design phase. Standard deviation is population (divide by n).
ClusterSolution aggregate_clusters(const ClusterSolution& solution,
                                   const std::vector<OrderLine>& orders);

std::string serialize_clusters(const ClusterSolution& solution);
ClusterSolution parse_clusters(const std::string& json_text);
void save_clusters(const ClusterSolution& solution, const std::string& path);
ClusterSolution load_clusters(const std::string& path);

} // namespace amsc
