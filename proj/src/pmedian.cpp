#include "amsc/pmedian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

#include <json.hpp>

namespace amsc {

using nlohmann::json;

PMedianProblem PMedianProblem::build(const CostMatrix& matrix,
                                     const std::map<std::string, double>& demand, int p,
                                     std::vector<std::string> candidates,
                                     std::vector<std::string> clients) {
    PMedianProblem prob;
    std::sort(candidates.begin(), candidates.end());
    std::sort(clients.begin(), clients.end());
    prob.candidate_ids = std::move(candidates);
    prob.client_ids = std::move(clients);
    prob.p = p;
    prob.client_demand.reserve(prob.client_ids.size());
    for (const auto& f : prob.client_ids) {
        auto it = demand.find(f);
        prob.client_demand.push_back(it == demand.end() ? 0.0 : it->second);
    }
    prob.cost.resize(prob.candidate_ids.size());
    for (size_t r = 0; r < prob.candidate_ids.size(); ++r) {
        prob.cost[r].reserve(prob.client_ids.size());
        for (const auto& f : prob.client_ids)
            prob.cost[r].push_back(matrix.cost(prob.candidate_ids[r], f));
    }
    prob.check();
    return prob;
}

void PMedianProblem::check() const {
    if (candidate_ids.empty())
        throw Error(ErrorCode::Domain, "p-median: no candidate facilities");
    if (p < 1 || static_cast<size_t>(p) > candidate_ids.size())
        throw Error(ErrorCode::Domain, "p-median: p must lie in [1, " +
                                           std::to_string(candidate_ids.size()) + "]");
    if (!std::is_sorted(candidate_ids.begin(), candidate_ids.end()) ||
        !std::is_sorted(client_ids.begin(), client_ids.end()))
        throw Error(ErrorCode::Domain, "p-median: id lists must be sorted");
    if (client_demand.size() != client_ids.size())
        throw Error(ErrorCode::Domain, "p-median: demand vector size mismatch");
    for (double d : client_demand)
        if (d < 0.0) throw Error(ErrorCode::Domain, "p-median: negative demand");
    if (cost.size() != candidate_ids.size())
        throw Error(ErrorCode::Domain, "p-median: cost matrix row count mismatch");
    for (const auto& row : cost)
        if (row.size() != client_ids.size())
            throw Error(ErrorCode::Domain, "p-median: cost matrix column count mismatch");
}

namespace {

// Assign every client to its cheapest facility in `open` (indices ascending,
// ties resolved to the lowest index) and sum demand-weighted costs.
double evaluate_subset(const PMedianProblem& prob, const std::vector<int>& open,
                       std::vector<int>* assignment_out) {
    double total = 0.0;
    if (assignment_out) assignment_out->assign(prob.client_ids.size(), -1);
    for (size_t f = 0; f < prob.client_ids.size(); ++f) {
        double best = std::numeric_limits<double>::infinity();
        int best_r = -1;
        for (int r : open) {
            double c = prob.cost[r][f];
            if (c < best) {
                best = c;
                best_r = r;
            }
        }
        total += prob.client_demand[f] * best;
        if (assignment_out) (*assignment_out)[f] = best_r;
    }
    return total;
}

ClusterSolution make_solution(const PMedianProblem& prob, const std::vector<int>& open) {
    std::vector<int> assignment;
    ClusterSolution sol;
    sol.objective = evaluate_subset(prob, open, &assignment);
    for (int r : open) sol.open_ifs.push_back(prob.candidate_ids[r]);
    std::sort(sol.open_ifs.begin(), sol.open_ifs.end());
    for (size_t f = 0; f < prob.client_ids.size(); ++f)
        sol.assignment[prob.client_ids[f]] = prob.candidate_ids[assignment[f]];
    return sol;
}

double tie_tol(double objective) { return kRelTol * std::max(1.0, std::fabs(objective)); }

} // namespace

ClusterSolution brute_force_pmedian(const PMedianProblem& prob) {
    prob.check();
    const int n = static_cast<int>(prob.candidate_ids.size());
    if (n > 15)
        throw Error(ErrorCode::SizeCap,
                    "brute-force p-median is capped at 15 candidates, got " + std::to_string(n));

    std::vector<int> pick(prob.p);
    for (int i = 0; i < prob.p; ++i) pick[i] = i;

    std::vector<int> best_pick;
    double best_obj = std::numeric_limits<double>::infinity();

    // Lexicographic subset enumeration; strict improvement keeps the first
    // (lexicographically smallest) optimum.
    while (true) {
        double obj = evaluate_subset(prob, pick, nullptr);
        if (obj < best_obj - tie_tol(best_obj) ||
            (best_pick.empty() && obj <= best_obj)) {
            best_obj = obj;
            best_pick = pick;
        }
        int i = prob.p - 1;
        while (i >= 0 && pick[i] == n - prob.p + i) --i;
        if (i < 0) break;
        ++pick[i];
        for (int j = i + 1; j < prob.p; ++j) pick[j] = pick[j - 1] + 1;
    }
    return make_solution(prob, best_pick);
}

namespace {

enum class FState : uint8_t { Undecided = 0, Open = 1, Closed = 2 };

struct PmNode {
    std::vector<FState> state;
    int open_count = 0;
    double bound = 0.0;
    uint64_t seq = 0;
};

struct PmNodeOrder {
    bool operator()(const PmNode& a, const PmNode& b) const {
        if (a.bound != b.bound) return a.bound > b.bound; // min-heap
        return a.seq > b.seq;
    }
};

// Demand-weighted lower bound: every client may use any non-closed facility.
double pm_bound(const PMedianProblem& prob, const std::vector<FState>& state) {
    double total = 0.0;
    const size_t n = prob.candidate_ids.size();
    for (size_t f = 0; f < prob.client_ids.size(); ++f) {
        if (prob.client_demand[f] == 0.0) continue;
        double best = std::numeric_limits<double>::infinity();
        for (size_t r = 0; r < n; ++r) {
            if (state[r] == FState::Closed) continue;
            best = std::min(best, prob.cost[r][f]);
        }
        total += prob.client_demand[f] * best;
    }
    return total;
}

// Lexicographically smallest open set reachable from this node: forced opens
// plus the smallest undecided indices.
std::vector<int> minimal_completion(const std::vector<FState>& state, int p) {
    std::vector<int> open;
    for (size_t r = 0; r < state.size() && static_cast<int>(open.size()) < p; ++r)
        if (state[r] == FState::Open) open.push_back(static_cast<int>(r));
    for (size_t r = 0; r < state.size() && static_cast<int>(open.size()) < p; ++r)
        if (state[r] == FState::Undecided) open.push_back(static_cast<int>(r));
    std::sort(open.begin(), open.end());
    return open;
}

std::vector<int> open_indices(const std::vector<FState>& state) {
    std::vector<int> open;
    for (size_t r = 0; r < state.size(); ++r)
        if (state[r] == FState::Open) open.push_back(static_cast<int>(r));
    return open;
}

// Greedy add: seed the incumbent with a decent subset before searching.
std::vector<int> greedy_subset(const PMedianProblem& prob) {
    const int n = static_cast<int>(prob.candidate_ids.size());
    std::vector<int> open;
    std::vector<char> used(n, 0);
    for (int k = 0; k < prob.p; ++k) {
        int best_r = -1;
        double best_obj = std::numeric_limits<double>::infinity();
        for (int r = 0; r < n; ++r) {
            if (used[r]) continue;
            open.push_back(r);
            double obj = evaluate_subset(prob, open, nullptr);
            open.pop_back();
            if (obj < best_obj) {
                best_obj = obj;
                best_r = r;
            }
        }
        open.push_back(best_r);
        used[best_r] = 1;
    }
    std::sort(open.begin(), open.end());
    return open;
}

} // namespace

ClusterSolution solve_pmedian(const PMedianProblem& prob) {
    prob.check();
    const int n = static_cast<int>(prob.candidate_ids.size());

    std::vector<int> inc_open = greedy_subset(prob);
    double inc_obj = evaluate_subset(prob, inc_open, nullptr);

    std::priority_queue<PmNode, std::vector<PmNode>, PmNodeOrder> queue;
    uint64_t seq = 0;

    PmNode root;
    root.state.assign(n, FState::Undecided);
    root.bound = pm_bound(prob, root.state);
    root.seq = seq++;
    queue.push(std::move(root));

    auto try_leaf = [&](const std::vector<int>& open) {
        double obj = evaluate_subset(prob, open, nullptr);
        double tol = tie_tol(inc_obj);
        if (obj < inc_obj - tol) {
            inc_obj = obj;
            inc_open = open;
        } else if (obj <= inc_obj + tol && open < inc_open) {
            inc_obj = obj;
            inc_open = open;
        }
    };

    while (!queue.empty()) {
        PmNode node = queue.top();
        queue.pop();

        double tol = tie_tol(inc_obj);
        if (node.bound > inc_obj + tol) continue;
        if (node.bound >= inc_obj - tol && minimal_completion(node.state, prob.p) >= inc_open)
            continue; // cannot beat the incumbent nor its tie-break

        int undecided = 0;
        for (auto s : node.state)
            if (s == FState::Undecided) ++undecided;

        if (node.open_count == prob.p) {
            try_leaf(open_indices(node.state));
            continue;
        }
        if (node.open_count + undecided == prob.p) {
            std::vector<int> open = open_indices(node.state);
            for (int r = 0; r < n; ++r)
                if (node.state[r] == FState::Undecided) open.push_back(r);
            std::sort(open.begin(), open.end());
            try_leaf(open);
            continue;
        }
        if (node.open_count + undecided < prob.p) continue; // cannot reach p

        // Branch on the undecided facility that carries the most demand in the
        // bound assignment, weighted by the regret of losing it.
        int branch_r = -1;
        double branch_score = -1.0;
        {
            std::vector<double> score(n, 0.0);
            for (size_t f = 0; f < prob.client_ids.size(); ++f) {
                if (prob.client_demand[f] == 0.0) continue;
                double best = std::numeric_limits<double>::infinity();
                double second = std::numeric_limits<double>::infinity();
                int best_r = -1;
                for (int r = 0; r < n; ++r) {
                    if (node.state[r] == FState::Closed) continue;
                    double c = prob.cost[r][f];
                    if (c < best) {
                        second = best;
                        best = c;
                        best_r = r;
                    } else if (c < second) {
                        second = c;
                    }
                }
                if (best_r >= 0 && node.state[best_r] == FState::Undecided)
                    score[best_r] += prob.client_demand[f] *
                                     ((second == std::numeric_limits<double>::infinity())
                                          ? 1.0
                                          : (second - best));
            }
            for (int r = 0; r < n; ++r) {
                if (node.state[r] != FState::Undecided) continue;
                if (score[r] > branch_score) {
                    branch_score = score[r];
                    branch_r = r;
                }
            }
        }
        if (branch_r < 0) continue;

        PmNode open_child;
        open_child.state = node.state;
        open_child.state[branch_r] = FState::Open;
        open_child.open_count = node.open_count + 1;
        open_child.bound = node.bound; // opening never raises the relaxation
        open_child.seq = seq++;
        queue.push(std::move(open_child));

        PmNode closed_child;
        closed_child.state = node.state;
        closed_child.state[branch_r] = FState::Closed;
        closed_child.open_count = node.open_count;
        closed_child.bound = pm_bound(prob, closed_child.state);
        closed_child.seq = seq++;
        if (closed_child.bound <= inc_obj + tie_tol(inc_obj)) queue.push(std::move(closed_child));
    }

    return make_solution(prob, inc_open);
}

ClusterSolution aggregate_clusters(const ClusterSolution& solution,
                                   const std::vector<OrderLine>& orders) {
    ClusterSolution out = solution;
    out.demand_table.clear();
    out.order_table.clear();
    out.stats.clear();

    std::map<std::pair<std::string, std::string>, std::vector<long long>> grouped;
    for (const auto& line : orders) {
        auto it = solution.assignment.find(line.client_location);
        if (it == solution.assignment.end())
            throw Error(ErrorCode::Reference,
                        "order client '" + line.client_location + "' has no cluster assignment");
        grouped[{it->second, line.part}].push_back(line.quantity);
    }

    for (const auto& [key, quantities] : grouped) {
        const auto& [facility, part] = key;
        long long total = 0;
        for (long long q : quantities) total += q;
        double mean = static_cast<double>(total) / static_cast<double>(quantities.size());
        double var = 0.0;
        for (long long q : quantities) {
            double d = static_cast<double>(q) - mean;
            var += d * d;
        }
        var /= static_cast<double>(quantities.size());

        out.demand_table[facility][part] = static_cast<double>(total);
        out.order_table[facility][part] = static_cast<long long>(quantities.size());
        DemandStats st;
        st.order_count = static_cast<long long>(quantities.size());
        st.mean_demand = mean;
        st.stddev_demand = std::sqrt(var);
        out.stats[facility][part] = st;
    }
    return out;
}

std::string serialize_clusters(const ClusterSolution& sol) {
    json root;
    root["open_ifs"] = sol.open_ifs;
    root["assignment"] = sol.assignment;
    root["objective"] = sol.objective;
    json demand = json::object();
    for (const auto& [facility, parts] : sol.demand_table) demand[facility] = parts;
    root["demand_table"] = demand;
    json orders = json::object();
    for (const auto& [facility, parts] : sol.order_table) orders[facility] = parts;
    root["order_table"] = orders;
    json stats = json::object();
    for (const auto& [facility, parts] : sol.stats) {
        json jp = json::object();
        for (const auto& [part, st] : parts) {
            jp[part] = {{"order_count", st.order_count},
                        {"mean_demand", st.mean_demand},
                        {"stddev_demand", st.stddev_demand}};
        }
        stats[facility] = jp;
    }
    root["stats"] = stats;
    return root.dump(2) + "\n";
}

ClusterSolution parse_clusters(const std::string& json_text) {
    ClusterSolution sol;
    try {
        json root = json::parse(json_text);
        sol.open_ifs = root.at("open_ifs").get<std::vector<std::string>>();
        sol.assignment = root.at("assignment").get<std::map<std::string, std::string>>();
        sol.objective = root.at("objective").get<double>();
        for (auto it = root.at("demand_table").begin(); it != root.at("demand_table").end(); ++it)
            sol.demand_table[it.key()] = it.value().get<std::map<std::string, double>>();
        for (auto it = root.at("order_table").begin(); it != root.at("order_table").end(); ++it)
            sol.order_table[it.key()] = it.value().get<std::map<std::string, long long>>();
        if (root.contains("stats")) {
            for (auto f = root.at("stats").begin(); f != root.at("stats").end(); ++f) {
                for (auto p = f.value().begin(); p != f.value().end(); ++p) {
                    DemandStats st;
                    st.order_count = p.value().at("order_count").get<long long>();
                    st.mean_demand = p.value().at("mean_demand").get<double>();
                    st.stddev_demand = p.value().at("stddev_demand").get<double>();
                    sol.stats[f.key()][p.key()] = st;
                }
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("clusters: ") + e.what());
    }
    return sol;
}

void save_clusters(const ClusterSolution& sol, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
    out << serialize_clusters(sol);
    if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

ClusterSolution load_clusters(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open clusters file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_clusters(buf.str());
}

} // namespace amsc
