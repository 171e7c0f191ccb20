#include "amsc/locdesign.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <queue>
#include <sstream>

#include <json.hpp>

namespace amsc {

using nlohmann::json;

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Slack used when a load sits exactly on a printer-step boundary.
constexpr double kCapSlack = 1e-9;
} // namespace

bool DesignModel::supplier_sells(int s, int p) const {
    return !std::isnan(supplier_price[s][p]) && !std::isnan(supplier_order_time[s][p]);
}

bool DesignModel::supplier_delivers(int s, int r_dest) const {
    return !std::isnan(supplier_delivery_cost[s][r_dest]) &&
           !std::isnan(supplier_delivery_time[s][r_dest]);
}

int DesignModel::printers_for_load(double load_hours) const {
    double q = load_hours / half_capacity();
    int n = static_cast<int>(std::ceil(q - kCapSlack));
    return std::max(1, n);
}

bool DesignModel::load_fits(double load_hours) const {
    return printers_for_load(load_hours) <= max_printers;
}

void DesignModel::check() const {
    const size_t nr = if_ids.size();
    const size_t np = part_ids.size();
    const size_t ns = supplier_ids.size();
    auto expect = [&](bool ok, const std::string& what) {
        if (!ok) throw Error(ErrorCode::Domain, "design model: " + what);
    };
    expect(nr > 0, "no facilities");
    expect(std::is_sorted(if_ids.begin(), if_ids.end()), "facility ids must be sorted");
    expect(std::is_sorted(part_ids.begin(), part_ids.end()), "part ids must be sorted");
    expect(std::is_sorted(supplier_ids.begin(), supplier_ids.end()), "supplier ids must be sorted");
    expect(max_lead_hours > 0.0, "max lead hours must be positive");
    expect(printer_capacity_hours > 0.0, "printer capacity must be positive");
    expect(max_printers >= 1, "max printers must be at least 1");

    auto shape = [&](const auto& table, size_t rows, size_t cols, const std::string& name) {
        expect(table.size() == rows, name + " row count");
        for (const auto& row : table) expect(row.size() == cols, name + " column count");
    };
    shape(demand, nr, np, "demand");
    shape(orders, nr, np, "orders");
    shape(has_demand, nr, np, "has_demand");
    shape(delivery_cost, nr, nr, "delivery_cost");
    shape(delivery_time_hours, nr, nr, "delivery_time_hours");
    shape(print_time_hours, nr, np, "print_time_hours");
    shape(print_unit_cost, nr, np, "print_unit_cost");
    shape(internal_order_cost, nr, np, "internal_order_cost");
    shape(internal_order_time_hours, nr, np, "internal_order_time_hours");
    shape(supplier_price, ns, np, "supplier_price");
    shape(supplier_order_time, ns, np, "supplier_order_time");
    shape(supplier_delivery_cost, ns, nr, "supplier_delivery_cost");
    shape(supplier_delivery_time, ns, nr, "supplier_delivery_time");

    for (size_t r = 0; r < nr; ++r) {
        for (size_t p = 0; p < np; ++p) {
            expect(demand[r][p] >= 0.0, "negative demand");
            expect(has_demand[r][p] == (demand[r][p] > 0.0), "has_demand must mirror demand");
            if (demand[r][p] > 0.0)
                expect(orders[r][p] >= 1, "demanded pair with no orders");
        }
    }
}

DesignModel build_design_model(const ClusterSolution& clusters, const Instance& instance,
                               double max_lead_hours) {
    if (max_lead_hours <= 0.0)
        throw Error(ErrorCode::Domain, "max lead hours must be positive");

    DesignModel m;
    m.if_ids = clusters.open_ifs;
    std::sort(m.if_ids.begin(), m.if_ids.end());
    for (const auto& p : instance.parts) m.part_ids.push_back(p.id);
    std::sort(m.part_ids.begin(), m.part_ids.end());
    for (const auto& s : instance.suppliers) m.supplier_ids.push_back(s.id);
    std::sort(m.supplier_ids.begin(), m.supplier_ids.end());

    const size_t nr = m.if_ids.size();
    const size_t np = m.part_ids.size();
    const size_t ns = m.supplier_ids.size();
    if (nr == 0) throw Error(ErrorCode::Domain, "clusters carry no open facilities");

    m.max_lead_hours = max_lead_hours;
    m.facility_fixed_cost = instance.economics.facility_fixed_cost;
    m.printer_fixed_cost = instance.economics.printer_fixed_cost;
    m.printer_capacity_hours = instance.economics.printer_capacity_hours;
    m.max_printers = instance.economics.max_printers;

    m.demand.assign(nr, std::vector<double>(np, 0.0));
    m.orders.assign(nr, std::vector<long long>(np, 0));
    m.has_demand.assign(nr, std::vector<char>(np, 0));
    for (size_t r = 0; r < nr; ++r) {
        auto dit = clusters.demand_table.find(m.if_ids[r]);
        auto oit = clusters.order_table.find(m.if_ids[r]);
        for (size_t p = 0; p < np; ++p) {
            if (dit != clusters.demand_table.end()) {
                auto cell = dit->second.find(m.part_ids[p]);
                if (cell != dit->second.end()) m.demand[r][p] = cell->second;
            }
            if (oit != clusters.order_table.end()) {
                auto cell = oit->second.find(m.part_ids[p]);
                if (cell != oit->second.end()) m.orders[r][p] = cell->second;
            }
            m.has_demand[r][p] = m.demand[r][p] > 0.0 ? 1 : 0;
            if (m.has_demand[r][p] && m.orders[r][p] < 1)
                throw Error(ErrorCode::Domain, "facility " + m.if_ids[r] + " demands part " +
                                                   m.part_ids[p] + " but has no order count");
        }
    }

    auto lookup = [](const std::map<std::string, double>& table, const std::string& key,
                     const std::string& what) {
        auto it = table.find(key);
        if (it == table.end())
            throw Error(ErrorCode::MissingCoefficient, what + " missing for '" + key + "'");
        return it->second;
    };

    m.print_time_hours.assign(nr, std::vector<double>(np, 0.0));
    m.print_unit_cost.assign(nr, std::vector<double>(np, 0.0));
    m.internal_order_cost.assign(nr, std::vector<double>(np, 0.0));
    m.internal_order_time_hours.assign(nr, std::vector<double>(np, 0.0));
    for (size_t p = 0; p < np; ++p) {
        const Part* part = instance.find_part(m.part_ids[p]);
        if (!part)
            throw Error(ErrorCode::Reference, "instance has no part '" + m.part_ids[p] + "'");
        for (size_t r = 0; r < nr; ++r) {
            const std::string what = "part " + part->id;
            m.print_time_hours[r][p] =
                lookup(part->print_time_hours, m.if_ids[r], what + " print_time_hours");
            m.print_unit_cost[r][p] =
                lookup(part->print_unit_cost, m.if_ids[r], what + " print_unit_cost");
            m.internal_order_cost[r][p] =
                lookup(part->internal_order_cost, m.if_ids[r], what + " internal_order_cost");
            m.internal_order_time_hours[r][p] = lookup(
                part->internal_order_time_hours, m.if_ids[r], what + " internal_order_time_hours");
        }
    }

    m.delivery_cost.assign(nr, std::vector<double>(nr, 0.0));
    m.delivery_time_hours.assign(nr, std::vector<double>(nr, 0.0));
    for (size_t a = 0; a < nr; ++a) {
        for (size_t b = 0; b < nr; ++b) {
            PairKey key{m.if_ids[a], m.if_ids[b]};
            auto cit = instance.economics.delivery_cost.find(key);
            auto tit = instance.economics.delivery_time_hours.find(key);
            if (a == b) {
                // Self-delivery defaults to free and instantaneous.
                m.delivery_cost[a][b] = cit == instance.economics.delivery_cost.end()
                                            ? 0.0
                                            : cit->second;
                m.delivery_time_hours[a][b] =
                    tit == instance.economics.delivery_time_hours.end() ? 0.0 : tit->second;
                continue;
            }
            if (cit == instance.economics.delivery_cost.end())
                throw Error(ErrorCode::MissingCoefficient, "economics.delivery_cost missing for (" +
                                                               key.first + ", " + key.second + ")");
            if (tit == instance.economics.delivery_time_hours.end())
                throw Error(ErrorCode::MissingCoefficient,
                            "economics.delivery_time_hours missing for (" + key.first + ", " +
                                key.second + ")");
            m.delivery_cost[a][b] = cit->second;
            m.delivery_time_hours[a][b] = tit->second;
        }
    }

    m.supplier_price.assign(ns, std::vector<double>(np, kNaN));
    m.supplier_order_time.assign(ns, std::vector<double>(np, kNaN));
    m.supplier_delivery_cost.assign(ns, std::vector<double>(nr, kNaN));
    m.supplier_delivery_time.assign(ns, std::vector<double>(nr, kNaN));
    for (size_t s = 0; s < ns; ++s) {
        const Supplier* sup = instance.find_supplier(m.supplier_ids[s]);
        for (size_t p = 0; p < np; ++p) {
            auto pit = sup->price.find(m.part_ids[p]);
            auto oit = sup->order_time_hours.find(m.part_ids[p]);
            if (pit == sup->price.end() && oit == sup->order_time_hours.end()) continue;
            if (pit == sup->price.end() || oit == sup->order_time_hours.end())
                throw Error(ErrorCode::MissingCoefficient,
                            "supplier " + sup->id + " lists part " + m.part_ids[p] +
                                " with price or order time but not both");
            m.supplier_price[s][p] = pit->second;
            m.supplier_order_time[s][p] = oit->second;
        }
        for (size_t r = 0; r < nr; ++r) {
            auto cit = sup->delivery_cost.find(m.if_ids[r]);
            auto tit = sup->delivery_time_hours.find(m.if_ids[r]);
            if (cit == sup->delivery_cost.end() && tit == sup->delivery_time_hours.end()) continue;
            if (cit == sup->delivery_cost.end() || tit == sup->delivery_time_hours.end())
                throw Error(ErrorCode::MissingCoefficient,
                            "supplier " + sup->id + " lists facility " + m.if_ids[r] +
                                " with delivery cost or time but not both");
            m.supplier_delivery_cost[s][r] = cit->second;
            m.supplier_delivery_time[s][r] = tit->second;
        }
    }

    m.check();
    return m;
}

// ---------------------------------------------------------------------------
// Solver internals
// ---------------------------------------------------------------------------

namespace {

// One way to serve a demanded (facility, part) pair.
struct Source {
    bool internal = false;
    int idx = -1;      // facility or supplier index
    double cost = 0.0; // annual route cost
    double load = 0.0; // print hours placed on the producer (internal only)
    double lead = 0.0;
};

struct PairDemand {
    int dest = -1;
    int part = -1;
    double units = 0.0;
    long long order_count = 0;
    std::vector<Source> sources; // feasible, sorted by (cost, external-first, idx)
    // Same sources with each internal cost raised by the linearized printer
    // charge FC^P * load / half_capacity, re-sorted. ceil(load/half) printers
    // always cost at least this much, so bounds over these costs stay valid.
    std::vector<Source> charged;
};

struct Prepared {
    std::vector<PairDemand> pairs;              // sorted by (dest, part)
    std::vector<std::vector<int>> pairs_using;  // facility -> pair indices it can serve
    std::vector<double> amortized_fixed;        // facility -> (FC^R + FC^P) / m_r
    std::vector<int> inner_order;               // pair indices, decreasing print load
    std::vector<std::pair<std::string, std::string>> witnesses; // uncoverable pairs
};

double internal_route_cost(const DesignModel& m, int r, int dest, int part) {
    return m.print_unit_cost[r][part] * m.demand[dest][part] +
           m.delivery_cost[r][dest] * static_cast<double>(m.orders[dest][part]) +
           m.internal_order_cost[r][part] * static_cast<double>(m.orders[dest][part]);
}

double external_route_cost(const DesignModel& m, int s, int dest, int part) {
    return m.supplier_price[s][part] * m.demand[dest][part] +
           m.supplier_delivery_cost[s][dest] * static_cast<double>(m.orders[dest][part]);
}

Prepared prepare(const DesignModel& m) {
    Prepared prep;
    const int nr = static_cast<int>(m.if_ids.size());
    const int np = static_cast<int>(m.part_ids.size());
    const int ns = static_cast<int>(m.supplier_ids.size());

    for (int dest = 0; dest < nr; ++dest) {
        for (int part = 0; part < np; ++part) {
            if (!m.has_demand[dest][part]) continue;
            PairDemand pd;
            pd.dest = dest;
            pd.part = part;
            pd.units = m.demand[dest][part];
            pd.order_count = m.orders[dest][part];

            for (int r = 0; r < nr; ++r) {
                double lead = m.internal_lead(r, dest, part);
                double load = pd.units * m.print_time_hours[r][part];
                if (lead > m.max_lead_hours || !m.load_fits(load)) continue;
                pd.sources.push_back({true, r, internal_route_cost(m, r, dest, part), load, lead});
            }
            for (int s = 0; s < ns; ++s) {
                if (!m.supplier_sells(s, part) || !m.supplier_delivers(s, dest)) continue;
                double lead = m.external_lead(s, dest, part);
                if (lead > m.max_lead_hours) continue;
                pd.sources.push_back({false, s, external_route_cost(m, s, dest, part), 0.0, lead});
            }
            auto by_cost = [](const Source& a, const Source& b) {
                if (a.cost != b.cost) return a.cost < b.cost;
                if (a.internal != b.internal) return !a.internal; // external first on ties
                return a.idx < b.idx;
            };
            std::sort(pd.sources.begin(), pd.sources.end(), by_cost);
            pd.charged = pd.sources;
            for (Source& src : pd.charged)
                if (src.internal)
                    src.cost += m.printer_fixed_cost * src.load / m.half_capacity();
            std::sort(pd.charged.begin(), pd.charged.end(), by_cost);
            if (pd.sources.empty())
                prep.witnesses.emplace_back(m.if_ids[dest], m.part_ids[part]);
            prep.pairs.push_back(std::move(pd));
        }
    }
    if (!prep.witnesses.empty()) return prep;

    const int npairs = static_cast<int>(prep.pairs.size());
    prep.pairs_using.assign(nr, {});
    for (int i = 0; i < npairs; ++i)
        for (const Source& src : prep.pairs[i].sources)
            if (src.internal) prep.pairs_using[src.idx].push_back(i);

    // Fixed-cost amortization: a facility can serve at most m_r pairs, counted
    // against its printer ceiling with the smallest loads first, so spreading
    // (FC^R + FC^P) over m_r pairs stays a valid lower bound.
    prep.amortized_fixed.assign(nr, kInf);
    const double cap = static_cast<double>(m.max_printers) * m.half_capacity();
    for (int r = 0; r < nr; ++r) {
        std::vector<double> loads;
        for (int i : prep.pairs_using[r])
            for (const Source& src : prep.pairs[i].sources)
                if (src.internal && src.idx == r) loads.push_back(src.load);
        std::sort(loads.begin(), loads.end());
        double acc = 0.0;
        int fit = 0;
        for (double l : loads) {
            if (acc + l > cap * (1.0 + kCapSlack)) break;
            acc += l;
            ++fit;
        }
        if (fit > 0)
            prep.amortized_fixed[r] =
                (m.facility_fixed_cost + m.printer_fixed_cost) / static_cast<double>(fit);
    }

    prep.inner_order.resize(npairs);
    for (int i = 0; i < npairs; ++i) prep.inner_order[i] = i;
    std::vector<double> max_load(npairs, 0.0);
    for (int i = 0; i < npairs; ++i)
        for (const Source& src : prep.pairs[i].sources)
            if (src.internal) max_load[i] = std::max(max_load[i], src.load);
    std::stable_sort(prep.inner_order.begin(), prep.inner_order.end(),
                     [&](int a, int b) { return max_load[a] > max_load[b]; });
    return prep;
}

// A complete candidate design: assignment[i] indexes pairs[i].sources.
struct Candidate {
    bool valid = false;
    double cost = 0.0;
    int pc_count = 0;
    int printer_total = 0;
    std::vector<int> open_sorted; // facility indices, ascending
    std::vector<int> assignment;
};

// Canonical cost evaluation: route costs in pair order, then fixed costs in
// ascending facility order. Solver and oracle both report through this path.
Candidate eval_assignment(const DesignModel& m, const std::vector<PairDemand>& pairs,
                          const std::vector<int>& assignment) {
    const int nr = static_cast<int>(m.if_ids.size());
    std::vector<double> load(nr, 0.0);
    std::vector<char> used(nr, 0);

    Candidate cand;
    cand.assignment = assignment;
    double routes = 0.0;
    for (size_t i = 0; i < pairs.size(); ++i) {
        const Source& src = pairs[i].sources[assignment[i]];
        routes += src.cost;
        if (src.internal) {
            load[src.idx] += src.load;
            used[src.idx] = 1;
        }
    }
    double fixed = 0.0;
    for (int r = 0; r < nr; ++r) {
        if (!used[r]) continue;
        int printers = m.printers_for_load(load[r]);
        fixed += m.facility_fixed_cost + static_cast<double>(printers) * m.printer_fixed_cost;
        cand.open_sorted.push_back(r);
        cand.printer_total += printers;
        ++cand.pc_count;
    }
    cand.cost = routes + fixed;
    cand.valid = true;
    return cand;
}

// Tie order: cost, then fewer open centers, then fewer printers, then the
// lexicographically smallest open set.
bool candidate_improves(const Candidate& cand, const Candidate& inc) {
    if (!cand.valid) return false;
    if (!inc.valid) return true;
    double tol = kRelTol * std::max({1.0, std::fabs(cand.cost), std::fabs(inc.cost)});
    if (cand.cost < inc.cost - tol) return true;
    if (cand.cost > inc.cost + tol) return false;
    if (cand.pc_count != inc.pc_count) return cand.pc_count < inc.pc_count;
    if (cand.printer_total != inc.printer_total) return cand.printer_total < inc.printer_total;
    return cand.open_sorted < inc.open_sorted;
}

enum : uint8_t { kUndecided = 0, kOpen = 1, kClosed = 2 };

// Greedy completion: serve pairs (largest print load first) from the cheapest
// source not ruled out by `state`, respecting printer ceilings. Used only to
// seed and tighten the incumbent.
std::optional<Candidate> greedy_complete(const DesignModel& m, const Prepared& prep,
                                         const std::vector<uint8_t>& state) {
    const int nr = static_cast<int>(m.if_ids.size());
    const double cap = static_cast<double>(m.max_printers) * m.half_capacity();
    std::vector<double> load(nr, 0.0);
    std::vector<int> assignment(prep.pairs.size(), -1);

    for (int i : prep.inner_order) {
        const PairDemand& pd = prep.pairs[i];
        bool placed = false;
        for (size_t k = 0; k < pd.sources.size(); ++k) {
            const Source& src = pd.sources[k];
            if (src.internal) {
                if (state[src.idx] == kClosed) continue;
                if (load[src.idx] + src.load > cap * (1.0 + kCapSlack)) continue;
                load[src.idx] += src.load;
            }
            assignment[i] = static_cast<int>(k);
            placed = true;
            break;
        }
        if (!placed) return std::nullopt;
    }
    return eval_assignment(m, prep.pairs, assignment);
}

struct OuterNode {
    std::vector<uint8_t> state;
    std::vector<double> va, vb; // warm duals for the two bound variants
    double bound = 0.0;
    int open_count = 0;
    int branch = -1; // facility to branch on; -1 at leaves
    uint64_t seq = 0;
};

struct OuterNodeOrder {
    bool operator()(const OuterNode& a, const OuterNode& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.seq > b.seq;
    }
};

// Dual ascent over one relaxation of the partial state: every pair buys its
// cheapest available arc, undecided facilities absorb up to `facility_slack`
// of dual pressure, decided-open facilities and suppliers absorb none (their
// charge sits outside the ascent). The dual value sum(v_i) under
// sum_i (v_i - c_ij)+ <= slack_j is a valid bound at any stopping point, so
// duals warm-started from the parent node (re-clamped against zero-charge
// arcs) stay usable after a few passes.
// Returns -inf when some pair has no available source. `score` accumulates
// the dual pressure per undecided facility for branching.
double dual_ascent(const Prepared& prep, const std::vector<uint8_t>& state, bool charged_arcs,
                   double facility_slack, int nr, std::vector<double>& score,
                   std::vector<double>& v, bool warm) {
    const size_t npairs = prep.pairs.size();
    static thread_local std::vector<double> slack;
    slack.assign(nr, 0.0);
    bool any_undecided = false;
    for (int r = 0; r < nr; ++r) {
        if (state[r] == kUndecided) {
            slack[r] = facility_slack;
            any_undecided = true;
        }
    }
    auto sources_of = [&](size_t i) -> const std::vector<Source>& {
        return charged_arcs ? prep.pairs[i].charged : prep.pairs[i].sources;
    };

    if (!warm) v.assign(npairs, 0.0);
    for (size_t i = 0; i < npairs; ++i) {
        double cheapest = kInf;
        double pin = kInf; // tightest zero-charge arc
        for (const Source& src : sources_of(i)) {
            if (src.internal && state[src.idx] == kClosed) continue;
            if (cheapest == kInf) {
                cheapest = src.cost;
                if (!warm) break; // cold start only needs the cheapest arc
            }
            if (!src.internal || state[src.idx] == kOpen) {
                pin = src.cost;
                break;
            }
        }
        if (cheapest == kInf) return -kInf;
        if (!warm)
            v[i] = cheapest;
        else
            v[i] = std::max(cheapest, std::min(v[i], pin));
    }
    if (warm) {
        // rebuild slacks for the clamped duals
        for (size_t i = 0; i < npairs; ++i) {
            for (const Source& src : sources_of(i)) {
                if (!src.internal || state[src.idx] != kUndecided) continue;
                if (src.cost < v[i]) slack[src.idx] -= v[i] - src.cost;
            }
        }
        for (int r = 0; r < nr; ++r)
            if (state[r] == kUndecided && slack[r] < 0.0) slack[r] = 0.0;
    }

    if (any_undecided && facility_slack > 0.0) {
        const int max_passes = warm ? 12 : 60;
        for (int pass = 0; pass < max_passes; ++pass) {
            bool changed = false;
            for (size_t i = 0; i < npairs; ++i) {
                const auto& sources = sources_of(i);
                double cap = kInf;
                double next_bp = kInf;
                for (const Source& src : sources) {
                    if (src.internal && state[src.idx] == kClosed) continue;
                    if (src.cost > v[i] + 1e-12) {
                        next_bp = src.cost;
                        break;
                    }
                    if (src.internal && state[src.idx] == kUndecided) {
                        cap = std::min(cap, slack[src.idx]);
                    } else {
                        cap = 0.0; // zero-charge arc reached, v pinned
                        break;
                    }
                }
                double delta = std::min(next_bp - v[i], cap);
                if (delta > 1e-12 && delta < kInf) {
                    for (const Source& src : sources) {
                        if (src.internal && state[src.idx] == kClosed) continue;
                        if (src.cost > v[i] + 1e-12) break;
                        if (src.internal && state[src.idx] == kUndecided)
                            slack[src.idx] -= delta;
                    }
                    v[i] += delta;
                    changed = true;
                }
            }
            if (!changed) break;
        }
    }

    double total = 0.0;
    for (size_t i = 0; i < npairs; ++i) total += v[i];
    for (size_t i = 0; i < npairs; ++i) {
        for (const Source& src : sources_of(i)) {
            if (src.cost >= v[i]) break;
            if (src.internal && state[src.idx] == kUndecided)
                score[src.idx] += v[i] - src.cost;
        }
    }
    return total;
}

// Lower bound for a partial open/closed state: the better of two dual-ascent
// relaxations. Variant A charges each used facility its building plus first
// printer; variant B charges the building only but prices every internal arc
// with FC^P * load / half-capacity, which step costs always dominate. Both
// ignore the printer ceiling, which only lowers the bound.
// Returns false when some pair has no available source.
bool outer_bound(const DesignModel& m, const Prepared& prep, const std::vector<uint8_t>& state,
                 int open_count, std::vector<double>& va, std::vector<double>& vb, bool warm,
                 double prune_above, double* bound_out, int* branch_out) {
    const int nr = static_cast<int>(m.if_ids.size());
    const double fix_full = m.facility_fixed_cost + m.printer_fixed_cost;

    static thread_local std::vector<double> score_a, score_b;
    score_a.assign(nr, 0.0);
    double bound_a = dual_ascent(prep, state, false, fix_full, nr, score_a, va, warm);
    if (bound_a == -kInf) return false;
    bound_a += static_cast<double>(open_count) * fix_full;

    double bound = bound_a;
    const std::vector<double>* score = &score_a;
    if (bound > prune_above) {
        // already dead on variant A alone; the caller discards this node
        *bound_out = bound;
        *branch_out = -1;
        return true;
    }
    if (m.printer_fixed_cost > 0.0) {
        score_b.assign(nr, 0.0);
        double bound_b =
            dual_ascent(prep, state, true, m.facility_fixed_cost, nr, score_b, vb, warm);
        if (bound_b == -kInf) return false;
        bound_b += static_cast<double>(open_count) * m.facility_fixed_cost;
        if (bound_b > bound) {
            bound = bound_b;
            score = &score_b;
        }
    }
    *bound_out = bound;

    int branch = -1;
    double best_score = -1.0;
    for (int r = 0; r < nr; ++r) {
        if (state[r] != kUndecided) continue;
        if ((*score)[r] > best_score) {
            best_score = (*score)[r];
            branch = r;
        }
    }
    *branch_out = branch;
    return true;
}

// Exact assignment for a fully decided open set, where every open facility
// must take at least one route (designs that leave a facility idle belong to
// the leaf that closes it). Printer vectors are enumerated in ascending
// fixed-cost order; for each vector the single-source assignment runs under
// hard capacities, so the fixed charge is constant and the remaining bound is
// pure route cost. Each assignment is recorded only at its minimal printer
// vector, which keeps the reported printer counts minimal.
class LeafSolver {
public:
    LeafSolver(const DesignModel& m, const Prepared& prep, const std::vector<uint8_t>& state,
               Candidate& incumbent)
        : m_(m), prep_(prep), incumbent_(incumbent) {
        const int nr = static_cast<int>(m.if_ids.size());
        for (int r = 0; r < nr; ++r)
            if (state[r] == kOpen) open_.push_back(r);
        slot_of_.assign(nr, -1);
        for (size_t s = 0; s < open_.size(); ++s) slot_of_[open_[s]] = static_cast<int>(s);

        allowed_.resize(prep.pairs.size());
        std::vector<double> reachable_load(open_.size(), 0.0);
        std::vector<int> reachable_arcs(open_.size(), 0);
        std::vector<int> internal_options(prep.pairs.size(), 0);
        std::vector<char> has_external(prep.pairs.size(), 0);
        std::vector<double> heaviest(prep.pairs.size(), 0.0);
        for (size_t i = 0; i < prep.pairs.size(); ++i) {
            const PairDemand& pd = prep.pairs[i];
            bool any = false;
            for (size_t k = 0; k < pd.sources.size(); ++k) {
                const Source& src = pd.sources[k];
                if (src.internal) {
                    if (state[src.idx] != kOpen) continue;
                    reachable_load[slot_of_[src.idx]] += src.load;
                    reachable_arcs[slot_of_[src.idx]] += 1;
                    internal_options[i] += 1;
                    heaviest[i] = std::max(heaviest[i], src.load);
                } else {
                    has_external[i] = 1;
                }
                allowed_[i].push_back(static_cast<int>(k));
                any = true;
            }
            feasible_ = feasible_ && any;
        }

        // Most constrained first: captive pairs before ones with an external
        // escape, fewer facility options first, heavier loads first. Failures
        // then surface near the root instead of deep in the tree.
        order_.resize(prep.pairs.size());
        for (size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
        std::stable_sort(order_.begin(), order_.end(), [&](int a, int b) {
            if (has_external[a] != has_external[b]) return has_external[a] < has_external[b];
            if (internal_options[a] != internal_options[b])
                return internal_options[a] < internal_options[b];
            return heaviest[a] > heaviest[b];
        });

        suffix_min_.assign(order_.size() + 1, 0.0);
        for (int i = static_cast<int>(order_.size()) - 1; i >= 0; --i) {
            double best = kInf;
            for (int k : allowed_[order_[i]])
                best = std::min(best, prep.pairs[order_[i]].sources[k].cost);
            suffix_min_[i] = suffix_min_[i + 1] + (best < kInf ? best : 0.0);
        }

        // Per-facility printer ceiling actually worth enumerating; a facility
        // no pair can reach makes the all-used leaf empty.
        printer_ub_.resize(open_.size());
        for (size_t s = 0; s < open_.size(); ++s) {
            printer_ub_[s] =
                std::min(m.max_printers, m.printers_for_load(reachable_load[s]));
            feasible_ = feasible_ && reachable_arcs[s] > 0;
        }

        assignment_.assign(prep.pairs.size(), -1);
        remaining_cap_.assign(open_.size(), 0.0);
        used_.assign(open_.size(), 0);
        vector_.assign(open_.size(), 1);

        // pool_[s][d]: total load pairs order_[d..] could still place on slot
        // s. When a slot's remaining capacity covers its whole pool, routing
        // the cheapest pair there can never conflict with later pairs.
        pool_.assign(open_.size(), std::vector<double>(order_.size() + 1, 0.0));
        for (int d = static_cast<int>(order_.size()) - 1; d >= 0; --d) {
            const PairDemand& pd = prep.pairs[order_[d]];
            for (size_t s = 0; s < open_.size(); ++s) pool_[s][d] = pool_[s][d + 1];
            for (int k : allowed_[order_[d]]) {
                const Source& src = pd.sources[k];
                if (src.internal) pool_[slot_of_[src.idx]][d] += src.load;
            }
        }

        // Captive load per facility subset: pairs with no external escape must
        // place at least their lightest load inside the facilities they can
        // reach, a Hall-type capacity requirement on every subset.
        if (open_.size() <= 12 && !open_.empty()) {
            captive_.assign(size_t{1} << open_.size(), 0.0);
            for (size_t d = 0; d < order_.size(); ++d) {
                const PairDemand& pd = prep.pairs[order_[d]];
                uint32_t mask = 0;
                double min_load = kInf;
                bool has_external = false;
                for (int k : allowed_[order_[d]]) {
                    const Source& src = pd.sources[k];
                    if (!src.internal) {
                        has_external = true;
                        break;
                    }
                    mask |= uint32_t{1} << slot_of_[src.idx];
                    min_load = std::min(min_load, src.load);
                }
                if (has_external || mask == 0 || min_load <= 0.0) continue;
                captive_[mask] += min_load;
            }
            // superset accumulation: captive(Q) = sum over masks subset of Q
            for (size_t s = 0; s < open_.size(); ++s)
                for (uint32_t q = 0; q < captive_.size(); ++q)
                    if (q & (uint32_t{1} << s)) captive_[q] += captive_[q ^ (uint32_t{1} << s)];
        }

        // Suffix of captive load (pairs without an external escape): a cheap
        // conservation test against the total remaining capacity.
        captive_suffix_.assign(order_.size() + 1, 0.0);
        for (int d = static_cast<int>(order_.size()) - 1; d >= 0; --d) {
            const PairDemand& pd = prep.pairs[order_[d]];
            double min_load = kInf;
            bool has_external = false;
            for (int k : allowed_[order_[d]]) {
                const Source& src = pd.sources[k];
                if (!src.internal) {
                    has_external = true;
                    break;
                }
                min_load = std::min(min_load, src.load);
            }
            captive_suffix_[d] = captive_suffix_[d + 1] +
                                 (has_external || min_load == kInf ? 0.0 : min_load);
        }
    }

    void run() {
        if (!feasible_) return;
        stats_ = std::getenv("AMSC_SOLVER_STATS") != nullptr;
        if (stats_)
            std::fprintf(stderr, "[leaf] start open=%zu pairs=%zu inc=%.2f lb0=%.2f\n",
                         open_.size(), order_.size(),
                         incumbent_.valid ? incumbent_.cost : -1.0, suffix_min_[0]);
        const double fix_r = m_.facility_fixed_cost;
        const double fix_p = m_.printer_fixed_cost;
        const int base = static_cast<int>(open_.size());
        int ub_total = 0;
        for (int ub : printer_ub_) ub_total += ub;

        // Captive subsets force printer minima: a subset holding L hours of
        // captive load needs ceil(L / half) printers, everyone else one.
        int t_start = base;
        for (uint32_t q = 1; q < captive_.size(); ++q) {
            if (captive_[q] <= 0.0) continue;
            int need = static_cast<int>(
                std::ceil(captive_[q] / m_.half_capacity() - kCapSlack));
            int outside = base - __builtin_popcount(q);
            t_start = std::max(t_start, need + outside);
        }

        for (int total = t_start; total <= ub_total; ++total) {
            double vec_lb = static_cast<double>(base) * fix_r +
                            static_cast<double>(total) * fix_p + suffix_min_[0];
            if (incumbent_.valid) {
                double tol =
                    kRelTol * std::max({1.0, std::fabs(vec_lb), std::fabs(incumbent_.cost)});
                if (vec_lb > incumbent_.cost + tol) break;
                if (vec_lb >= incumbent_.cost - tol &&
                    base > incumbent_.pc_count)
                    break;
            }
            fixed_const_ = static_cast<double>(base) * fix_r +
                           static_cast<double>(total) * fix_p;
            enumerate_vectors(0, total);
        }
        if (stats_)
            std::fprintf(stderr, "[leaf] done nodes=%llu vectors=%llu\n",
                         (unsigned long long)nodes_, (unsigned long long)vectors_);
    }

private:
    // Compositions of `remaining` printers over slots s.., lexicographically.
    void enumerate_vectors(size_t slot, int remaining) {
        if (slot == open_.size()) {
            if (remaining == 0) solve_vector();
            return;
        }
        int slots_left = static_cast<int>(open_.size() - slot - 1);
        for (int n = 1; n <= printer_ub_[slot]; ++n) {
            int rest = remaining - n;
            if (rest < slots_left) break;           // every later slot needs >= 1
            int rest_max = 0;
            for (size_t t = slot + 1; t < open_.size(); ++t) rest_max += printer_ub_[t];
            if (rest > rest_max) continue;
            vector_[slot] = n;
            enumerate_vectors(slot + 1, rest);
        }
        vector_[slot] = 1;
    }

    void solve_vector() {
        ++vectors_;
        for (uint32_t q = 1; q < captive_.size(); ++q) {
            if (captive_[q] <= 0.0) continue;
            int have = 0;
            for (size_t s = 0; s < open_.size(); ++s)
                if (q & (uint32_t{1} << s)) have += vector_[s];
            if (static_cast<double>(have) * m_.half_capacity() * (1.0 + kCapSlack) < captive_[q])
                return; // subset cannot hold its captive load
        }
        vec_total_ = 0;
        for (size_t s = 0; s < open_.size(); ++s) {
            remaining_cap_[s] = static_cast<double>(vector_[s]) * m_.half_capacity();
            used_[s] = 0;
            vec_total_ += vector_[s];
        }
        double greedy_routes = vector_greedy();
        fit_capacity_prices(greedy_routes);
        if (incumbent_.valid) {
            double root_lb = fixed_const_ + priced_suffix_[0] - priced_caps();
            double tol =
                kRelTol * std::max({1.0, std::fabs(root_lb), std::fabs(incumbent_.cost)});
            if (stats_)
                std::fprintf(stderr,
                             "[leaf] vector T=%d root_lb=%.2f (plain %.2f) inc=%.2f\n",
                             [&] { int t = 0; for (int n : vector_) t += n; return t; }(),
                             root_lb, fixed_const_ + suffix_min_[0],
                             incumbent_.cost);
            if (root_lb > incumbent_.cost + tol) return;
        }
        dfs(0, 0.0, static_cast<int>(open_.size()));
    }

    // Cheapest-fit greedy under this vector's capacities; updates the global
    // incumbent when it completes and returns its route total (+inf when it
    // cannot complete).
    double vector_greedy() {
        static thread_local std::vector<double> caps;
        caps.assign(remaining_cap_.begin(), remaining_cap_.end());
        static thread_local std::vector<int> assignment;
        assignment.assign(prep_.pairs.size(), -1);
        double routes = 0.0;
        for (int pair_idx : order_) {
            const PairDemand& pd = prep_.pairs[pair_idx];
            bool placed = false;
            for (int k : allowed_[pair_idx]) {
                const Source& src = pd.sources[k];
                if (src.internal) {
                    int slot = slot_of_[src.idx];
                    if (src.load > caps[slot] * (1.0 + kCapSlack)) continue;
                    caps[slot] -= src.load;
                }
                assignment[pair_idx] = k;
                routes += src.cost;
                placed = true;
                break;
            }
            if (!placed) return kInf;
        }
        Candidate cand = eval_assignment(m_, prep_.pairs, assignment);
        if (candidate_improves(cand, incumbent_)) incumbent_ = cand;
        return routes;
    }

    double priced_caps() const {
        double total = 0.0;
        for (size_t s = 0; s < open_.size(); ++s) total += lambda_[s] * remaining_cap_[s];
        return total;
    }

    // Subgradient fit of per-facility capacity prices for this printer
    // vector. Any nonnegative price vector yields a valid bound
    //   routes + sum_remaining min(c + lambda*load) - sum lambda*remaining_cap,
    // so the loop just hunts for prices that make it tight.
    void fit_capacity_prices(double greedy_routes) {
        const size_t S = open_.size();
        lambda_.assign(S, 0.0);
        if (S > 0) {
            std::vector<double> cap(S), best_lambda(S, 0.0), grad(S), loads(S);
            for (size_t s = 0; s < S; ++s)
                cap[s] = static_cast<double>(vector_[s]) * m_.half_capacity();
            double ub = greedy_routes < kInf ? greedy_routes
                        : incumbent_.valid  ? incumbent_.cost - fixed_const_
                                            : suffix_min_[0] * 1.2 + 1.0;
            double best_value = -kInf;
            double theta = 1.0;
            int stall = 0;
            for (int it = 0; it < 80; ++it) {
                double sum_min = 0.0;
                std::fill(loads.begin(), loads.end(), 0.0);
                for (size_t d = 0; d < order_.size(); ++d) {
                    const PairDemand& pd = prep_.pairs[order_[d]];
                    double best = kInf;
                    int best_slot = -1;
                    double best_load = 0.0;
                    for (int k : allowed_[order_[d]]) {
                        const Source& src = pd.sources[k];
                        double val = src.cost;
                        if (src.internal) val += lambda_[slot_of_[src.idx]] * src.load;
                        if (val < best) {
                            best = val;
                            best_slot = src.internal ? slot_of_[src.idx] : -1;
                            best_load = src.internal ? src.load : 0.0;
                        }
                    }
                    sum_min += best;
                    if (best_slot >= 0) loads[best_slot] += best_load;
                }
                double value = sum_min;
                for (size_t s = 0; s < S; ++s) value -= lambda_[s] * cap[s];
                if (value > best_value + 1e-9) {
                    best_value = value;
                    best_lambda = lambda_;
                    stall = 0;
                } else if (++stall >= 8) {
                    theta *= 0.5;
                    stall = 0;
                    if (theta < 1e-4) break;
                }
                double norm2 = 0.0;
                for (size_t s = 0; s < S; ++s) {
                    grad[s] = loads[s] - cap[s];
                    norm2 += grad[s] * grad[s];
                }
                if (norm2 < 1e-18) break;
                double gap = ub - value;
                if (gap <= 0.0) gap = std::max(1.0, std::fabs(value) * 1e-3);
                double step = theta * gap / norm2;
                for (size_t s = 0; s < S; ++s)
                    lambda_[s] = std::max(0.0, lambda_[s] + step * grad[s]);
            }
            lambda_ = best_lambda;
        }

        priced_suffix_.assign(order_.size() + 1, 0.0);
        priced_allowed_.assign(prep_.pairs.size(), {});
        for (int d = static_cast<int>(order_.size()) - 1; d >= 0; --d) {
            const int pair_idx = order_[d];
            const PairDemand& pd = prep_.pairs[pair_idx];
            auto& list = priced_allowed_[pair_idx];
            list.assign(allowed_[pair_idx].begin(), allowed_[pair_idx].end());
            auto priced = [&](int k) {
                const Source& src = pd.sources[k];
                return src.internal ? src.cost + lambda_[slot_of_[src.idx]] * src.load
                                    : src.cost;
            };
            std::stable_sort(list.begin(), list.end(),
                             [&](int a, int b) { return priced(a) < priced(b); });
            priced_suffix_[d] =
                priced_suffix_[d + 1] + (list.empty() ? 0.0 : priced(list.front()));
        }
    }

    // Cheapest completion of pairs order_[depth..]: per-pair minima plus, for
    // every facility whose minimum-assignment load overflows its remaining
    // capacity, a fractional-knapsack bound on the cost of shedding the
    // overflow to each pair's next-best source. +inf when no completion fits.
    double remaining_min(size_t depth) const {
        struct Shed {
            double delta, load;
        };
        static thread_local std::vector<double> min_load, fixed_load;
        static thread_local std::vector<std::vector<Shed>> pool;
        {
            double caps = 0.0;
            for (double c : remaining_cap_) caps += c;
            if (captive_suffix_[depth] > caps * (1.0 + kCapSlack)) return kInf;
        }

        min_load.assign(open_.size(), 0.0);
        fixed_load.assign(open_.size(), 0.0);
        pool.resize(open_.size());
        for (auto& p : pool) p.clear();

        double total = 0.0;
        for (size_t d = depth; d < order_.size(); ++d) {
            const PairDemand& pd = prep_.pairs[order_[d]];
            double best = kInf, second = kInf;
            int best_slot = -1;
            double best_load = 0.0;
            for (int k : allowed_[order_[d]]) {
                const Source& src = pd.sources[k];
                if (best == kInf) {
                    best = src.cost;
                    if (src.internal) {
                        best_slot = slot_of_[src.idx];
                        best_load = src.load;
                    }
                } else {
                    second = src.cost;
                    break; // cost-ascending
                }
            }
            if (best == kInf) return kInf;
            total += best;
            if (best_slot >= 0 && best_load > 0.0) {
                min_load[best_slot] += best_load;
                if (second < kInf)
                    pool[best_slot].push_back({second - best, best_load});
                else
                    fixed_load[best_slot] += best_load;
            }
        }

        for (size_t s = 0; s < open_.size(); ++s) {
            double cap = remaining_cap_[s] * (1.0 + kCapSlack);
            double need = min_load[s] - cap;
            if (need <= 0.0) continue;
            if (fixed_load[s] > cap) return kInf; // unshedable load alone overflows
            auto& entries = pool[s];
            std::sort(entries.begin(), entries.end(), [](const Shed& a, const Shed& b) {
                return a.delta * b.load < b.delta * a.load; // delta/load ascending
            });
            for (const Shed& e : entries) {
                if (need <= 0.0) break;
                double take = std::min(e.load, need);
                total += e.delta * (take / e.load);
                need -= take;
            }
            if (need > 0.0) return kInf;
        }
        return total;
    }

    void dfs(size_t depth, double routes, int unused) {
        ++nodes_;
        if (stats_ && nodes_ % 2000000 == 0)
            std::fprintf(stderr,
                         "[leaf] nodes=%llu depth=%zu vectors=%llu rejected=%llu dead=%llu done=%llu\n",
                         (unsigned long long)nodes_, depth, (unsigned long long)vectors_,
                         (unsigned long long)rejected_, (unsigned long long)dead_,
                         (unsigned long long)completions_);
        if (unused > static_cast<int>(order_.size() - depth)) return; // cannot cover
        if (incumbent_.valid) {
            double lb = fixed_const_ + routes +
                        std::max(suffix_min_[depth], priced_suffix_[depth] - priced_caps());
            double tol = kRelTol * std::max({1.0, std::fabs(lb), std::fabs(incumbent_.cost)});
            if (lb <= incumbent_.cost + tol) {
                double tight = remaining_min(depth);
                if (tight == kInf) { ++dead_; return; }
                lb = fixed_const_ + routes + std::max(tight, priced_suffix_[depth] - priced_caps());
                tol = kRelTol * std::max({1.0, std::fabs(lb), std::fabs(incumbent_.cost)});
            }
            if (lb > incumbent_.cost + tol) return;
            if (lb >= incumbent_.cost - tol) {
                // A tie cannot beat an incumbent that already uses this very
                // open set with no more printers than any candidate here.
                if (static_cast<int>(open_.size()) > incumbent_.pc_count) return;
                if (vec_total_ >= incumbent_.printer_total &&
                    incumbent_.open_sorted == open_)
                    return;
            }
        }
        if (depth == order_.size()) {
            ++completions_;
            if (unused > 0) return;
            // Record only at the minimal vector for this assignment.
            for (size_t s = 0; s < open_.size(); ++s) {
                double load = static_cast<double>(vector_[s]) * m_.half_capacity() -
                              remaining_cap_[s];
                if (m_.printers_for_load(load) != vector_[s]) {
                    if (stats_) ++rejected_;
                    return;
                }
            }
            Candidate cand = eval_assignment(m_, prep_.pairs, assignment_);
            if (candidate_improves(cand, incumbent_)) {
                incumbent_ = cand;
                if (stats_)
                    std::fprintf(stderr, "[leaf] improve inc=%.2f nodes=%llu rejected=%llu\n",
                                 incumbent_.cost, (unsigned long long)nodes_,
                                 (unsigned long long)rejected_);
            }
            return;
        }
        const int pair_idx = order_[depth];
        const PairDemand& pd = prep_.pairs[pair_idx];

        // Dominance once coverage is settled: the cheapest source is final if
        // it cannot interact with any later pair (external, or a facility
        // whose remaining capacity absorbs its entire candidate pool).
        bool forced = false;
        if (unused == 0 && !allowed_[pair_idx].empty()) {
            const Source& best = pd.sources[allowed_[pair_idx][0]];
            if (!best.internal) {
                forced = true;
            } else {
                int s = slot_of_[best.idx];
                forced = pool_[s][depth] <= remaining_cap_[s] * (1.0 + kCapSlack);
            }
        }

        for (int k : forced ? allowed_[pair_idx] : priced_allowed_[pair_idx]) {
            const Source& src = pd.sources[k];
            if (!src.internal) {
                assignment_[pair_idx] = k;
                dfs(depth + 1, routes + src.cost, unused);
                assignment_[pair_idx] = -1;
                if (forced) break;
                continue;
            }
            int s = slot_of_[src.idx];
            if (src.load > remaining_cap_[s] * (1.0 + kCapSlack)) continue;
            remaining_cap_[s] -= src.load;
            bool first_use = used_[s] == 0;
            used_[s] = 1;
            assignment_[pair_idx] = k;
            dfs(depth + 1, routes + src.cost, unused - (first_use ? 1 : 0));
            assignment_[pair_idx] = -1;
            if (first_use) used_[s] = 0;
            remaining_cap_[s] += src.load;
            if (forced) break;
        }
    }

    const DesignModel& m_;
    const Prepared& prep_;
    Candidate& incumbent_;
    std::vector<int> open_;      // facility indices, ascending
    std::vector<int> slot_of_;   // facility index -> slot in open_
    std::vector<int> order_;
    std::vector<std::vector<int>> allowed_;
    std::vector<double> suffix_min_;
    std::vector<int> printer_ub_;
    std::vector<int> vector_;
    std::vector<double> remaining_cap_;
    std::vector<char> used_;
    std::vector<int> assignment_;
    std::vector<std::vector<double>> pool_;
    std::vector<double> captive_;        // subset mask -> captive load
    std::vector<double> captive_suffix_;
    std::vector<double> lambda_;         // capacity price per slot
    std::vector<double> priced_suffix_;
    std::vector<std::vector<int>> priced_allowed_;
    int vec_total_ = 0;
    double fixed_const_ = 0.0;
    bool feasible_ = true;
    bool stats_ = false;
    uint64_t nodes_ = 0;
    uint64_t vectors_ = 0;
    uint64_t rejected_ = 0;
    uint64_t dead_ = 0;
    uint64_t completions_ = 0;
};

DesignSolution assemble_solution(const DesignModel& m, const std::vector<PairDemand>& pairs,
                                 const Candidate& cand) {
    DesignSolution out;
    out.status = SolveStatus::Optimal;
    const int nr = static_cast<int>(m.if_ids.size());
    std::vector<double> load(nr, 0.0);

    for (size_t i = 0; i < pairs.size(); ++i) {
        const PairDemand& pd = pairs[i];
        const Source& src = pd.sources[cand.assignment[i]];
        out.worst_lead_hours = std::max(out.worst_lead_hours, src.lead);
        if (src.internal) {
            load[src.idx] += src.load;
            out.internal_routes.push_back({m.if_ids[src.idx], m.if_ids[pd.dest],
                                           m.part_ids[pd.part], pd.units, src.lead, src.cost});
        } else {
            out.external_routes.push_back({m.supplier_ids[src.idx], m.if_ids[pd.dest],
                                           m.part_ids[pd.part], pd.units, src.lead, src.cost});
        }
    }
    for (int r : cand.open_sorted) {
        out.open_pcs.push_back(m.if_ids[r]);
        out.printers[m.if_ids[r]] = m.printers_for_load(load[r]);
    }
    out.total_cost = cand.cost;
    return out;
}

} // namespace

DesignSolution solve_design(const DesignModel& m) {
    auto t0 = std::chrono::steady_clock::now();
    m.check();
    Prepared prep = prepare(m);

    DesignSolution out;
    auto finish = [&](DesignSolution sol) {
        sol.solve_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return sol;
    };

    if (!prep.witnesses.empty()) {
        out.status = SolveStatus::Infeasible;
        out.infeasible_pairs = prep.witnesses;
        return finish(out);
    }
    if (prep.pairs.empty()) return finish(out); // nothing demanded, empty design

    const int nr = static_cast<int>(m.if_ids.size());
    Candidate incumbent;

    std::vector<uint8_t> root_state(nr, kUndecided);
    // Facilities that cannot serve any pair never open.
    for (int r = 0; r < nr; ++r)
        if (prep.pairs_using[r].empty()) root_state[r] = kClosed;

    if (auto cand = greedy_complete(m, prep, root_state); cand)
        incumbent = *cand;

    std::priority_queue<OuterNode, std::vector<OuterNode>, OuterNodeOrder> queue;
    uint64_t seq = 0;

    {
        OuterNode root;
        root.state = std::move(root_state);
        if (outer_bound(m, prep, root.state, 0, root.va, root.vb, false, kInf, &root.bound,
                        &root.branch)) {
            root.seq = seq++;
            queue.push(std::move(root));
        }
    }

    auto push_child = [&](OuterNode&& child) {
        double prune_above = incumbent.valid ? incumbent.cost + kRelTol * std::max(1.0, std::fabs(
                                                                      incumbent.cost))
                                             : kInf;
        if (!outer_bound(m, prep, child.state, child.open_count, child.va, child.vb, true,
                         prune_above, &child.bound, &child.branch))
            return;
        if (incumbent.valid) {
            double tol =
                kRelTol * std::max({1.0, std::fabs(child.bound), std::fabs(incumbent.cost)});
            if (child.bound > incumbent.cost + tol) return;
            if (child.bound >= incumbent.cost - tol && child.open_count > incumbent.pc_count)
                return;
        }
        child.seq = seq++;
        queue.push(std::move(child));
    };

    const bool stats = std::getenv("AMSC_SOLVER_STATS") != nullptr;
    uint64_t pops = 0, leaves = 0, inner_runs = 0;

    while (!queue.empty()) {
        OuterNode node = queue.top();
        queue.pop();
        ++pops;
        if (stats && pops % 20000 == 0)
            std::fprintf(stderr, "[solver] pops=%llu queue=%zu bound=%.2f inc=%.2f leaves=%llu inner=%llu\n",
                         (unsigned long long)pops, queue.size(), node.bound,
                         incumbent.valid ? incumbent.cost : -1.0, (unsigned long long)leaves,
                         (unsigned long long)inner_runs);

        if (incumbent.valid) {
            double tol =
                kRelTol * std::max({1.0, std::fabs(node.bound), std::fabs(incumbent.cost)});
            if (node.bound > incumbent.cost + tol) continue;
            if (node.bound >= incumbent.cost - tol && node.open_count > incumbent.pc_count)
                continue;
        }

        std::optional<Candidate> completion = greedy_complete(m, prep, node.state);
        if (completion && candidate_improves(*completion, incumbent)) incumbent = *completion;

        if (node.branch < 0) { // fully decided
            ++leaves;
            // The leaf bound is exact on routes and first printers; a greedy
            // completion meeting it cannot be improved within this leaf.
            if (incumbent.valid) {
                double tiny = 1e-12 * std::max(1.0, std::fabs(incumbent.cost));
                if (incumbent.cost <= node.bound + tiny) continue;
            }
            ++inner_runs;
            LeafSolver leaf(m, prep, node.state, incumbent);
            leaf.run();
            continue;
        }

        int r = node.branch;
        // Prefer branching on the undecided facility the greedy completion
        // leans on hardest; the open child then follows a live candidate and
        // the closed child forces a real reroute.
        if (completion) {
            static thread_local std::vector<double> used_load;
            used_load.assign(m.if_ids.size(), 0.0);
            for (size_t i = 0; i < prep.pairs.size(); ++i) {
                const Source& src = prep.pairs[i].sources[completion->assignment[i]];
                if (src.internal && node.state[src.idx] == kUndecided)
                    used_load[src.idx] += std::max(src.load, 1.0);
            }
            double best = 0.0;
            int pick = -1;
            for (size_t j = 0; j < used_load.size(); ++j) {
                if (used_load[j] > best) {
                    best = used_load[j];
                    pick = static_cast<int>(j);
                }
            }
            if (pick >= 0) r = pick;
        }

        OuterNode open_child;
        open_child.state = node.state;
        open_child.va = node.va;
        open_child.vb = node.vb;
        open_child.state[r] = kOpen;
        open_child.open_count = node.open_count + 1;
        push_child(std::move(open_child));

        OuterNode closed_child;
        closed_child.state = std::move(node.state);
        closed_child.va = std::move(node.va);
        closed_child.vb = std::move(node.vb);
        closed_child.state[r] = kClosed;
        closed_child.open_count = node.open_count;
        // A pair left with a single available source forces that facility.
        bool dead = false;
        for (int i : prep.pairs_using[r]) {
            const PairDemand& pd = prep.pairs[i];
            int available = 0;
            const Source* last = nullptr;
            for (const Source& src : pd.sources) {
                if (src.internal && closed_child.state[src.idx] == kClosed) continue;
                ++available;
                last = &src;
                if (available > 1) break;
            }
            if (available == 0) {
                dead = true;
                break;
            }
            if (available == 1 && last->internal &&
                closed_child.state[last->idx] == kUndecided) {
                closed_child.state[last->idx] = kOpen;
                ++closed_child.open_count;
            }
        }
        if (!dead) push_child(std::move(closed_child));
    }

    if (!incumbent.valid) {
        // Every pair is individually coverable but no joint assignment fits
        // the printer ceilings; the exhausted search proves infeasibility.
        // No single pair witnesses this, so the list stays empty.
        out.status = SolveStatus::Infeasible;
        return finish(out);
    }

    return finish(assemble_solution(m, prep.pairs, incumbent));
}

// ---------------------------------------------------------------------------
// Exhaustive reference solver
// ---------------------------------------------------------------------------

namespace {

// Reference enumeration state, deliberately plain: subsets in mask order,
// pairs in (facility, part) order, sources internal-then-external.
struct OraclePair {
    int dest = -1, part = -1;
    std::vector<Source> sources; // all feasible, model order
};

void oracle_dfs(const DesignModel& m, const std::vector<OraclePair>& pairs,
                const std::vector<std::vector<int>>& allowed,
                const std::vector<double>& suffix_min, size_t depth, std::vector<int>& assignment,
                std::vector<double>& load, double routes, Candidate& best,
                std::vector<PairDemand> const& eval_pairs) {
    if (best.valid) {
        // Route costs alone bound any completion from below (fixed and
        // printer charges are nonnegative).
        double lb = routes + suffix_min[depth];
        double tol = kRelTol * std::max({1.0, std::fabs(lb), std::fabs(best.cost)});
        if (lb > best.cost + tol) return;
    }
    if (depth == pairs.size()) {
        Candidate cand = eval_assignment(m, eval_pairs, assignment);
        if (candidate_improves(cand, best)) best = cand;
        return;
    }
    const OraclePair& pd = pairs[depth];
    const double cap = static_cast<double>(m.max_printers) * m.half_capacity();
    for (int k : allowed[depth]) {
        const Source& src = pd.sources[k];
        if (src.internal) {
            if (load[src.idx] + src.load > cap * (1.0 + kCapSlack)) continue;
            load[src.idx] += src.load;
        }
        assignment[depth] = k;
        oracle_dfs(m, pairs, allowed, suffix_min, depth + 1, assignment, load, routes + src.cost,
                   best, eval_pairs);
        assignment[depth] = -1;
        if (src.internal) load[src.idx] -= src.load;
    }
}

} // namespace

DesignSolution brute_force_design(const DesignModel& m) {
    auto t0 = std::chrono::steady_clock::now();
    m.check();
    const int nr = static_cast<int>(m.if_ids.size());
    const int np = static_cast<int>(m.part_ids.size());
    const int ns = static_cast<int>(m.supplier_ids.size());
    if (nr > 5 || np > 3 || ns > 2 || m.max_printers > 3)
        throw Error(ErrorCode::SizeCap,
                    "brute-force design caps: 5 facilities, 3 parts, 2 suppliers, 3 printers");

    // Enumerate feasible sources directly from the model.
    std::vector<OraclePair> pairs;
    std::vector<std::pair<std::string, std::string>> witnesses;
    for (int dest = 0; dest < nr; ++dest) {
        for (int part = 0; part < np; ++part) {
            if (!m.has_demand[dest][part]) continue;
            OraclePair op;
            op.dest = dest;
            op.part = part;
            for (int r = 0; r < nr; ++r) {
                double lead = m.internal_lead(r, dest, part);
                double load = m.demand[dest][part] * m.print_time_hours[r][part];
                if (lead > m.max_lead_hours || !m.load_fits(load)) continue;
                op.sources.push_back(
                    {true, r, internal_route_cost(m, r, dest, part), load, lead});
            }
            for (int s = 0; s < ns; ++s) {
                if (!m.supplier_sells(s, part) || !m.supplier_delivers(s, dest)) continue;
                double lead = m.external_lead(s, dest, part);
                if (lead > m.max_lead_hours) continue;
                op.sources.push_back({false, s, external_route_cost(m, s, dest, part), 0.0, lead});
            }
            if (op.sources.empty()) witnesses.emplace_back(m.if_ids[dest], m.part_ids[part]);
            pairs.push_back(std::move(op));
        }
    }

    DesignSolution out;
    auto finish = [&](DesignSolution sol) {
        sol.solve_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return sol;
    };
    if (!witnesses.empty()) {
        out.status = SolveStatus::Infeasible;
        out.infeasible_pairs = witnesses;
        return finish(out);
    }

    // eval_assignment wants PairDemand records; mirror the oracle pairs.
    std::vector<PairDemand> eval_pairs;
    for (const OraclePair& op : pairs) {
        PairDemand pd;
        pd.dest = op.dest;
        pd.part = op.part;
        pd.units = m.demand[op.dest][op.part];
        pd.order_count = m.orders[op.dest][op.part];
        pd.sources = op.sources;
        eval_pairs.push_back(std::move(pd));
    }

    Candidate best;
    for (uint32_t mask = 0; mask < (1u << nr); ++mask) {
        std::vector<std::vector<int>> allowed(pairs.size());
        std::vector<double> suffix_min(pairs.size() + 1, 0.0);
        bool subset_ok = true;
        for (int i = static_cast<int>(pairs.size()) - 1; i >= 0; --i) {
            double cheapest = kInf;
            for (size_t k = 0; k < pairs[i].sources.size(); ++k) {
                const Source& src = pairs[i].sources[k];
                if (src.internal && !(mask & (1u << src.idx))) continue;
                allowed[i].push_back(static_cast<int>(k));
                cheapest = std::min(cheapest, src.cost);
            }
            if (allowed[i].empty()) {
                subset_ok = false;
                break;
            }
            suffix_min[i] = suffix_min[i + 1] + cheapest;
        }
        if (!subset_ok) continue;

        std::vector<int> assignment(pairs.size(), -1);
        std::vector<double> load(nr, 0.0);
        oracle_dfs(m, pairs, allowed, suffix_min, 0, assignment, load, 0.0, best, eval_pairs);
    }

    if (!best.valid) {
        // Joint printer-capacity conflict: coverable pairs, no feasible packing.
        out.status = SolveStatus::Infeasible;
        return finish(out);
    }
    return finish(assemble_solution(m, eval_pairs, best));
}

// ---------------------------------------------------------------------------
// Evaluation and audit
// ---------------------------------------------------------------------------

namespace {

int index_of(const std::vector<std::string>& ids, const std::string& id, const char* what) {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id)
        throw Error(ErrorCode::Reference, std::string(what) + " '" + id + "' not in model");
    return static_cast<int>(it - ids.begin());
}

} // namespace

double evaluate_cost(const DesignSolution& sol, const DesignModel& m) {
    if (sol.status == SolveStatus::Infeasible) return 0.0;
    double total = 0.0;
    for (const auto& [pc, printers] : sol.printers) {
        index_of(m.if_ids, pc, "facility");
        total += m.facility_fixed_cost + static_cast<double>(printers) * m.printer_fixed_cost;
    }
    for (const InternalRoute& route : sol.internal_routes) {
        int r = index_of(m.if_ids, route.source, "facility");
        int dest = index_of(m.if_ids, route.destination, "facility");
        int p = index_of(m.part_ids, route.part, "part");
        total += m.print_unit_cost[r][p] * m.demand[dest][p] +
                 m.delivery_cost[r][dest] * static_cast<double>(m.orders[dest][p]) +
                 m.internal_order_cost[r][p] * static_cast<double>(m.orders[dest][p]);
    }
    for (const ExternalRoute& route : sol.external_routes) {
        int s = index_of(m.supplier_ids, route.supplier, "supplier");
        int dest = index_of(m.if_ids, route.destination, "facility");
        int p = index_of(m.part_ids, route.part, "part");
        total += m.supplier_price[s][p] * m.demand[dest][p] +
                 m.supplier_delivery_cost[s][dest] * static_cast<double>(m.orders[dest][p]);
    }
    return total;
}

std::vector<ConstraintViolation> check_feasibility(const DesignSolution& sol,
                                                   const DesignModel& m) {
    std::vector<ConstraintViolation> v;
    if (sol.status == SolveStatus::Infeasible) return v;

    const int nr = static_cast<int>(m.if_ids.size());
    const int np = static_cast<int>(m.part_ids.size());
    std::vector<char> open(nr, 0);
    std::vector<int> printers(nr, 0);
    for (const std::string& pc : sol.open_pcs) open[index_of(m.if_ids, pc, "facility")] = 1;
    for (const auto& [pc, n] : sol.printers) printers[index_of(m.if_ids, pc, "facility")] = n;

    std::vector<std::vector<int>> internal_cover(nr, std::vector<int>(np, 0));
    std::vector<std::vector<int>> external_cover(nr, std::vector<int>(np, 0));
    std::vector<double> load(nr, 0.0);
    std::vector<int> supplies(nr, 0);

    for (const InternalRoute& route : sol.internal_routes) {
        int r = index_of(m.if_ids, route.source, "facility");
        int dest = index_of(m.if_ids, route.destination, "facility");
        int p = index_of(m.part_ids, route.part, "part");
        std::string at = " at (" + route.source + ", " + route.destination + ", " + route.part + ")";
        if (m.internal_lead(r, dest, p) > m.max_lead_hours + 1e-9)
            v.push_back({"8", "internal route exceeds the lead-time cap" + at});
        if (!open[r]) v.push_back({"11", "route from a closed production center" + at});
        if (!m.has_demand[dest][p]) v.push_back({"13", "internal route without demand" + at});
        internal_cover[dest][p] += 1;
        load[r] += m.demand[dest][p] * m.print_time_hours[r][p];
        supplies[r] += 1;
    }
    for (const ExternalRoute& route : sol.external_routes) {
        int s = index_of(m.supplier_ids, route.supplier, "supplier");
        int dest = index_of(m.if_ids, route.destination, "facility");
        int p = index_of(m.part_ids, route.part, "part");
        std::string at = " at (" + route.supplier + ", " + route.destination + ", " + route.part + ")";
        if (!m.supplier_sells(s, p) || !m.supplier_delivers(s, dest))
            v.push_back({"9", "supplier cannot serve this route" + at});
        else if (m.external_lead(s, dest, p) > m.max_lead_hours + 1e-9)
            v.push_back({"9", "external route exceeds the lead-time cap" + at});
        if (!m.has_demand[dest][p]) v.push_back({"14", "external route without demand" + at});
        external_cover[dest][p] += 1;
    }

    for (int r = 0; r < nr; ++r) {
        std::string name = m.if_ids[r];
        if (printers[r] > m.max_printers)
            v.push_back({"7", "facility " + name + " exceeds the printer ceiling"});
        if (printers[r] > 0 && !open[r])
            v.push_back({"10", "printers allocated to closed facility " + name});
        if (open[r] && supplies[r] == 0)
            v.push_back({"12", "open production center " + name + " supplies nothing"});
        double budget = static_cast<double>(printers[r]) * m.half_capacity();
        if (load[r] > budget + kCapSlack * std::max(1.0, budget))
            v.push_back({"16", "facility " + name + " print load exceeds printer capacity"});
    }

    for (int dest = 0; dest < nr; ++dest) {
        for (int p = 0; p < np; ++p) {
            int covered = internal_cover[dest][p] + external_cover[dest][p];
            std::string at = " at (" + m.if_ids[dest] + ", " + m.part_ids[p] + ")";
            if (m.has_demand[dest][p] && covered < 1)
                v.push_back({"15", "demanded pair has no supply route" + at});
            if (m.has_demand[dest][p] && covered != 1)
                v.push_back({"17", "demanded pair must have exactly one route" + at});
        }
    }
    return v;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

std::string serialize_design(const DesignSolution& sol, bool include_timings) {
    json root;
    root["status"] = sol.status == SolveStatus::Optimal ? "optimal" : "infeasible";
    root["open_pcs"] = sol.open_pcs;
    root["printers"] = sol.printers;
    json internals = json::array();
    for (const InternalRoute& r : sol.internal_routes)
        internals.push_back({{"source", r.source},
                             {"destination", r.destination},
                             {"part", r.part},
                             {"annual_units", r.annual_units},
                             {"lead_hours", r.lead_hours},
                             {"annual_cost", r.annual_cost}});
    root["internal_routes"] = internals;
    json externals = json::array();
    for (const ExternalRoute& r : sol.external_routes)
        externals.push_back({{"supplier", r.supplier},
                             {"destination", r.destination},
                             {"part", r.part},
                             {"annual_units", r.annual_units},
                             {"lead_hours", r.lead_hours},
                             {"annual_cost", r.annual_cost}});
    root["external_routes"] = externals;
    root["total_cost"] = sol.total_cost;
    root["worst_lead_hours"] = sol.worst_lead_hours;
    root["solve_seconds"] = include_timings ? sol.solve_seconds : 0.0;
    if (sol.status == SolveStatus::Infeasible) {
        json witnesses = json::array();
        for (const auto& [facility, part] : sol.infeasible_pairs)
            witnesses.push_back({{"facility", facility}, {"part", part}});
        root["infeasible_pairs"] = witnesses;
    }
    return root.dump(2) + "\n";
}

DesignSolution parse_design(const std::string& json_text) {
    DesignSolution sol;
    try {
        json root = json::parse(json_text);
        sol.status = root.at("status").get<std::string>() == "optimal" ? SolveStatus::Optimal
                                                                       : SolveStatus::Infeasible;
        sol.open_pcs = root.at("open_pcs").get<std::vector<std::string>>();
        sol.printers = root.at("printers").get<std::map<std::string, int>>();
        for (const json& jr : root.at("internal_routes")) {
            InternalRoute r;
            r.source = jr.at("source").get<std::string>();
            r.destination = jr.at("destination").get<std::string>();
            r.part = jr.at("part").get<std::string>();
            r.annual_units = jr.at("annual_units").get<double>();
            r.lead_hours = jr.at("lead_hours").get<double>();
            r.annual_cost = jr.at("annual_cost").get<double>();
            sol.internal_routes.push_back(std::move(r));
        }
        for (const json& jr : root.at("external_routes")) {
            ExternalRoute r;
            r.supplier = jr.at("supplier").get<std::string>();
            r.destination = jr.at("destination").get<std::string>();
            r.part = jr.at("part").get<std::string>();
            r.annual_units = jr.at("annual_units").get<double>();
            r.lead_hours = jr.at("lead_hours").get<double>();
            r.annual_cost = jr.at("annual_cost").get<double>();
            sol.external_routes.push_back(std::move(r));
        }
        sol.total_cost = root.at("total_cost").get<double>();
        sol.worst_lead_hours = root.at("worst_lead_hours").get<double>();
        sol.solve_seconds = root.value("solve_seconds", 0.0);
        if (root.contains("infeasible_pairs")) {
            for (const json& jw : root.at("infeasible_pairs"))
                sol.infeasible_pairs.emplace_back(jw.at("facility").get<std::string>(),
                                                  jw.at("part").get<std::string>());
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("design: ") + e.what());
    }
    return sol;
}

void save_design(const DesignSolution& sol, const std::string& path, bool include_timings) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
    out << serialize_design(sol, include_timings);
    if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

DesignSolution load_design(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open design file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_design(buf.str());
}

} // namespace amsc
