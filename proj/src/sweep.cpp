#include "amsc/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace amsc {

namespace {

std::vector<double> grid_values(double from_h, double to_h, double step_h) {
    if (step_h <= 0.0) throw Error(ErrorCode::Domain, "sweep step must be positive");
    if (from_h > to_h) throw Error(ErrorCode::Domain, "sweep range is empty (from > to)");
    std::vector<double> grid;
    for (int i = 0;; ++i) {
        double v = from_h + static_cast<double>(i) * step_h;
        if (v > to_h + step_h * 1e-9) break;
        grid.push_back(std::min(v, to_h));
    }
    return grid;
}

SweepPoint point_from(const DesignSolution& sol, double max_lead_hours) {
    SweepPoint pt;
    pt.max_lead_hours = max_lead_hours;
    pt.status = sol.status;
    pt.solve_seconds = sol.solve_seconds;
    if (sol.status == SolveStatus::Optimal) {
        pt.total_cost = sol.total_cost;
        pt.pc_count = static_cast<int>(sol.open_pcs.size());
        for (const auto& [pc, n] : sol.printers) pt.printer_total += n;
        pt.worst_lead_hours = sol.worst_lead_hours;
    }
    return pt;
}

} // namespace

bool same_design(const DesignSolution& a, const DesignSolution& b) {
    if (a.status != b.status) return false;
    if (a.open_pcs != b.open_pcs || a.printers != b.printers) return false;
    if (a.internal_routes.size() != b.internal_routes.size() ||
        a.external_routes.size() != b.external_routes.size())
        return false;
    for (size_t i = 0; i < a.internal_routes.size(); ++i) {
        const InternalRoute& x = a.internal_routes[i];
        const InternalRoute& y = b.internal_routes[i];
        if (x.source != y.source || x.destination != y.destination || x.part != y.part)
            return false;
    }
    for (size_t i = 0; i < a.external_routes.size(); ++i) {
        const ExternalRoute& x = a.external_routes[i];
        const ExternalRoute& y = b.external_routes[i];
        if (x.supplier != y.supplier || x.destination != y.destination || x.part != y.part)
            return false;
    }
    return true;
}

SweepResult sweep_lead_time(const Instance& instance, const ClusterSolution& clusters,
                            double from_h, double to_h, double step_h, int jobs) {
    std::vector<double> grid = grid_values(from_h, to_h, step_h);

    SweepResult result;
    result.solutions.resize(grid.size());

    int workers = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min<int>(workers, static_cast<int>(grid.size())));

    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::string error_message;
    std::mutex error_mutex;

    auto work = [&]() {
        while (!failed.load()) {
            size_t i = next.fetch_add(1);
            if (i >= grid.size()) break;
            try {
                DesignModel model = build_design_model(clusters, instance, grid[i]);
                result.solutions[i] = solve_design(model);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) error_message = e.what();
            }
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) throw Error(ErrorCode::Domain, "sweep failed: " + error_message);

    for (size_t i = 0; i < grid.size(); ++i)
        result.curve.points.push_back(point_from(result.solutions[i], grid[i]));

    // Invariance threshold: start of the maximal suffix of identical designs.
    int last = static_cast<int>(grid.size()) - 1;
    if (last >= 0 && result.solutions[last].status == SolveStatus::Optimal) {
        int first = last;
        while (first > 0 && same_design(result.solutions[first - 1], result.solutions[last]))
            --first;
        result.curve.invariance_threshold = grid[first];
    }
    return result;
}

SweepPoint find_cost_benefit_point(SweepCurve& curve) {
    std::vector<const SweepPoint*> feasible;
    for (const SweepPoint& pt : curve.points)
        if (pt.status == SolveStatus::Optimal) feasible.push_back(&pt);
    if (feasible.size() < 2)
        throw Error(ErrorCode::Domain,
                    "cost-benefit selection needs at least two feasible sweep points");

    double cmin = feasible.front()->total_cost, cmax = cmin;
    double hmin = feasible.front()->max_lead_hours, hmax = hmin;
    for (const SweepPoint* pt : feasible) {
        cmin = std::min(cmin, pt->total_cost);
        cmax = std::max(cmax, pt->total_cost);
        hmin = std::min(hmin, pt->max_lead_hours);
        hmax = std::max(hmax, pt->max_lead_hours);
    }

    if (cmax - cmin <= 1e-12 * std::max(1.0, std::fabs(cmax))) {
        // All costs equal: normalization is undefined, fall back to the
        // cheapest/fastest point and flag it.
        curve.selected = *feasible.front();
        curve.selected_degenerate = true;
        return *curve.selected;
    }

    auto ncost = [&](const SweepPoint& pt) { return (pt.total_cost - cmin) / (cmax - cmin); };
    auto nlead = [&](const SweepPoint& pt) {
        return (pt.max_lead_hours - hmin) / (hmax - hmin);
    };

    size_t cross = feasible.size() - 1;
    for (size_t i = 0; i < feasible.size(); ++i) {
        if (ncost(*feasible[i]) <= nlead(*feasible[i])) {
            cross = i;
            break;
        }
    }

    const SweepPoint* chosen = feasible[cross];
    if (cross > 0) {
        double gap_prev = std::fabs(ncost(*feasible[cross - 1]) - nlead(*feasible[cross - 1]));
        double gap_here = std::fabs(ncost(*feasible[cross]) - nlead(*feasible[cross]));
        if (gap_prev < gap_here || std::fabs(gap_prev - gap_here) <= 1e-12)
            chosen = feasible[cross - 1]; // smaller gap, ties to the smaller lead time
    }
    curve.selected = *chosen;
    curve.selected_degenerate = false;
    return *chosen;
}

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

} // namespace

void export_curve(const SweepCurve& curve, const std::string& path, bool include_timings) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
    out << "max_lead_hours,total_cost,pc_count,printer_total,worst_lead_hours,status,"
           "solve_seconds\n";
    for (const SweepPoint& pt : curve.points) {
        out << num(pt.max_lead_hours) << ',' << num(pt.total_cost) << ',' << pt.pc_count << ','
            << pt.printer_total << ',' << num(pt.worst_lead_hours) << ','
            << (pt.status == SolveStatus::Optimal ? "optimal" : "infeasible") << ','
            << num(include_timings ? pt.solve_seconds : 0.0) << '\n';
    }
    if (curve.selected)
        out << "# selected max_lead_hours=" << num(curve.selected->max_lead_hours)
            << (curve.selected_degenerate ? " (degenerate: all costs equal)" : "") << '\n';
    if (curve.invariance_threshold)
        out << "# invariance_threshold=" << num(*curve.invariance_threshold) << '\n';
    if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

SweepCurve parse_curve_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open curve CSV '" + path + "'");
    SweepCurve curve;
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorCode::Parse, "curve CSV '" + path + "' is empty");
    size_t lineno = 1;
    double selected_h = std::numeric_limits<double>::quiet_NaN();
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto pos = line.find("selected max_lead_hours=");
            if (pos != std::string::npos)
                selected_h = std::stod(line.substr(pos + std::string("selected max_lead_hours=").size()));
            continue;
        }
        std::vector<std::string> fields;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                fields.push_back(cur);
                cur.clear();
            } else if (c != '\r') {
                cur.push_back(c);
            }
        }
        fields.push_back(cur);
        if (fields.size() != 7)
            throw Error(ErrorCode::Parse,
                        path + ":" + std::to_string(lineno) + ": expected 7 fields");
        SweepPoint pt;
        try {
            pt.max_lead_hours = std::stod(fields[0]);
            pt.total_cost = std::stod(fields[1]);
            pt.pc_count = std::stoi(fields[2]);
            pt.printer_total = std::stoi(fields[3]);
            pt.worst_lead_hours = std::stod(fields[4]);
            pt.status = fields[5] == "optimal" ? SolveStatus::Optimal : SolveStatus::Infeasible;
            pt.solve_seconds = std::stod(fields[6]);
        } catch (const std::exception&) {
            throw Error(ErrorCode::Parse,
                        path + ":" + std::to_string(lineno) + ": malformed numeric field");
        }
        curve.points.push_back(pt);
    }
    if (!std::isnan(selected_h)) {
        for (const SweepPoint& pt : curve.points)
            if (pt.max_lead_hours == selected_h) curve.selected = pt;
    }
    return curve;
}

void write_curve_svg(const SweepCurve& curve, const std::string& path) {
    std::vector<const SweepPoint*> feasible;
    for (const SweepPoint& pt : curve.points)
        if (pt.status == SolveStatus::Optimal) feasible.push_back(&pt);

    const double width = 640.0, height = 400.0, margin = 48.0;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    if (feasible.size() >= 2) {
        double cmin = feasible.front()->total_cost, cmax = cmin;
        double hmin = feasible.front()->max_lead_hours, hmax = hmin;
        for (const SweepPoint* pt : feasible) {
            cmin = std::min(cmin, pt->total_cost);
            cmax = std::max(cmax, pt->total_cost);
            hmin = std::min(hmin, pt->max_lead_hours);
            hmax = std::max(hmax, pt->max_lead_hours);
        }
        double cspan = cmax - cmin > 0.0 ? cmax - cmin : 1.0;
        double hspan = hmax - hmin > 0.0 ? hmax - hmin : 1.0;
        auto x_of = [&](double h) {
            return margin + (h - hmin) / hspan * (width - 2.0 * margin);
        };
        auto y_of = [&](double t) { // t in [0,1], origin bottom
            return height - margin - t * (height - 2.0 * margin);
        };
        auto polyline = [&](auto value, const char* color) {
            out << "  <polyline fill=\"none\" stroke=\"" << color
                << "\" stroke-width=\"2\" points=\"";
            for (const SweepPoint* pt : feasible)
                out << x_of(pt->max_lead_hours) << ',' << y_of(value(*pt)) << ' ';
            out << "\"/>\n";
        };
        polyline([&](const SweepPoint& pt) { return (pt.total_cost - cmin) / cspan; }, "#555555");
        polyline([&](const SweepPoint& pt) { return (pt.max_lead_hours - hmin) / hspan; },
                 "#111111");
        if (curve.selected) {
            out << "  <circle cx=\"" << x_of(curve.selected->max_lead_hours) << "\" cy=\""
                << y_of((curve.selected->total_cost - cmin) / cspan)
                << "\" r=\"5\" fill=\"none\" stroke=\"#aa2222\" stroke-width=\"2\"/>\n";
        }
        out << "  <text x=\"" << margin << "\" y=\"" << margin - 16.0
            << "\" font-family=\"sans-serif\" font-size=\"13\">normalized cost (grey) and lead "
               "time (black) vs lead-time cap</text>\n";
    } else {
        out << "  <text x=\"" << margin << "\" y=\"" << height / 2.0
            << "\" font-family=\"sans-serif\" font-size=\"13\">not enough feasible points</text>\n";
    }
    out << "</svg>\n";
    if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

} // namespace amsc
