#pragma once

#include <optional>
#include <string>
#include <vector>

#include "amsc/locdesign.hpp"

namespace amsc {

struct SweepPoint {
    double max_lead_hours = 0.0;
    double total_cost = 0.0;
    int pc_count = 0;
    int printer_total = 0;
    double worst_lead_hours = 0.0;
    double solve_seconds = 0.0;
    SolveStatus status = SolveStatus::Optimal;
};

struct SweepCurve {
    std::vector<SweepPoint> points; // sorted by max_lead_hours ascending
    std::optional<SweepPoint> selected;
    bool selected_degenerate = false; // all feasible costs equal; tie rule applied
    // Smallest grid value from which every later design is identical.
    std::optional<double> invariance_threshold;
};

struct SweepResult {
    SweepCurve curve;
    std::vector<DesignSolution> solutions; // parallel to curve.points
};

// One exact solve per grid value from_h, from_h+step_h, ..., <= to_h.
// Grid points are independent and may run on `jobs` threads (0 = hardware
// parallelism); assembly is an ordered reduction, so the result does not
// depend on completion order.
SweepResult sweep_lead_time(const Instance& instance, const ClusterSolution& clusters,
                            double from_h, double to_h, double step_h, int jobs = 0);

// True when two designs choose the same centers, printer counts and routes.
bool same_design(const DesignSolution& a, const DesignSolution& b);

// Cost/lead-time trade-off: min-max normalize the feasible cost and lead-time
// series onto [0,1] and take the crossing — the first grid index where
// normalized cost falls to or below normalized lead time, resolved against
// the previous index by the smaller gap (ties to the smaller lead time).
// Requires at least two feasible points; when every feasible cost is equal
// the normalization degenerates and the first feasible point is returned,
// flagged via selected_degenerate.
SweepPoint find_cost_benefit_point(SweepCurve& curve);

// CSV export with header
//   max_lead_hours,total_cost,pc_count,printer_total,worst_lead_hours,status,solve_seconds
// plus trailing comment rows marking the selected point and the invariance
// threshold. Timings are zeroed unless requested.
void export_curve(const SweepCurve& curve, const std::string& path,
                  bool include_timings = false);

SweepCurve parse_curve_csv(const std::string& path);

// Two-series line chart (normalized cost and lead time), pure file output.
void write_curve_svg(const SweepCurve& curve, const std::string& path);

} // namespace amsc
