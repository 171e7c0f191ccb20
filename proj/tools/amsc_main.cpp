// amsc: designs additive-manufacturing spare-part supply chains.
// Pipeline: cluster (demand clustering) -> design (make-or-buy network
// design at one lead-time cap) -> sweep (cap sweep with cost-benefit pick).
// generate builds synthetic instances, validate audits instance files.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "amsc/common.hpp"
#include "amsc/costmatrix.hpp"
#include "amsc/locdesign.hpp"
#include "amsc/model.hpp"
#include "amsc/pmedian.hpp"
#include "amsc/scenarios.hpp"
#include "amsc/shipping.hpp"
#include "amsc/sweep.hpp"

#include <json.hpp>

namespace {

// Documented exit codes.
constexpr int kExitOk = 0;
constexpr int kExitInvalidConfig = 2;
constexpr int kExitValidationFailure = 3;
constexpr int kExitInfeasible = 4;
constexpr int kExitIo = 5;
constexpr int kExitProvider = 6;

int exit_code_for(const amsc::Error& e) {
    switch (e.code()) {
        case amsc::ErrorCode::Io:
            return kExitIo;
        case amsc::ErrorCode::Provider:
            return kExitProvider;
        case amsc::ErrorCode::Parse:
        case amsc::ErrorCode::Reference:
        case amsc::ErrorCode::Degenerate:
        case amsc::ErrorCode::MissingCoefficient:
            return kExitValidationFailure;
        case amsc::ErrorCode::Domain:
        case amsc::ErrorCode::SizeCap:
            return kExitInvalidConfig;
    }
    return kExitInvalidConfig;
}

struct MatrixOptions {
    std::string csv_path;
    std::string remote_base_url;
    std::string api_key_env;
    std::string cache_dir;
};

struct WeightOptions {
    double time_weight = -1.0;
    double distance_weight = -1.0;

    amsc::NormalizationWeights resolve() const {
        amsc::NormalizationWeights w;
        if (time_weight >= 0.0 && distance_weight >= 0.0) {
            w.time_weight = time_weight;
            w.distance_weight = distance_weight;
        } else if (time_weight >= 0.0) {
            w.time_weight = time_weight;
            w.distance_weight = 1.0 - time_weight;
        } else if (distance_weight >= 0.0) {
            w.distance_weight = distance_weight;
            w.time_weight = 1.0 - distance_weight;
        }
        amsc::check_weights(w);
        return w;
    }
};

amsc::RawTravelMatrix resolve_matrix(const amsc::Instance& instance, const MatrixOptions& opt) {
    int sources = (!opt.csv_path.empty() ? 1 : 0) + (!opt.remote_base_url.empty() ? 1 : 0);
    if (sources > 1)
        throw amsc::Error(amsc::ErrorCode::Domain,
                          "--matrix-csv and --remote-base-url are mutually exclusive");
    if (!opt.csv_path.empty()) {
        amsc::OfflineCsvMatrixProvider provider(opt.csv_path);
        return amsc::fetch_matrix(provider, instance.locations);
    }
    if (!opt.remote_base_url.empty()) {
        if (opt.cache_dir.empty())
            throw amsc::Error(amsc::ErrorCode::Domain,
                              "--remote-base-url requires --cache-dir");
        amsc::RemoteMatrixProvider provider(
            amsc::make_http_matrix_transport(opt.remote_base_url, opt.api_key_env),
            opt.cache_dir);
        return amsc::fetch_matrix(provider, instance.locations);
    }
    if (instance.matrix)
        return amsc::matrix_from_inline(*instance.matrix, instance.locations);
    throw amsc::Error(amsc::ErrorCode::Domain,
                      "no travel matrix: give --matrix-csv, --remote-base-url or an inline matrix");
}

amsc::Instance load_checked_instance(const std::string& path) {
    amsc::Instance instance = amsc::load_instance(path);
    auto violations = amsc::validate_instance(instance);
    if (!violations.empty()) {
        std::ostringstream msg;
        msg << "instance has " << violations.size() << " violation(s); run `amsc validate`";
        throw amsc::Error(amsc::ErrorCode::Reference, msg.str());
    }
    return instance;
}

int run_cluster(const std::string& instance_path, const MatrixOptions& matrix_opt,
                const WeightOptions& weight_opt, int p_arg, const std::string& out_path) {
    amsc::Instance instance = load_checked_instance(instance_path);
    amsc::RawTravelMatrix raw = resolve_matrix(instance, matrix_opt);
    amsc::CostMatrix matrix = amsc::build_cost_matrix(raw, weight_opt.resolve());

    std::map<std::string, double> demand;
    for (const auto& order : instance.orders)
        demand[order.client_location] += static_cast<double>(order.quantity);

    std::vector<std::string> ids;
    for (const auto& loc : instance.locations) ids.push_back(loc.id);
    int p = p_arg > 0 ? p_arg : static_cast<int>(ids.size());

    amsc::PMedianProblem problem = amsc::PMedianProblem::build(matrix, demand, p, ids, ids);
    amsc::ClusterSolution clusters = amsc::solve_pmedian(problem);
    clusters = amsc::aggregate_clusters(clusters, instance.orders);
    amsc::save_clusters(clusters, out_path);

    std::printf("p-median objective: %.6f over %zu clients, %d facilities open\n",
                clusters.objective, problem.client_ids.size(), p);
    for (const auto& facility : clusters.open_ifs) {
        auto it = clusters.order_table.find(facility);
        if (it == clusters.order_table.end()) continue;
        long long orders = 0;
        double units = 0.0;
        for (const auto& [part, n] : it->second) orders += n;
        for (const auto& [part, d] : clusters.demand_table.at(facility)) units += d;
        std::printf("  %s: %lld orders/yr, %.0f units/yr over %zu part(s)\n", facility.c_str(),
                    orders, units, it->second.size());
    }
    std::printf("clusters written to %s\n", out_path.c_str());
    return kExitOk;
}

int run_design(const std::string& instance_path, const std::string& clusters_path,
               double max_lead_hours, const std::string& tariffs_path,
               const std::string& out_path, bool timings) {
    amsc::Instance instance = load_checked_instance(instance_path);
    if (!tariffs_path.empty())
        instance = amsc::apply_tariffs(instance, amsc::load_tariffs(tariffs_path));
    amsc::ClusterSolution clusters = amsc::load_clusters(clusters_path);
    amsc::DesignModel model = amsc::build_design_model(clusters, instance, max_lead_hours);
    amsc::DesignSolution solution = amsc::solve_design(model);
    amsc::save_design(solution, out_path, timings);

    if (solution.status == amsc::SolveStatus::Infeasible) {
        std::printf("infeasible at max lead %.3f h; uncoverable pairs:\n", max_lead_hours);
        for (const auto& [facility, part] : solution.infeasible_pairs)
            std::printf("  (%s, %s)\n", facility.c_str(), part.c_str());
        return kExitInfeasible;
    }
    std::printf("total cost: %s/yr\n", amsc::format_money(solution.total_cost).c_str());
    std::printf("production centers: %zu, printers: %d\n", solution.open_pcs.size(), [&] {
        int n = 0;
        for (const auto& [pc, k] : solution.printers) n += k;
        return n;
    }());
    std::printf("worst lead time: %.3f h\n", solution.worst_lead_hours);
    std::printf("solve time: %.3f s\n", solution.solve_seconds);
    std::printf("design written to %s\n", out_path.c_str());
    return kExitOk;
}

int run_sweep(const std::string& instance_path, const std::string& clusters_path, double from_h,
              double to_h, double step_h, int jobs, const std::string& tariffs_path,
              const std::string& out_path, const std::string& svg_path, bool timings) {
    amsc::Instance instance = load_checked_instance(instance_path);
    if (!tariffs_path.empty())
        instance = amsc::apply_tariffs(instance, amsc::load_tariffs(tariffs_path));
    amsc::ClusterSolution clusters = amsc::load_clusters(clusters_path);

    amsc::SweepResult result = amsc::sweep_lead_time(instance, clusters, from_h, to_h, step_h, jobs);

    size_t feasible = 0;
    for (const auto& pt : result.curve.points)
        if (pt.status == amsc::SolveStatus::Optimal) ++feasible;

    if (feasible >= 2) {
        amsc::SweepPoint pick = amsc::find_cost_benefit_point(result.curve);
        if (result.curve.selected_degenerate)
            std::printf("cost-benefit: degenerate curve (all costs equal); tie rule applied\n");
        std::printf("cost-benefit point: max lead %.3f h, cost %s/yr, %d center(s)\n",
                    pick.max_lead_hours, amsc::format_money(pick.total_cost).c_str(),
                    pick.pc_count);
    } else {
        std::printf("cost-benefit point skipped: %zu feasible point(s)\n", feasible);
    }
    if (result.curve.invariance_threshold)
        std::printf("designs invariant from max lead %.3f h on\n",
                    *result.curve.invariance_threshold);

    amsc::export_curve(result.curve, out_path, timings);
    std::printf("curve written to %s (%zu points)\n", out_path.c_str(),
                result.curve.points.size());
    if (!svg_path.empty()) {
        amsc::write_curve_svg(result.curve, svg_path);
        std::printf("chart written to %s\n", svg_path.c_str());
    }
    return kExitOk;
}

std::vector<amsc::Location> load_location_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw amsc::Error(amsc::ErrorCode::Io, "cannot open locations file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
        throw amsc::Error(amsc::ErrorCode::Parse, std::string("locations: ") + e.what());
    }
    const nlohmann::json& arr = root.is_array() ? root : root.at("locations");
    std::vector<amsc::Location> out;
    for (const auto& jl : arr) {
        amsc::Location loc;
        loc.id = jl.at("id").get<std::string>();
        loc.label = jl.value("label", loc.id);
        loc.latitude = jl.at("latitude").get<double>();
        loc.longitude = jl.at("longitude").get<double>();
        loc.postal_code = jl.value("postal_code", std::string());
        out.push_back(std::move(loc));
    }
    return out;
}

// Uniform per-facility maps survive a location swap; anything else cannot be
// carried over to a different geography.
std::map<std::string, double> remap_uniform(const std::map<std::string, double>& m,
                                            const std::vector<amsc::Location>& new_locations,
                                            const std::string& what) {
    if (m.empty()) return {};
    double v0 = m.begin()->second;
    for (const auto& [k, v] : m)
        if (v != v0)
            throw amsc::Error(amsc::ErrorCode::Domain,
                              what + " varies per facility; cannot transfer to new locations");
    std::map<std::string, double> out;
    for (const auto& loc : new_locations) out[loc.id] = v0;
    return out;
}

int run_generate(const std::string& instance_path, int count, uint64_t seed,
                 const std::string& locations_path, const std::string& out_path) {
    amsc::Instance base = load_checked_instance(instance_path);
    if (base.orders.empty())
        throw amsc::Error(amsc::ErrorCode::Domain, "base instance has no orders to fit");
    amsc::DemandDistribution dist = amsc::fit_demand_distribution(base.orders);

    amsc::Instance out = base;
    if (!locations_path.empty()) {
        std::vector<amsc::Location> locations = load_location_list(locations_path);
        out.locations = locations;
        for (amsc::Part& part : out.parts) {
            part.print_time_hours = remap_uniform(part.print_time_hours, locations,
                                                  "part " + part.id + " print_time_hours");
            part.print_unit_cost = remap_uniform(part.print_unit_cost, locations,
                                                 "part " + part.id + " print_unit_cost");
            part.internal_order_cost = remap_uniform(part.internal_order_cost, locations,
                                                     "part " + part.id + " internal_order_cost");
            part.internal_order_time_hours =
                remap_uniform(part.internal_order_time_hours, locations,
                              "part " + part.id + " internal_order_time_hours");
        }
        auto keep = [&](const std::string& id) {
            for (const auto& loc : locations)
                if (loc.id == id) return true;
            return false;
        };
        for (amsc::Supplier& sup : out.suppliers) {
            if (!sup.location.empty() && !keep(sup.location)) sup.location.clear();
            std::erase_if(sup.delivery_cost, [&](const auto& kv) { return !keep(kv.first); });
            std::erase_if(sup.delivery_time_hours,
                          [&](const auto& kv) { return !keep(kv.first); });
        }
        std::erase_if(out.economics.delivery_cost, [&](const auto& kv) {
            return !keep(kv.first.first) || !keep(kv.first.second);
        });
        std::erase_if(out.economics.delivery_time_hours, [&](const auto& kv) {
            return !keep(kv.first.first) || !keep(kv.first.second);
        });
        out.matrix.reset();
    }

    out.orders = amsc::generate_orders(dist, count, seed, out.locations);
    amsc::save_instance(out, out_path);
    std::printf("generated %d orders over %zu locations (seed %llu, rng %s)\n", count,
                out.locations.size(), static_cast<unsigned long long>(seed),
                amsc::kRngAlgorithm);
    std::printf("instance written to %s\n", out_path.c_str());
    return kExitOk;
}

int run_validate(const std::string& instance_path, const std::string& out_path) {
    amsc::Instance instance = amsc::load_instance(instance_path);
    std::vector<amsc::Violation> violations = amsc::validate_instance(instance);

    if (!out_path.empty()) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& v : violations)
            arr.push_back({{"code", v.code}, {"path", v.path}, {"message", v.message}});
        std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw amsc::Error(amsc::ErrorCode::Io, "cannot open '" + out_path + "' for writing");
        out << arr.dump(2) << "\n";
    }

    if (violations.empty()) {
        std::printf("instance is valid\n");
        return kExitOk;
    }
    for (const auto& v : violations)
        std::printf("%s %s: %s\n", v.code.c_str(), v.path.c_str(), v.message.c_str());
    std::printf("%zu violation(s)\n", violations.size());
    return kExitValidationFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"additive-manufacturing spare-part supply chain designer"};
    app.require_subcommand(1);

    std::string instance_path, clusters_path, out_path, tariffs_path, svg_path, locations_path;
    MatrixOptions matrix_opt;
    WeightOptions weight_opt;
    int p_arg = 0;
    double max_lead_hours = 0.0;
    double from_h = 0.0, to_h = 0.0, step_h = 1.0;
    int jobs = 0;
    int count = 0;
    uint64_t seed = 0;
    bool timings = false;

    CLI::App* cluster = app.add_subcommand("cluster", "cluster demand onto facilities");
    cluster->add_option("--instance", instance_path, "instance JSON")->required();
    cluster->add_option("--matrix-csv", matrix_opt.csv_path, "offline travel matrix CSV");
    cluster->add_option("--remote-base-url", matrix_opt.remote_base_url,
                        "remote matrix service base URL");
    cluster->add_option("--api-key-env", matrix_opt.api_key_env,
                        "environment variable holding the service API key");
    cluster->add_option("--cache-dir", matrix_opt.cache_dir, "matrix response cache directory");
    cluster->add_option("--time-weight", weight_opt.time_weight, "travel-time weight");
    cluster->add_option("--distance-weight", weight_opt.distance_weight, "distance weight");
    cluster->add_option("--p", p_arg, "facilities to open (default: all)");
    cluster->add_option("--out", out_path, "clusters JSON output")->required();

    CLI::App* design = app.add_subcommand("design", "solve the network design at one cap");
    design->add_option("--instance", instance_path, "instance JSON")->required();
    design->add_option("--clusters", clusters_path, "clusters JSON from `cluster`")->required();
    design->add_option("--max-lead-hours", max_lead_hours, "lead-time cap")->required();
    design->add_option("--tariffs", tariffs_path, "tariff CSV filling delivery maps");
    design->add_option("--out", out_path, "design JSON output")->required();
    design->add_flag("--timings", timings, "write solve timings into the payload");

    CLI::App* sweep = app.add_subcommand("sweep", "sweep the lead-time cap");
    sweep->add_option("--instance", instance_path, "instance JSON")->required();
    sweep->add_option("--clusters", clusters_path, "clusters JSON from `cluster`")->required();
    sweep->add_option("--from", from_h, "first cap (hours)")->required();
    sweep->add_option("--to", to_h, "last cap (hours)")->required();
    sweep->add_option("--step", step_h, "grid step (hours)");
    sweep->add_option("--jobs", jobs, "parallel solves (default: hardware)");
    sweep->add_option("--tariffs", tariffs_path, "tariff CSV filling delivery maps");
    sweep->add_option("--out", out_path, "curve CSV output")->required();
    sweep->add_option("--svg", svg_path, "optional SVG chart output");
    sweep->add_flag("--timings", timings, "write solve timings into the payload");

    CLI::App* generate = app.add_subcommand("generate", "generate a synthetic instance");
    generate->add_option("--instance", instance_path, "base instance JSON")->required();
    generate->add_option("--count", count, "order lines to generate")->required();
    generate->add_option("--seed", seed, "random seed")->required();
    generate->add_option("--locations", locations_path, "replacement location list JSON");
    generate->add_option("--out", out_path, "generated instance output")->required();

    CLI::App* validate = app.add_subcommand("validate", "report instance violations");
    validate->add_option("--instance", instance_path, "instance JSON")->required();
    validate->add_option("--out", out_path, "optional JSON report output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInvalidConfig;
    }

    try {
        if (*cluster)
            return run_cluster(instance_path, matrix_opt, weight_opt, p_arg, out_path);
        if (*design)
            return run_design(instance_path, clusters_path, max_lead_hours, tariffs_path, out_path,
                              timings);
        if (*sweep)
            return run_sweep(instance_path, clusters_path, from_h, to_h, step_h, jobs,
                             tariffs_path, out_path, svg_path, timings);
        if (*generate)
            return run_generate(instance_path, count, seed, locations_path, out_path);
        if (*validate) return run_validate(instance_path, out_path);
    } catch (const amsc::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInvalidConfig;
    }
    return kExitInvalidConfig;
}
