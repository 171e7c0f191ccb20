#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "amsc/common.hpp"

namespace amsc {

struct Location {
    std::string id;
    std::string label;
    double latitude = 0.0;  // decimal degrees
    double longitude = 0.0; // decimal degrees
    std::string postal_code; // empty = none
};

// Per-part production data. The per-facility maps are keyed by location id;
// instance files may give a single scalar instead, which the loader expands
// over every location.
struct Part {
    std::string id;
    double width_mm = 0.0;
    double height_mm = 0.0;
    double depth_mm = 0.0;
    std::map<std::string, double> print_time_hours;         // facility -> h
    std::map<std::string, double> print_unit_cost;          // facility -> $
    std::map<std::string, double> internal_order_cost;      // facility -> $
    std::map<std::string, double> internal_order_time_hours; // facility -> h
};

struct Supplier {
    std::string id;
    std::string location; // optional location id, used for tariff quoting
    std::map<std::string, double> price;             // part -> $ per unit
    std::map<std::string, double> order_time_hours;  // part -> h
    std::map<std::string, double> delivery_cost;     // facility -> $ per order
    std::map<std::string, double> delivery_time_hours; // facility -> h
};

struct OrderLine {
    std::string client_location;
    std::string part;
    long long quantity = 0; // units per year
};

using PairKey = std::pair<std::string, std::string>;

struct EconomicParams {
    double facility_fixed_cost = 0.0;    // $/year per open facility
    double printer_fixed_cost = 0.0;     // $/year per printer
    double printer_capacity_hours = 0.0; // h/year per printer
    int max_printers = 1;                // per production center
    std::map<PairKey, double> delivery_cost;       // (from,to) -> $ per order
    std::map<PairKey, double> delivery_time_hours; // (from,to) -> h
};

// Optional inline raw travel matrix carried by the instance file.
struct InlineMatrix {
    std::map<PairKey, double> distance_m;
    std::map<PairKey, double> travel_time_s;
};

struct Instance {
    std::vector<Location> locations;
    std::vector<Part> parts;
    std::vector<Supplier> suppliers;
    std::vector<OrderLine> orders;
    EconomicParams economics;
    std::optional<InlineMatrix> matrix;

    const Location* find_location(const std::string& id) const;
    const Part* find_part(const std::string& id) const;
    const Supplier* find_supplier(const std::string& id) const;
};

// One invariant violation. `code` is machine readable, `path` points at the
// offending field ("orders[3].quantity" style).
struct Violation {
    std::string code;
    std::string path;
    std::string message;
};

Instance load_instance(const std::string& path);
Instance parse_instance(const std::string& json_text);
std::string serialize_instance(const Instance& instance);
void save_instance(const Instance& instance, const std::string& path);

std::vector<Violation> validate_instance(const Instance& instance);

} // namespace amsc
