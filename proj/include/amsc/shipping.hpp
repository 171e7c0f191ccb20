#pragma once

#include <optional>
#include <string>
#include <vector>

#include "amsc/model.hpp"

namespace amsc {

struct Parcel {
    double width_mm = 0.0;
    double height_mm = 0.0;
    double depth_mm = 0.0;
};

// Size classes by largest dimension: small <= 100 mm, medium <= 300 mm,
// large <= 600 mm. Bigger parcels have no tariff.
std::optional<std::string> parcel_size_class(const Parcel& parcel);

struct TariffRow {
    std::string origin_prefix;
    std::string dest_prefix;
    std::string size_class;
    double cost = 0.0;
    double time_hours = 0.0;
};

struct TariffTable {
    std::vector<TariffRow> rows; // sorted by (origin_prefix, dest_prefix, size_class)
};

// CSV with header origin_prefix,dest_prefix,size_class,cost,time_hours.
// Comment lines starting with '#' are skipped. Duplicate keys are rejected.
TariffTable load_tariffs(const std::string& path);

struct DeliveryQuote {
    double cost = 0.0;
    double time_hours = 0.0;
};

// Deterministic tariff lookup. Same-location quotes are free and instant.
// Among matching rows the most specific wins: longest origin prefix, then
// longest destination prefix.
DeliveryQuote delivery_quote(const Location& origin, const Location& destination,
                             const Parcel& parcel, const TariffTable& table);

// Fills the missing inter-facility and supplier delivery maps from the tariff
// table, quoting each pair exactly once with a parcel that bounds every part.
// Entries already present are kept.
Instance apply_tariffs(const Instance& instance, const TariffTable& table);

} // namespace amsc
