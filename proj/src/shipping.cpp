#include "amsc/shipping.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace amsc {

std::optional<std::string> parcel_size_class(const Parcel& parcel) {
    if (parcel.width_mm <= 0.0 || parcel.height_mm <= 0.0 || parcel.depth_mm <= 0.0)
        return std::nullopt;
    double longest = std::max({parcel.width_mm, parcel.height_mm, parcel.depth_mm});
    if (longest <= 100.0) return "small";
    if (longest <= 300.0) return "medium";
    if (longest <= 600.0) return "large";
    return std::nullopt;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
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
    return fields;
}

bool starts_with(const std::string& s, const std::string& prefix) {
    return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

} // namespace

TariffTable load_tariffs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open tariff CSV '" + path + "'");

    TariffTable table;
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorCode::Parse, "tariff CSV '" + path + "' is empty");
    if (split_line(line) !=
        std::vector<std::string>{"origin_prefix", "dest_prefix", "size_class", "cost",
                                 "time_hours"})
        throw Error(ErrorCode::Parse,
                    "tariff CSV header must be origin_prefix,dest_prefix,size_class,cost,time_hours");

    std::set<std::tuple<std::string, std::string, std::string>> keys;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_line(line);
        if (fields.size() != 5)
            throw Error(ErrorCode::Parse,
                        path + ":" + std::to_string(lineno) + ": expected 5 fields");
        TariffRow row;
        row.origin_prefix = fields[0];
        row.dest_prefix = fields[1];
        row.size_class = fields[2];
        try {
            row.cost = std::stod(fields[3]);
            row.time_hours = std::stod(fields[4]);
        } catch (const std::exception&) {
            throw Error(ErrorCode::Parse,
                        path + ":" + std::to_string(lineno) + ": non-numeric cost or time");
        }
        if (row.cost < 0.0 || row.time_hours < 0.0)
            throw Error(ErrorCode::Parse,
                        path + ":" + std::to_string(lineno) + ": negative cost or time");
        if (!keys.insert({row.origin_prefix, row.dest_prefix, row.size_class}).second)
            throw Error(ErrorCode::Parse, path + ":" + std::to_string(lineno) +
                                              ": duplicate tariff key (" + row.origin_prefix +
                                              ", " + row.dest_prefix + ", " + row.size_class + ")");
        table.rows.push_back(std::move(row));
    }
    std::sort(table.rows.begin(), table.rows.end(), [](const TariffRow& a, const TariffRow& b) {
        return std::tie(a.origin_prefix, a.dest_prefix, a.size_class) <
               std::tie(b.origin_prefix, b.dest_prefix, b.size_class);
    });
    return table;
}

DeliveryQuote delivery_quote(const Location& origin, const Location& destination,
                             const Parcel& parcel, const TariffTable& table) {
    if (origin.id == destination.id) return {0.0, 0.0};

    auto size_class = parcel_size_class(parcel);
    if (!size_class)
        throw Error(ErrorCode::Domain, "parcel exceeds the largest tariff size class");
    if (origin.postal_code.empty() || destination.postal_code.empty())
        throw Error(ErrorCode::MissingCoefficient,
                    "no tariff for (" + origin.id + ", " + destination.id +
                        "): postal code missing");

    const TariffRow* best = nullptr;
    for (const TariffRow& row : table.rows) {
        if (row.size_class != *size_class) continue;
        if (!starts_with(origin.postal_code, row.origin_prefix)) continue;
        if (!starts_with(destination.postal_code, row.dest_prefix)) continue;
        if (!best || row.origin_prefix.size() > best->origin_prefix.size() ||
            (row.origin_prefix.size() == best->origin_prefix.size() &&
             row.dest_prefix.size() > best->dest_prefix.size()))
            best = &row;
    }
    if (!best)
        throw Error(ErrorCode::MissingCoefficient,
                    "no tariff for (" + origin.postal_code + ", " + destination.postal_code +
                        ", " + *size_class + ")");
    return {best->cost, best->time_hours};
}

Instance apply_tariffs(const Instance& instance, const TariffTable& table) {
    if (instance.parts.empty())
        throw Error(ErrorCode::Domain, "cannot quote deliveries for an instance without parts");

    // One parcel bounds every part; inter-facility and supplier deliveries are
    // quoted per location pair, not per part.
    Parcel bounding;
    for (const Part& p : instance.parts) {
        bounding.width_mm = std::max(bounding.width_mm, p.width_mm);
        bounding.height_mm = std::max(bounding.height_mm, p.height_mm);
        bounding.depth_mm = std::max(bounding.depth_mm, p.depth_mm);
    }

    Instance out = instance;
    for (const Location& a : out.locations) {
        for (const Location& b : out.locations) {
            PairKey key{a.id, b.id};
            bool have_cost = out.economics.delivery_cost.count(key) > 0;
            bool have_time = out.economics.delivery_time_hours.count(key) > 0;
            if (have_cost && have_time) continue;
            DeliveryQuote q = delivery_quote(a, b, bounding, table);
            if (!have_cost) out.economics.delivery_cost[key] = q.cost;
            if (!have_time) out.economics.delivery_time_hours[key] = q.time_hours;
        }
    }

    for (Supplier& sup : out.suppliers) {
        if (sup.location.empty()) continue;
        const Location* origin = out.find_location(sup.location);
        for (const Location& dest : out.locations) {
            bool have_cost = sup.delivery_cost.count(dest.id) > 0;
            bool have_time = sup.delivery_time_hours.count(dest.id) > 0;
            if (have_cost && have_time) continue;
            DeliveryQuote q = delivery_quote(*origin, dest, bounding, table);
            if (!have_cost) sup.delivery_cost[dest.id] = q.cost;
            if (!have_time) sup.delivery_time_hours[dest.id] = q.time_hours;
        }
    }
    return out;
}

} // namespace amsc
