#include "amsc/model.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace amsc {

using nlohmann::json;

const Location* Instance::find_location(const std::string& id) const {
    for (const auto& l : locations)
        if (l.id == id) return &l;
    return nullptr;
}

const Part* Instance::find_part(const std::string& id) const {
    for (const auto& p : parts)
        if (p.id == id) return &p;
    return nullptr;
}

const Supplier* Instance::find_supplier(const std::string& id) const {
    for (const auto& s : suppliers)
        if (s.id == id) return &s;
    return nullptr;
}

namespace {

double require_number(const json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw Error(ErrorCode::Parse, ctx + ": missing or non-numeric field '" + key + "'");
    return j.at(key).get<double>();
}

std::string require_string(const json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key) || !j.at(key).is_string())
        throw Error(ErrorCode::Parse, ctx + ": missing or non-string field '" + key + "'");
    return j.at(key).get<std::string>();
}

void check_location_ref(const Instance& inst, const std::string& id, const std::string& ctx) {
    if (!inst.find_location(id))
        throw Error(ErrorCode::Reference, ctx + ": unknown location '" + id + "'");
}

// Scalar-or-map field: a bare number applies to every location.
std::map<std::string, double> read_per_facility(const json& j, const std::string& key,
                                                const Instance& inst, const std::string& ctx) {
    std::map<std::string, double> out;
    if (!j.contains(key))
        throw Error(ErrorCode::Parse, ctx + ": missing field '" + key + "'");
    const json& v = j.at(key);
    if (v.is_number()) {
        for (const auto& loc : inst.locations) out[loc.id] = v.get<double>();
    } else if (v.is_object()) {
        for (auto it = v.begin(); it != v.end(); ++it) {
            check_location_ref(inst, it.key(), ctx + "." + key);
            out[it.key()] = it.value().get<double>();
        }
    } else {
        throw Error(ErrorCode::Parse, ctx + ": field '" + key + "' must be a number or an object");
    }
    return out;
}

std::map<std::string, double> read_string_map(const json& v) {
    std::map<std::string, double> out;
    for (auto it = v.begin(); it != v.end(); ++it)
        out[it.key()] = it.value().get<double>();
    return out;
}

std::map<PairKey, double> read_pair_map(const json& v, const Instance& inst, const std::string& ctx) {
    std::map<PairKey, double> out;
    for (auto from = v.begin(); from != v.end(); ++from) {
        check_location_ref(inst, from.key(), ctx);
        for (auto to = from.value().begin(); to != from.value().end(); ++to) {
            check_location_ref(inst, to.key(), ctx);
            out[{from.key(), to.key()}] = to.value().get<double>();
        }
    }
    return out;
}

json pair_map_to_json(const std::map<PairKey, double>& m) {
    json out = json::object();
    for (const auto& [key, value] : m) out[key.first][key.second] = value;
    return out;
}

// Collapse a per-facility map back to a scalar when it covers every location
// with one value; keeps generated files compact.
json per_facility_to_json(const std::map<std::string, double>& m, const Instance& inst) {
    if (!inst.locations.empty() && m.size() == inst.locations.size()) {
        bool uniform = true;
        double v0 = m.begin()->second;
        for (const auto& loc : inst.locations) {
            auto it = m.find(loc.id);
            if (it == m.end() || it->second != v0) { uniform = false; break; }
        }
        if (uniform) return json(v0);
    }
    json out = json::object();
    for (const auto& [k, v] : m) out[k] = v;
    return out;
}

} // namespace

Instance parse_instance(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("instance: ") + e.what());
    }
    if (!root.is_object())
        throw Error(ErrorCode::Parse, "instance: top level must be an object");

    Instance inst;
    try {
        for (const json& jl : root.value("locations", json::array())) {
            Location loc;
            loc.id = require_string(jl, "id", "locations");
            loc.label = jl.value("label", loc.id);
            loc.latitude = require_number(jl, "latitude", "location " + loc.id);
            loc.longitude = require_number(jl, "longitude", "location " + loc.id);
            loc.postal_code = jl.value("postal_code", std::string());
            inst.locations.push_back(std::move(loc));
        }

        for (const json& jp : root.value("parts", json::array())) {
            Part part;
            part.id = require_string(jp, "id", "parts");
            const std::string ctx = "part " + part.id;
            part.width_mm = require_number(jp, "width_mm", ctx);
            part.height_mm = require_number(jp, "height_mm", ctx);
            part.depth_mm = require_number(jp, "depth_mm", ctx);
            part.print_time_hours = read_per_facility(jp, "print_time_hours", inst, ctx);
            part.print_unit_cost = read_per_facility(jp, "print_unit_cost", inst, ctx);
            part.internal_order_cost = read_per_facility(jp, "internal_order_cost", inst, ctx);
            part.internal_order_time_hours =
                read_per_facility(jp, "internal_order_time_hours", inst, ctx);
            inst.parts.push_back(std::move(part));
        }

        for (const json& js : root.value("suppliers", json::array())) {
            Supplier sup;
            sup.id = require_string(js, "id", "suppliers");
            const std::string ctx = "supplier " + sup.id;
            sup.location = js.value("location", std::string());
            if (!sup.location.empty()) check_location_ref(inst, sup.location, ctx);
            auto read_part_keyed = [&](const char* key) {
                if (!js.contains(key)) return std::map<std::string, double>{};
                for (auto it = js.at(key).begin(); it != js.at(key).end(); ++it) {
                    if (!inst.find_part(it.key()))
                        throw Error(ErrorCode::Reference, ctx + "." + key + ": unknown part '" +
                                                              it.key() + "'");
                }
                return read_string_map(js.at(key));
            };
            auto read_loc_keyed = [&](const char* key) {
                if (!js.contains(key)) return std::map<std::string, double>{};
                for (auto it = js.at(key).begin(); it != js.at(key).end(); ++it)
                    check_location_ref(inst, it.key(), ctx + "." + std::string(key));
                return read_string_map(js.at(key));
            };
            sup.price = read_part_keyed("price");
            sup.order_time_hours = read_part_keyed("order_time_hours");
            sup.delivery_cost = read_loc_keyed("delivery_cost");
            sup.delivery_time_hours = read_loc_keyed("delivery_time_hours");
            inst.suppliers.push_back(std::move(sup));
        }

        for (const json& jo : root.value("orders", json::array())) {
            OrderLine line;
            line.client_location = require_string(jo, "client", "orders");
            line.part = require_string(jo, "part", "orders");
            if (!jo.contains("quantity") || !jo.at("quantity").is_number_integer())
                throw Error(ErrorCode::Parse, "orders: quantity must be an integer");
            line.quantity = jo.at("quantity").get<long long>();
            check_location_ref(inst, line.client_location, "orders.client");
            if (!inst.find_part(line.part))
                throw Error(ErrorCode::Reference, "orders.part: unknown part '" + line.part + "'");
            inst.orders.push_back(std::move(line));
        }

        if (root.contains("economics")) {
            const json& je = root.at("economics");
            EconomicParams& e = inst.economics;
            e.facility_fixed_cost = require_number(je, "facility_fixed_cost", "economics");
            e.printer_fixed_cost = require_number(je, "printer_fixed_cost", "economics");
            e.printer_capacity_hours = require_number(je, "printer_capacity_hours", "economics");
            e.max_printers = static_cast<int>(require_number(je, "max_printers", "economics"));
            if (je.contains("delivery_cost"))
                e.delivery_cost = read_pair_map(je.at("delivery_cost"), inst, "economics.delivery_cost");
            if (je.contains("delivery_time_hours"))
                e.delivery_time_hours =
                    read_pair_map(je.at("delivery_time_hours"), inst, "economics.delivery_time_hours");
        }

        if (root.contains("matrix")) {
            InlineMatrix m;
            const json& jm = root.at("matrix");
            if (jm.contains("distance_m"))
                m.distance_m = read_pair_map(jm.at("distance_m"), inst, "matrix.distance_m");
            if (jm.contains("travel_time_s"))
                m.travel_time_s = read_pair_map(jm.at("travel_time_s"), inst, "matrix.travel_time_s");
            inst.matrix = std::move(m);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("instance: ") + e.what());
    }
    return inst;
}

Instance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open instance file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_instance(buf.str());
}

std::string serialize_instance(const Instance& inst) {
    json root;
    root["locations"] = json::array();
    for (const auto& loc : inst.locations) {
        json jl;
        jl["id"] = loc.id;
        jl["label"] = loc.label;
        jl["latitude"] = loc.latitude;
        jl["longitude"] = loc.longitude;
        if (!loc.postal_code.empty()) jl["postal_code"] = loc.postal_code;
        root["locations"].push_back(jl);
    }
    root["parts"] = json::array();
    for (const auto& part : inst.parts) {
        json jp;
        jp["id"] = part.id;
        jp["width_mm"] = part.width_mm;
        jp["height_mm"] = part.height_mm;
        jp["depth_mm"] = part.depth_mm;
        jp["print_time_hours"] = per_facility_to_json(part.print_time_hours, inst);
        jp["print_unit_cost"] = per_facility_to_json(part.print_unit_cost, inst);
        jp["internal_order_cost"] = per_facility_to_json(part.internal_order_cost, inst);
        jp["internal_order_time_hours"] =
            per_facility_to_json(part.internal_order_time_hours, inst);
        root["parts"].push_back(jp);
    }
    root["suppliers"] = json::array();
    for (const auto& sup : inst.suppliers) {
        json js;
        js["id"] = sup.id;
        if (!sup.location.empty()) js["location"] = sup.location;
        js["price"] = sup.price;
        js["order_time_hours"] = sup.order_time_hours;
        js["delivery_cost"] = sup.delivery_cost;
        js["delivery_time_hours"] = sup.delivery_time_hours;
        root["suppliers"].push_back(js);
    }
    root["orders"] = json::array();
    for (const auto& line : inst.orders) {
        json jo;
        jo["client"] = line.client_location;
        jo["part"] = line.part;
        jo["quantity"] = line.quantity;
        root["orders"].push_back(jo);
    }
    {
        json je;
        je["facility_fixed_cost"] = inst.economics.facility_fixed_cost;
        je["printer_fixed_cost"] = inst.economics.printer_fixed_cost;
        je["printer_capacity_hours"] = inst.economics.printer_capacity_hours;
        je["max_printers"] = inst.economics.max_printers;
        je["delivery_cost"] = pair_map_to_json(inst.economics.delivery_cost);
        je["delivery_time_hours"] = pair_map_to_json(inst.economics.delivery_time_hours);
        root["economics"] = je;
    }
    if (inst.matrix) {
        json jm;
        jm["distance_m"] = pair_map_to_json(inst.matrix->distance_m);
        jm["travel_time_s"] = pair_map_to_json(inst.matrix->travel_time_s);
        root["matrix"] = jm;
    }
    return root.dump(2) + "\n";
}

void save_instance(const Instance& inst, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
    out << serialize_instance(inst);
    if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

namespace {

void check_nonneg_map(const std::map<std::string, double>& m, const std::string& path,
                      const std::string& code, std::vector<Violation>& out) {
    for (const auto& [k, v] : m) {
        if (v < 0.0)
            out.push_back({code, path + "." + k, "value must be >= 0"});
    }
}

} // namespace

std::vector<Violation> validate_instance(const Instance& inst) {
    std::vector<Violation> v;

    std::map<std::string, int> seen;
    for (size_t i = 0; i < inst.locations.size(); ++i) {
        const Location& loc = inst.locations[i];
        const std::string path = "locations[" + std::to_string(i) + "]";
        if (++seen[loc.id] > 1)
            v.push_back({"duplicate_id", path + ".id", "duplicate location id '" + loc.id + "'"});
        if (loc.latitude < -90.0 || loc.latitude > 90.0)
            v.push_back({"latitude_range", path + ".latitude", "latitude outside [-90, 90]"});
        if (loc.longitude < -180.0 || loc.longitude > 180.0)
            v.push_back({"longitude_range", path + ".longitude", "longitude outside [-180, 180]"});
    }

    seen.clear();
    for (size_t i = 0; i < inst.parts.size(); ++i) {
        const Part& p = inst.parts[i];
        const std::string path = "parts[" + std::to_string(i) + "]";
        if (++seen[p.id] > 1)
            v.push_back({"duplicate_id", path + ".id", "duplicate part id '" + p.id + "'"});
        if (p.width_mm <= 0.0)
            v.push_back({"nonpositive_dimension", path + ".width_mm", "dimension must be > 0"});
        if (p.height_mm <= 0.0)
            v.push_back({"nonpositive_dimension", path + ".height_mm", "dimension must be > 0"});
        if (p.depth_mm <= 0.0)
            v.push_back({"nonpositive_dimension", path + ".depth_mm", "dimension must be > 0"});
        check_nonneg_map(p.print_time_hours, path + ".print_time_hours", "negative_time", v);
        check_nonneg_map(p.print_unit_cost, path + ".print_unit_cost", "negative_cost", v);
        check_nonneg_map(p.internal_order_cost, path + ".internal_order_cost", "negative_cost", v);
        check_nonneg_map(p.internal_order_time_hours, path + ".internal_order_time_hours",
                         "negative_time", v);
    }

    seen.clear();
    for (size_t i = 0; i < inst.suppliers.size(); ++i) {
        const Supplier& s = inst.suppliers[i];
        const std::string path = "suppliers[" + std::to_string(i) + "]";
        if (++seen[s.id] > 1)
            v.push_back({"duplicate_id", path + ".id", "duplicate supplier id '" + s.id + "'"});
        check_nonneg_map(s.price, path + ".price", "negative_cost", v);
        check_nonneg_map(s.order_time_hours, path + ".order_time_hours", "negative_time", v);
        check_nonneg_map(s.delivery_cost, path + ".delivery_cost", "negative_cost", v);
        check_nonneg_map(s.delivery_time_hours, path + ".delivery_time_hours", "negative_time", v);
        if (!s.location.empty() && !inst.find_location(s.location))
            v.push_back({"unknown_reference", path + ".location",
                         "unknown location '" + s.location + "'"});
    }

    for (size_t i = 0; i < inst.orders.size(); ++i) {
        const OrderLine& o = inst.orders[i];
        const std::string path = "orders[" + std::to_string(i) + "]";
        if (o.quantity <= 0)
            v.push_back({"nonpositive_quantity", path + ".quantity", "quantity must be > 0"});
        if (!inst.find_location(o.client_location))
            v.push_back({"unknown_reference", path + ".client",
                         "unknown location '" + o.client_location + "'"});
        if (!inst.find_part(o.part))
            v.push_back({"unknown_reference", path + ".part", "unknown part '" + o.part + "'"});
    }

    const EconomicParams& e = inst.economics;
    if (e.facility_fixed_cost < 0.0)
        v.push_back({"negative_cost", "economics.facility_fixed_cost", "must be >= 0"});
    if (e.printer_fixed_cost < 0.0)
        v.push_back({"negative_cost", "economics.printer_fixed_cost", "must be >= 0"});
    if (e.printer_capacity_hours <= 0.0)
        v.push_back({"nonpositive_capacity", "economics.printer_capacity_hours", "must be > 0"});
    if (e.max_printers < 1)
        v.push_back({"max_printers_range", "economics.max_printers", "must be >= 1"});
    for (const auto& [key, value] : e.delivery_cost)
        if (value < 0.0)
            v.push_back({"negative_cost",
                         "economics.delivery_cost." + key.first + "." + key.second,
                         "must be >= 0"});
    for (const auto& [key, value] : e.delivery_time_hours)
        if (value < 0.0)
            v.push_back({"negative_time",
                         "economics.delivery_time_hours." + key.first + "." + key.second,
                         "must be >= 0"});

    if (inst.matrix) {
        for (const auto& [key, value] : inst.matrix->distance_m) {
            if (value < 0.0)
                v.push_back({"negative_distance",
                             "matrix.distance_m." + key.first + "." + key.second, "must be >= 0"});
            if (key.first == key.second && value != 0.0)
                v.push_back({"nonzero_diagonal",
                             "matrix.distance_m." + key.first + "." + key.second,
                             "diagonal must be 0"});
        }
        for (const auto& [key, value] : inst.matrix->travel_time_s) {
            if (value < 0.0)
                v.push_back({"negative_time",
                             "matrix.travel_time_s." + key.first + "." + key.second,
                             "must be >= 0"});
            if (key.first == key.second && value != 0.0)
                v.push_back({"nonzero_diagonal",
                             "matrix.travel_time_s." + key.first + "." + key.second,
                             "diagonal must be 0"});
        }
    }

    return v;
}

} // namespace amsc
