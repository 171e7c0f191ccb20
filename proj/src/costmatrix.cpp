#include "amsc/costmatrix.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace amsc {

namespace fs = std::filesystem;

double RawTravelMatrix::distance(const std::string& from, const std::string& to) const {
    auto it = distance_m.find({from, to});
    if (it == distance_m.end())
        throw Error(ErrorCode::Reference, "no distance entry for (" + from + ", " + to + ")");
    return it->second;
}

double RawTravelMatrix::travel_time(const std::string& from, const std::string& to) const {
    auto it = travel_time_s.find({from, to});
    if (it == travel_time_s.end())
        throw Error(ErrorCode::Reference, "no travel-time entry for (" + from + ", " + to + ")");
    return it->second;
}

double CostMatrix::cost(const std::string& from, const std::string& to) const {
    auto it = total_cost.find({from, to});
    if (it == total_cost.end())
        throw Error(ErrorCode::Reference, "no cost entry for (" + from + ", " + to + ")");
    return it->second;
}

void check_weights(const NormalizationWeights& w) {
    if (w.time_weight < 0.0 || w.time_weight > 1.0 || w.distance_weight < 0.0 ||
        w.distance_weight > 1.0)
        throw Error(ErrorCode::Domain, "normalization weights must lie in [0, 1]");
    if (std::fabs(w.time_weight + w.distance_weight - 1.0) > 1e-12)
        throw Error(ErrorCode::Domain, "normalization weights must sum to 1");
}

double normalized_cost(double distance_m, double travel_time_s, double max_distance_m,
                       double max_time_s, const NormalizationWeights& weights) {
    check_weights(weights);
    if (max_distance_m <= 0.0 || max_time_s <= 0.0)
        throw Error(ErrorCode::Domain, "normalization maxima must be positive");
    if (distance_m < 0.0 || distance_m > max_distance_m)
        throw Error(ErrorCode::Domain, "distance outside [0, max_distance]");
    if (travel_time_s < 0.0 || travel_time_s > max_time_s)
        throw Error(ErrorCode::Domain, "travel time outside [0, max_time]");
    return weights.distance_weight * (distance_m / max_distance_m) +
           weights.time_weight * (travel_time_s / max_time_s);
}

CostMatrix build_cost_matrix(const RawTravelMatrix& raw, const NormalizationWeights& weights) {
    check_weights(weights);

    CostMatrix out;
    out.location_ids = raw.location_ids;
    out.weights = weights;

    const auto& ids = raw.location_ids;
    for (const auto& i : ids) {
        for (const auto& j : ids) {
            if (i == j) continue;
            double d = raw.distance(i, j);
            double t = raw.travel_time(i, j);
            if (d < 0.0 || t < 0.0)
                throw Error(ErrorCode::Domain,
                            "negative travel entry for (" + i + ", " + j + ")");
            out.max_distance = std::max(out.max_distance, d);
            out.max_time = std::max(out.max_time, t);
        }
    }

    if (ids.size() > 1 && out.max_distance == 0.0 && out.max_time == 0.0)
        throw Error(ErrorCode::Degenerate,
                    "all distances and travel times are zero over " +
                        std::to_string(ids.size()) + " locations");

    for (const auto& i : ids) {
        for (const auto& j : ids) {
            if (i == j) {
                out.total_cost[{i, j}] = 0.0;
                continue;
            }
            // A term whose maximum is zero contributes nothing (its entries
            // are all zero as well).
            double dterm = out.max_distance > 0.0 ? raw.distance(i, j) / out.max_distance : 0.0;
            double tterm = out.max_time > 0.0 ? raw.travel_time(i, j) / out.max_time : 0.0;
            out.total_cost[{i, j}] = weights.distance_weight * dterm + weights.time_weight * tterm;
        }
    }
    return out;
}

RawTravelMatrix fetch_matrix(MatrixProvider& provider, const std::vector<Location>& locations) {
    RawTravelMatrix m = provider.fetch(locations);
    // Completeness is part of the provider contract; verify it here so every
    // provider is held to the same rule.
    for (const auto& a : locations) {
        for (const auto& b : locations) {
            m.distance(a.id, b.id);
            m.travel_time(a.id, b.id);
        }
    }
    return m;
}

namespace {

std::vector<std::string> sorted_ids(const std::vector<Location>& locations) {
    std::vector<std::string> ids;
    ids.reserve(locations.size());
    for (const auto& l : locations) ids.push_back(l.id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<std::string> split_csv_line(const std::string& line) {
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

} // namespace

RawTravelMatrix matrix_from_inline(const InlineMatrix& inline_matrix,
                                   const std::vector<Location>& locations) {
    RawTravelMatrix m;
    m.location_ids = sorted_ids(locations);
    m.distance_m = inline_matrix.distance_m;
    m.travel_time_s = inline_matrix.travel_time_s;
    for (const auto& id : m.location_ids) {
        m.distance_m.try_emplace({id, id}, 0.0);
        m.travel_time_s.try_emplace({id, id}, 0.0);
    }
    for (const auto& i : m.location_ids) {
        for (const auto& j : m.location_ids) {
            if (!m.distance_m.count({i, j}) || !m.travel_time_s.count({i, j}))
                throw Error(ErrorCode::Reference,
                            "inline matrix is missing pair (" + i + ", " + j + ")");
        }
    }
    return m;
}

OfflineCsvMatrixProvider::OfflineCsvMatrixProvider(std::string csv_path)
    : path_(std::move(csv_path)) {}

RawTravelMatrix OfflineCsvMatrixProvider::fetch(const std::vector<Location>& locations) {
    std::ifstream in(path_);
    if (!in) throw Error(ErrorCode::Io, "cannot open matrix CSV '" + path_ + "'");

    RawTravelMatrix m;
    m.location_ids = sorted_ids(locations);

    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorCode::Parse, "matrix CSV '" + path_ + "' is empty");
    if (split_csv_line(line) !=
        std::vector<std::string>{"origin", "destination", "distance_m", "travel_time_s"})
        throw Error(ErrorCode::Parse,
                    "matrix CSV header must be origin,destination,distance_m,travel_time_s");

    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 4)
            throw Error(ErrorCode::Parse, path_ + ":" + std::to_string(lineno) +
                                              ": expected 4 fields");
        try {
            m.distance_m[{fields[0], fields[1]}] = std::stod(fields[2]);
            m.travel_time_s[{fields[0], fields[1]}] = std::stod(fields[3]);
        } catch (const std::exception&) {
            throw Error(ErrorCode::Parse, path_ + ":" + std::to_string(lineno) +
                                              ": non-numeric distance or time");
        }
    }

    for (const auto& id : m.location_ids) {
        m.distance_m.try_emplace({id, id}, 0.0);
        m.travel_time_s.try_emplace({id, id}, 0.0);
    }
    for (const auto& i : m.location_ids) {
        for (const auto& j : m.location_ids) {
            if (!m.distance_m.count({i, j}))
                throw Error(ErrorCode::Provider,
                            "matrix CSV '" + path_ + "' has no row for (" + i + ", " + j + ")");
        }
    }
    return m;
}

RemoteMatrixProvider::RemoteMatrixProvider(std::shared_ptr<MatrixTransport> transport,
                                           std::string cache_dir)
    : transport_(std::move(transport)), cache_dir_(std::move(cache_dir)) {}

namespace {

std::string cache_file(const std::string& dir, const std::string& a, const std::string& b) {
    return (fs::path(dir) / (a + "__" + b + ".json")).string();
}

bool read_cached(const std::string& file, TravelSample& out) {
    std::ifstream in(file);
    if (!in) return false;
    try {
        nlohmann::json j = nlohmann::json::parse(in);
        out.distance_m = j.at("distance_m").get<double>();
        out.travel_time_s = j.at("travel_time_s").get<double>();
        return true;
    } catch (const std::exception&) {
        return false; // treat unreadable entries as absent
    }
}

// Atomic per-entry write: temp file then rename.
void write_cached(const std::string& file, const TravelSample& sample) {
    nlohmann::json j;
    j["distance_m"] = sample.distance_m;
    j["travel_time_s"] = sample.travel_time_s;
    const std::string tmp = file + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot write cache entry '" + tmp + "'");
        out << j.dump();
    }
    fs::rename(tmp, file);
}

} // namespace

RawTravelMatrix RemoteMatrixProvider::fetch(const std::vector<Location>& locations) {
    std::error_code ec;
    fs::create_directories(cache_dir_, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create cache directory '" + cache_dir_ + "'");

    RawTravelMatrix m;
    m.location_ids = sorted_ids(locations);

    std::map<std::string, const Location*> by_id;
    for (const auto& l : locations) by_id[l.id] = &l;

    for (const auto& origin_id : m.location_ids) {
        std::vector<const Location*> missing;
        for (const auto& dest_id : m.location_ids) {
            if (origin_id == dest_id) {
                m.distance_m[{origin_id, dest_id}] = 0.0;
                m.travel_time_s[{origin_id, dest_id}] = 0.0;
                continue;
            }
            TravelSample sample;
            if (read_cached(cache_file(cache_dir_, origin_id, dest_id), sample)) {
                m.distance_m[{origin_id, dest_id}] = sample.distance_m;
                m.travel_time_s[{origin_id, dest_id}] = sample.travel_time_s;
            } else {
                missing.push_back(by_id.at(dest_id));
            }
        }
        if (missing.empty()) continue;

        std::vector<Location> batch;
        batch.reserve(missing.size());
        for (const Location* d : missing) batch.push_back(*d);
        std::vector<TravelSample> samples = transport_->query(*by_id.at(origin_id), batch);
        if (samples.size() != batch.size())
            throw Error(ErrorCode::Provider, "matrix transport returned " +
                                                 std::to_string(samples.size()) + " samples for " +
                                                 std::to_string(batch.size()) + " destinations");
        for (size_t k = 0; k < batch.size(); ++k) {
            m.distance_m[{origin_id, batch[k].id}] = samples[k].distance_m;
            m.travel_time_s[{origin_id, batch[k].id}] = samples[k].travel_time_s;
            write_cached(cache_file(cache_dir_, origin_id, batch[k].id), samples[k]);
        }
    }
    return m;
}

namespace {

class HttpMatrixTransport : public MatrixTransport {
public:
    HttpMatrixTransport(std::string base_url, std::string api_key_env)
        : base_url_(std::move(base_url)), api_key_env_(std::move(api_key_env)) {}

    std::vector<TravelSample> query(const Location& origin,
                                    const std::vector<Location>& destinations) override;

private:
    std::string base_url_;
    std::string api_key_env_;
};

} // namespace

std::shared_ptr<MatrixTransport> make_http_matrix_transport(const std::string& base_url,
                                                            const std::string& api_key_env) {
    return std::make_shared<HttpMatrixTransport>(base_url, api_key_env);
}

} // namespace amsc

// The HTTP client lives at the bottom so the heavy header stays out of the
// rest of the translation unit.
#define CPPHTTPLIB_NO_EXCEPTIONS
#include <httplib.h>

namespace amsc {
namespace {

std::vector<TravelSample> HttpMatrixTransport::query(const Location& origin,
                                                     const std::vector<Location>& destinations) {
    std::string host = base_url_;
    std::string prefix;
    // Split "scheme://host[:port]/prefix" into client target and path prefix.
    auto scheme_end = host.find("://");
    size_t path_start = host.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start != std::string::npos) {
        prefix = host.substr(path_start);
        host = host.substr(0, path_start);
        if (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    }

    std::ostringstream target;
    target << prefix << "/v1/matrix?origin=" << origin.latitude << ',' << origin.longitude
           << "&destinations=";
    for (size_t i = 0; i < destinations.size(); ++i) {
        if (i) target << '|';
        target << destinations[i].latitude << ',' << destinations[i].longitude;
    }

    httplib::Client client(host);
    client.set_connection_timeout(10);
    client.set_read_timeout(30);
    httplib::Headers headers;
    if (!api_key_env_.empty()) {
        if (const char* key = std::getenv(api_key_env_.c_str()))
            headers.emplace("X-Api-Key", key);
    }

    auto res = client.Get(target.str(), headers);
    if (!res)
        throw Error(ErrorCode::Provider, "matrix service unreachable at " + base_url_);
    if (res->status != 200)
        throw Error(ErrorCode::Provider,
                    "matrix service returned HTTP " + std::to_string(res->status));

    std::vector<TravelSample> samples;
    try {
        nlohmann::json j = nlohmann::json::parse(res->body);
        for (const auto& item : j.at("results")) {
            TravelSample s;
            s.distance_m = item.at("distance_m").get<double>();
            s.travel_time_s = item.at("travel_time_s").get<double>();
            samples.push_back(s);
        }
    } catch (const std::exception& e) {
        throw Error(ErrorCode::Provider, std::string("malformed matrix response: ") + e.what());
    }
    return samples;
}

} // namespace
} // namespace amsc
