#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "amsc/common.hpp"
#include "amsc/model.hpp"

namespace amsc {

// Raw pairwise road-trip data: distance in meters, travel time in seconds.
// Complete over the location set, diagonal zero.
struct RawTravelMatrix {
    std::vector<std::string> location_ids; // sorted
    std::map<PairKey, double> distance_m;
    std::map<PairKey, double> travel_time_s;

    double distance(const std::string& from, const std::string& to) const;
    double travel_time(const std::string& from, const std::string& to) const;
};

struct NormalizationWeights {
    double time_weight = 0.7;
    double distance_weight = 0.3;
};

// Weights must be complementary (sum to 1 within 1e-12) and each in [0,1].
void check_weights(const NormalizationWeights& w);

struct CostMatrix {
    std::vector<std::string> location_ids; // sorted
    std::map<PairKey, double> total_cost;  // unitless, in [0,1]
    double max_distance = 0.0;             // meters
    double max_time = 0.0;                 // seconds
    NormalizationWeights weights;

    double cost(const std::string& from, const std::string& to) const;
};

// Unity-based normalization of one cell:
//   distance_weight * (distance / max_distance) + time_weight * (time / max_time)
double normalized_cost(double distance_m, double travel_time_s, double max_distance_m,
                       double max_time_s, const NormalizationWeights& weights);

// Maxima are taken over the off-diagonal entries. A matrix whose distances and
// times are all zero is degenerate unless it holds a single location.
CostMatrix build_cost_matrix(const RawTravelMatrix& raw, const NormalizationWeights& weights);

// Travel-data source. Implementations must return a complete matrix or throw;
// values are never imputed.
class MatrixProvider {
public:
    virtual ~MatrixProvider() = default;
    virtual RawTravelMatrix fetch(const std::vector<Location>& locations) = 0;
};

RawTravelMatrix fetch_matrix(MatrixProvider& provider, const std::vector<Location>& locations);

// Inline matrix carried by the instance file.
RawTravelMatrix matrix_from_inline(const InlineMatrix& inline_matrix,
                                   const std::vector<Location>& locations);

// CSV file with header origin,destination,distance_m,travel_time_s and one row
// per ordered pair. Diagonal rows may be omitted (they are zero).
class OfflineCsvMatrixProvider : public MatrixProvider {
public:
    explicit OfflineCsvMatrixProvider(std::string csv_path);
    RawTravelMatrix fetch(const std::vector<Location>& locations) override;

private:
    std::string path_;
};

struct TravelSample {
    double distance_m = 0.0;
    double travel_time_s = 0.0;
};

// One remote lookup: a single origin against a batch of destinations.
class MatrixTransport {
public:
    virtual ~MatrixTransport() = default;
    virtual std::vector<TravelSample> query(const Location& origin,
                                            const std::vector<Location>& destinations) = 0;
};

// Remote provider with a per-pair disk cache. Pairs already cached are never
// re-queried; fresh responses are written one file per (origin, destination).
class RemoteMatrixProvider : public MatrixProvider {
public:
    RemoteMatrixProvider(std::shared_ptr<MatrixTransport> transport, std::string cache_dir);
    RawTravelMatrix fetch(const std::vector<Location>& locations) override;

private:
    std::shared_ptr<MatrixTransport> transport_;
    std::string cache_dir_;
};

// HTTP transport for the generic remote matrix service:
//   GET {base_url}/v1/matrix?origin=<lat>,<lng>&destinations=<lat>,<lng>|...
// with header "X-Api-Key: $<api_key_env>" when the variable is set. The
// response is {"results":[{"distance_m":..,"travel_time_s":..},..]} in
// destination order.
std::shared_ptr<MatrixTransport> make_http_matrix_transport(const std::string& base_url,
                                                            const std::string& api_key_env);

} // namespace amsc
