#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "amsc/model.hpp"

namespace amsc {

// Seeded stream with a pinned algorithm so generated scenarios survive
// platform and library changes: mt19937_64 for bits, 53-bit uniforms
// ((x >> 11) * 2^-53), Marsaglia polar for normals with the spare discarded.
// Identifier: "mt19937_64/u53/polar-v1".
inline constexpr const char* kRngAlgorithm = "mt19937_64/u53/polar-v1";

class SeededRng {
public:
    explicit SeededRng(uint64_t seed) : gen_(seed) {}

    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // index into [0, n)
    size_t uniform_index(size_t n) {
        size_t i = static_cast<size_t>(uniform01() * static_cast<double>(n));
        return i >= n ? n - 1 : i;
    }

    double normal(double mean, double stddev);

private:
    std::mt19937_64 gen_;
};

struct PartDemandModel {
    std::string part;
    double mean_quantity = 0.0;
    double stddev_quantity = 0.0; // population
    std::map<std::string, double> client_weights; // sums to 1
};

struct DemandDistribution {
    std::vector<PartDemandModel> parts; // sorted by part id
};

// Per-part mean and population standard deviation of order quantities; client
// weights proportional to each client's order count for that part.
DemandDistribution fit_demand_distribution(const std::vector<OrderLine>& orders);

// `count` synthetic order lines. Each line draws a part uniformly over the
// fitted parts, a client by weight over the provided list (renormalized;
// uniform when the list carries no fitted weight), and a quantity from the
// part's normal distribution rounded half-up and clamped to at least 1.
std::vector<OrderLine> generate_orders(const DemandDistribution& dist, int count, uint64_t seed,
                                       const std::vector<Location>& clients);

} // namespace amsc
