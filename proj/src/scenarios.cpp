#include "amsc/scenarios.hpp"

#include <algorithm>
#include <cmath>

namespace amsc {

double SeededRng::normal(double mean, double stddev) {
    if (stddev == 0.0) return mean;
    while (true) {
        double u = 2.0 * uniform01() - 1.0;
        double v = 2.0 * uniform01() - 1.0;
        double s = u * u + v * v;
        if (s <= 0.0 || s >= 1.0) continue;
        double mult = std::sqrt(-2.0 * std::log(s) / s);
        return mean + stddev * u * mult; // spare (v * mult) discarded
    }
}

DemandDistribution fit_demand_distribution(const std::vector<OrderLine>& orders) {
    if (orders.empty())
        throw Error(ErrorCode::Domain, "cannot fit a demand distribution to zero orders");

    std::map<std::string, std::vector<const OrderLine*>> by_part;
    for (const OrderLine& line : orders) by_part[line.part].push_back(&line);

    DemandDistribution dist;
    for (const auto& [part, lines] : by_part) {
        PartDemandModel model;
        model.part = part;
        double total = 0.0;
        for (const OrderLine* l : lines) total += static_cast<double>(l->quantity);
        model.mean_quantity = total / static_cast<double>(lines.size());
        double var = 0.0;
        std::map<std::string, double> counts;
        for (const OrderLine* l : lines) {
            double d = static_cast<double>(l->quantity) - model.mean_quantity;
            var += d * d;
            counts[l->client_location] += 1.0;
        }
        model.stddev_quantity = std::sqrt(var / static_cast<double>(lines.size()));
        for (const auto& [client, n] : counts)
            model.client_weights[client] = n / static_cast<double>(lines.size());
        dist.parts.push_back(std::move(model));
    }
    return dist;
}

std::vector<OrderLine> generate_orders(const DemandDistribution& dist, int count, uint64_t seed,
                                       const std::vector<Location>& clients) {
    if (count < 1) throw Error(ErrorCode::Domain, "order count must be at least 1");
    if (clients.empty()) throw Error(ErrorCode::Domain, "client list must not be empty");
    if (dist.parts.empty()) throw Error(ErrorCode::Domain, "demand distribution has no parts");

    // Restrict each part's weights to the provided clients, renormalized; a
    // part with no weight on the list falls back to uniform.
    std::vector<std::vector<double>> cumulative(dist.parts.size());
    for (size_t p = 0; p < dist.parts.size(); ++p) {
        const PartDemandModel& model = dist.parts[p];
        std::vector<double>& cum = cumulative[p];
        cum.resize(clients.size());
        double total = 0.0;
        for (size_t c = 0; c < clients.size(); ++c) {
            auto it = model.client_weights.find(clients[c].id);
            double w = it == model.client_weights.end() ? 0.0 : it->second;
            total += w;
            cum[c] = total;
        }
        if (total <= 0.0) {
            for (size_t c = 0; c < clients.size(); ++c)
                cum[c] = static_cast<double>(c + 1) / static_cast<double>(clients.size());
        } else {
            for (double& x : cum) x /= total;
        }
        cum.back() = 1.0;
    }

    SeededRng rng(seed);
    std::vector<OrderLine> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        size_t part_idx = rng.uniform_index(dist.parts.size());
        const PartDemandModel& model = dist.parts[part_idx];

        double u = rng.uniform01();
        const std::vector<double>& cum = cumulative[part_idx];
        size_t client_idx =
            static_cast<size_t>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
        if (client_idx >= clients.size()) client_idx = clients.size() - 1;

        double draw = rng.normal(model.mean_quantity, model.stddev_quantity);
        long long quantity = static_cast<long long>(std::floor(draw + 0.5)); // half-up
        if (quantity < 1) quantity = 1;

        out.push_back({clients[client_idx].id, model.part, quantity});
    }
    return out;
}

} // namespace amsc
