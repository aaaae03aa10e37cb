#include "polarq/transform.hpp"

namespace polarq {

MassDistribution minus_transform(const MassDistribution& w) {
    const auto& e = w.entries();
    const std::size_t m = e.size();
    std::vector<MassPoint> raw;
    raw.reserve(m * (m + 1) / 2);
    for (std::size_t i = 0; i < m; ++i) {
        const double a = e[i].x;
        for (std::size_t j = i; j < m; ++j) {
            const double b = e[j].x;
            const double weight = (i == j) ? e[i].p * e[j].p : 2.0 * e[i].p * e[j].p;
            raw.push_back({weight, a + b - 2.0 * a * b});
        }
    }
    return MassDistribution::canonicalize(std::move(raw));
}

MassDistribution plus_transform(const MassDistribution& w) {
    const auto& e = w.entries();
    const std::size_t m = e.size();
    std::vector<MassPoint> raw;
    raw.reserve(m * (m + 1));
    for (std::size_t i = 0; i < m; ++i) {
        const double a = e[i].x;
        for (std::size_t j = i; j < m; ++j) {
            const double b = e[j].x;
            const double weight = (i == j) ? e[i].p * e[j].p : 2.0 * e[i].p * e[j].p;
            const double q_good = a * b + (1.0 - a) * (1.0 - b);
            const double q_bad = a * (1.0 - b) + b * (1.0 - a);
            // q = 0 only with masses pinned at 0 or 1/2; skip the dead branch.
            if (q_good > 0.0)
                raw.push_back({weight * q_good, a * b / q_good});
            if (q_bad > 0.0)
                raw.push_back({weight * q_bad, a * (1.0 - b) / q_bad});
        }
    }
    return MassDistribution::canonicalize(std::move(raw));
}

std::pair<MassDistribution, MassDistribution> transform_pair(const MassDistribution& w) {
    return {minus_transform(w), plus_transform(w)};
}

}  // namespace polarq
