#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace polarq {

// Binary entropy in bits. Defined as 0 at the endpoints by continuity.
inline double binary_entropy(double x) {
    if (x <= 0.0 || x >= 1.0)
        return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

struct MassPoint {
    double p;  // probability mass
    double x;  // BSC crossover, in [0, 1/2] once canonical
};

// A discrete BMS channel as a finite mixture of BSCs: the input passes
// through BSC(x_i) with probability p_i and the receiver learns which
// component was used. Canonical form: masses positive and summing to 1,
// crossovers folded into [0, 1/2], strictly increasing, no two entries
// closer than the dedup tolerance.
class MassDistribution {
public:
    // Positions closer than kDedupTolerance relative are treated as the
    // same crossover; masses smaller than kMassFloor of the total are
    // dropped outright.
    static constexpr double kDedupTolerance = 1e-12;
    static constexpr double kMassFloor = 1e-300;

    MassDistribution() : entries_{{1.0, 0.0}} {}

    // Folds x > 1/2 onto 1-x, sorts, merges entries within the relative
    // dedup tolerance at their mass-weighted mean, drops negligible masses
    // and renormalizes. Throws std::invalid_argument on an empty or
    // zero-mass input, a negative mass, or a crossover outside [0, 1].
    static MassDistribution canonicalize(std::vector<MassPoint> raw);

    static MassDistribution from_bsc(double crossover);
    static MassDistribution from_bec(double erasure);

    // Trusted constructor for callers that maintain canonical order
    // themselves (the quantizers); renormalizes the total mass.
    static MassDistribution from_canonical_entries(std::vector<MassPoint> entries);

    const std::vector<MassPoint>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    // Z(W) = sum_i p_i * 2 sqrt(x_i (1 - x_i))
    double bhattacharyya() const;
    // I(W) = 1 - sum_i p_i h(x_i)
    double mutual_info() const;
    // E[x] = sum_i p_i x_i
    double mean_crossover() const;

    bool operator==(const MassDistribution& other) const {
        if (entries_.size() != other.entries_.size()) return false;
        for (std::size_t i = 0; i < entries_.size(); ++i)
            if (entries_[i].p != other.entries_[i].p || entries_[i].x != other.entries_[i].x)
                return false;
        return true;
    }

private:
    explicit MassDistribution(std::vector<MassPoint> entries) : entries_(std::move(entries)) {}

    std::vector<MassPoint> entries_;
};

// The increasing concave function guiding the greedy quantizers, normalized
// so f(0) = 0 and f(1/2) = 1.
class Kernel {
public:
    enum class Family { bhattacharyya, entropy };

    static Kernel bhattacharyya() { return Kernel(Family::bhattacharyya); }
    static Kernel entropy() { return Kernel(Family::entropy); }
    static Kernel from_family(Family f) { return Kernel(f); }

    Family family() const { return family_; }

    std::string_view name() const {
        return family_ == Family::bhattacharyya ? "bhattacharyya" : "entropy";
    }

    double operator()(double x) const {
        if (family_ == Family::bhattacharyya)
            return 2.0 * std::sqrt(x * (1.0 - x));
        return binary_entropy(x);
    }

    // f' and f'' for diagnostics; defined on (0, 1/2), unbounded near 0.
    double deriv(double x) const {
        if (family_ == Family::bhattacharyya)
            return (1.0 - 2.0 * x) / std::sqrt(x * (1.0 - x));
        return std::log2((1.0 - x) / x);
    }

    double second_deriv(double x) const {
        double u = x * (1.0 - x);
        if (family_ == Family::bhattacharyya) {
            double s = std::sqrt(u);
            double d = 1.0 - 2.0 * x;
            return -2.0 / s - d * d / (2.0 * u * s);
        }
        return -1.0 / (u * std::numbers::ln2);
    }

private:
    explicit Kernel(Family f) : family_(f) {}
    Family family_;
};

// Crossover p of the BSC with the requested capacity, by bisection of
// 1 - h(p) on [0, 1/2] to absolute tolerance 1e-10.
double bsc_crossover_for_capacity(double capacity);

// Parses "bsc:<p>", "bec:<e>" or "file:<path>" (CSV with header "p,x").
// Throws std::invalid_argument on malformed specs.
MassDistribution parse_channel_spec(const std::string& spec);

}  // namespace polarq
