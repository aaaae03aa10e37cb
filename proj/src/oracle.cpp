#include "polarq/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "polarq/transform.hpp"

namespace polarq::oracle {

BlowupError::BlowupError(int level, std::size_t projected, std::size_t budget)
    : std::runtime_error("exact evolution refused at level " + std::to_string(level) +
                         ": projected " + std::to_string(projected) + " masses exceeds budget " +
                         std::to_string(budget)),
      level_(level),
      projected_(projected) {}

ExplicitChannel::ExplicitChannel(std::vector<double> prob0, std::vector<double> prob1,
                                 std::vector<std::size_t> conjugate)
    : prob0_(std::move(prob0)), prob1_(std::move(prob1)), conjugate_(std::move(conjugate)) {
    if (prob0_.size() != prob1_.size() || prob0_.size() != conjugate_.size())
        throw std::invalid_argument("explicit channel: mismatched row sizes");
}

ExplicitChannel ExplicitChannel::from_mixture(const MassDistribution& w) {
    // Component i becomes the output pair (2i, 2i+1): "BSC i used, bit 0/1".
    const auto& e = w.entries();
    std::vector<double> p0, p1;
    std::vector<std::size_t> conj;
    p0.reserve(2 * e.size());
    p1.reserve(2 * e.size());
    conj.reserve(2 * e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        p0.push_back(e[i].p * (1.0 - e[i].x));
        p1.push_back(e[i].p * e[i].x);
        p0.push_back(e[i].p * e[i].x);
        p1.push_back(e[i].p * (1.0 - e[i].x));
        conj.push_back(2 * i + 1);
        conj.push_back(2 * i);
    }
    return ExplicitChannel(std::move(p0), std::move(p1), std::move(conj));
}

ExplicitChannel ExplicitChannel::bsc(double crossover) {
    if (!(crossover >= 0.0) || !(crossover <= 1.0))
        throw std::invalid_argument("bsc: crossover outside [0, 1]");
    return ExplicitChannel({1.0 - crossover, crossover}, {crossover, 1.0 - crossover}, {1, 0});
}

ExplicitChannel ExplicitChannel::bec(double erasure) {
    if (!(erasure >= 0.0) || !(erasure <= 1.0))
        throw std::invalid_argument("bec: erasure probability outside [0, 1]");
    return ExplicitChannel({1.0 - erasure, erasure, 0.0}, {0.0, erasure, 1.0 - erasure}, {2, 1, 0});
}

double ExplicitChannel::bhattacharyya() const {
    long double z = 0.0L;
    for (std::size_t y = 0; y < prob0_.size(); ++y)
        z += std::sqrt(static_cast<long double>(prob0_[y]) * prob1_[y]);
    return static_cast<double>(z);
}

double ExplicitChannel::mutual_info() const {
    long double info = 0.0L;
    for (std::size_t y = 0; y < prob0_.size(); ++y) {
        const long double mean = 0.5L * (prob0_[y] + prob1_[y]);
        for (const double px : {prob0_[y], prob1_[y]}) {
            if (px > 0.0)
                info += 0.5L * px * std::log2(static_cast<long double>(px) / mean);
        }
    }
    return static_cast<double>(info);
}

bool ExplicitChannel::check_valid(double tol) const {
    long double sum0 = 0.0L, sum1 = 0.0L;
    for (std::size_t y = 0; y < prob0_.size(); ++y) {
        if (prob0_[y] < -tol || prob1_[y] < -tol)
            return false;
        sum0 += prob0_[y];
        sum1 += prob1_[y];
        const std::size_t c = conjugate_[y];
        if (c >= prob0_.size() || conjugate_[c] != y)
            return false;
        if (std::abs(prob0_[y] - prob1_[c]) > tol)
            return false;
    }
    return std::abs(static_cast<double>(sum0) - 1.0) <= tol &&
           std::abs(static_cast<double>(sum1) - 1.0) <= tol;
}

namespace {

// Admits three levels from a BSC root (2 -> 8 -> 128 outputs) and two
// levels from mixtures of up to four BSCs.
constexpr std::size_t kRawAlphabetCap = 128;

}  // namespace

ExplicitChannel raw_minus(const ExplicitChannel& p) {
    const std::size_t n = p.output_count();
    if (n > kRawAlphabetCap)
        throw BlowupError(0, n * n, kRawAlphabetCap * kRawAlphabetCap);
    std::vector<double> p0(n * n), p1(n * n);
    std::vector<std::size_t> conj(n * n);
    for (std::size_t y1 = 0; y1 < n; ++y1) {
        for (std::size_t y2 = 0; y2 < n; ++y2) {
            const std::size_t y = y1 * n + y2;
            // sum over x2 of 1/2 P(y1 | x1 ^ x2) P(y2 | x2)
            p0[y] = 0.5 * (p.prob(y1, 0) * p.prob(y2, 0) + p.prob(y1, 1) * p.prob(y2, 1));
            p1[y] = 0.5 * (p.prob(y1, 1) * p.prob(y2, 0) + p.prob(y1, 0) * p.prob(y2, 1));
            conj[y] = p.conjugate(y1) * n + y2;
        }
    }
    return ExplicitChannel(std::move(p0), std::move(p1), std::move(conj));
}

ExplicitChannel raw_plus(const ExplicitChannel& p) {
    const std::size_t n = p.output_count();
    if (n > kRawAlphabetCap)
        throw BlowupError(0, 2 * n * n, 2 * kRawAlphabetCap * kRawAlphabetCap);
    std::vector<double> p0(2 * n * n), p1(2 * n * n);
    std::vector<std::size_t> conj(2 * n * n);
    for (std::size_t u1 = 0; u1 < 2; ++u1) {
        for (std::size_t y1 = 0; y1 < n; ++y1) {
            for (std::size_t y2 = 0; y2 < n; ++y2) {
                const std::size_t y = (u1 * n + y1) * n + y2;
                // 1/2 P(y1 | u1 ^ x2) P(y2 | x2)
                p0[y] = 0.5 * p.prob(y1, static_cast<int>(u1)) * p.prob(y2, 0);
                p1[y] = 0.5 * p.prob(y1, static_cast<int>(u1 ^ 1)) * p.prob(y2, 1);
                conj[y] = (u1 * n + p.conjugate(y1)) * n + p.conjugate(y2);
            }
        }
    }
    return ExplicitChannel(std::move(p0), std::move(p1), std::move(conj));
}

namespace {

void exact_leaf_functionals(const MassDistribution& w, ExactLeaves& out) {
    long double z = 0.0L, h = 0.0L;
    for (const MassPoint& mp : w.entries()) {
        const long double x = mp.x;
        z += static_cast<long double>(mp.p) * 2.0L * std::sqrt(x * (1.0L - x));
        if (mp.x > 0.0 && mp.x < 1.0)
            h += static_cast<long double>(mp.p) *
                 (-x * std::log2(x) - (1.0L - x) * std::log2(1.0L - x));
    }
    out.z.push_back(static_cast<double>(z));
    out.i.push_back(static_cast<double>(1.0L - h));
}

void exact_evolve_rec(const MassDistribution& w, int depth, int n, std::size_t mass_budget,
                      ExactLeaves& out) {
    if (depth == n) {
        exact_leaf_functionals(w, out);
        return;
    }
    const std::size_t m = w.size();
    const std::size_t projected = m * (m + 1);  // plus child before dedup
    if (projected > mass_budget)
        throw BlowupError(depth + 1, projected, mass_budget);
    auto children = transform_pair(w);
    exact_evolve_rec(children.first, depth + 1, n, mass_budget, out);
    exact_evolve_rec(children.second, depth + 1, n, mass_budget, out);
}

}  // namespace

ExactLeaves exact_evolve(const MassDistribution& w0, int n, std::size_t mass_budget) {
    if (n < 0 || n > 16)
        throw std::invalid_argument("exact_evolve: n outside [0, 16]");
    ExactLeaves out;
    out.z.reserve(std::size_t{1} << n);
    out.i.reserve(std::size_t{1} << n);
    exact_evolve_rec(w0, 0, n, mass_budget, out);
    return out;
}

MonteCarloEstimate monte_carlo_z(const MassDistribution& w, std::size_t samples,
                                 std::uint64_t seed) {
    if (samples < 1)
        throw std::invalid_argument("monte_carlo_z: need at least one sample");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const auto& e = w.entries();
    std::vector<double> cdf(e.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        acc += e[i].p;
        cdf[i] = acc;
    }

    long double sum = 0.0L, sum_sq = 0.0L;
    for (std::size_t s = 0; s < samples; ++s) {
        const double u = unit(rng);
        const std::size_t i =
            std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
        const double x = e[std::min(i, e.size() - 1)].x;
        // output bit under input 0; observed likelihood ratio P(y|1)/P(y|0)
        const bool flipped = unit(rng) < x;
        const double lr = flipped ? (1.0 - x) / x : x / (1.0 - x);
        const double value = std::sqrt(lr);
        sum += value;
        sum_sq += static_cast<long double>(value) * value;
    }
    const double mean = static_cast<double>(sum / samples);
    const double var =
        std::max(0.0, static_cast<double>(sum_sq / samples) - mean * mean);
    MonteCarloEstimate est;
    est.mean = mean;
    est.std_error = std::sqrt(var / static_cast<double>(samples));
    est.samples = samples;
    return est;
}

}  // namespace polarq::oracle
