#pragma once

#include <cstdint>
#include <vector>

#include "polarq/channel.hpp"

namespace polarq::oracle {

// Thrown when an exact computation would exceed its alphabet or mass budget.
class BlowupError : public std::runtime_error {
public:
    BlowupError(int level, std::size_t projected, std::size_t budget);
    int level() const { return level_; }
    std::size_t projected() const { return projected_; }

private:
    int level_;
    std::size_t projected_;
};

// A binary-input channel as an explicit transition matrix with a symmetry
// pairing: P(y|0) = P(conjugate(y)|1). Ground truth for the mixture path.
class ExplicitChannel {
public:
    ExplicitChannel(std::vector<double> prob0, std::vector<double> prob1,
                    std::vector<std::size_t> conjugate);

    static ExplicitChannel from_mixture(const MassDistribution& w);
    static ExplicitChannel bsc(double crossover);
    static ExplicitChannel bec(double erasure);

    std::size_t output_count() const { return prob0_.size(); }
    double prob(std::size_t y, int input) const { return input == 0 ? prob0_[y] : prob1_[y]; }
    std::size_t conjugate(std::size_t y) const { return conjugate_[y]; }

    double bhattacharyya() const;
    double mutual_info() const;
    // rows sum to 1 and the pairing is a matching involution
    bool check_valid(double tol = 1e-9) const;

private:
    std::vector<double> prob0_, prob1_;
    std::vector<std::size_t> conjugate_;
};

// Literal product-alphabet transforms; no symbol merging. Inputs are capped
// at 128 outputs, which covers three levels from a BSC root and two from a
// four-component mixture.
ExplicitChannel raw_minus(const ExplicitChannel& p);
ExplicitChannel raw_plus(const ExplicitChannel& p);

// Unquantized mixture evolution at toy depth. Before each transform the
// child mass count is projected from the current count and the call refuses
// (BlowupError) rather than exceed mass_budget. Functionals accumulate in
// long double.
struct ExactLeaves {
    std::vector<double> z;
    std::vector<double> i;
};
ExactLeaves exact_evolve(const MassDistribution& w0, int n, std::size_t mass_budget = 1000000);

// Likelihood-ratio Monte-Carlo estimate of Z: draw a component and an
// output under input 0, average sqrt(P(y|1)/P(y|0)).
struct MonteCarloEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};
MonteCarloEstimate monte_carlo_z(const MassDistribution& w, std::size_t samples,
                                 std::uint64_t seed = 0x9e3779b97f4a7c15ull);

}  // namespace polarq::oracle
