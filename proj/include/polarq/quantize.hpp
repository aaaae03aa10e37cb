#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "polarq/channel.hpp"

namespace polarq {

enum class QuantizerKind { transport, merge, split };

// Per-reduction accounting. cumulative_loss is the magnitude of the E[f]
// change over all greedy steps; upgrading flags that the signed change was
// negative (mass splitting lowers E[f], the degraders raise it).
struct QuantizeReport {
    std::size_t steps = 0;
    double cumulative_loss = 0.0;
    double max_step_loss = 0.0;
    bool upgrading = false;

    double signed_loss() const { return upgrading ? -cumulative_loss : cumulative_loss; }
};

struct QuantizeResult {
    MassDistribution dist;
    QuantizeReport report;
};

// Greedy rightward mass transport: repeatedly moves the mass with the
// cheapest p_i (f(x_{i+1}) - f(x_i)) onto its right neighbor until at most
// k entries remain. Output stochastically dominates the input. k >= 1.
QuantizeResult transport_degrade(const MassDistribution& w, std::size_t k, const Kernel& f);

// Greedy adjacent-pair merging at the mass-weighted mean, choosing the pair
// with the cheapest E[f] increase. Mean-preserving. k >= 1.
QuantizeResult merge_degrade(const MassDistribution& w, std::size_t k, const Kernel& f);

// Greedy interior-mass splitting onto both neighbors with weights chosen to
// preserve the mean; picks the mass whose removal lowers E[f] the least.
// Endpoints are never split. k >= 2.
QuantizeResult split_upgrade(const MassDistribution& w, std::size_t k, const Kernel& f);

// Single-step cost bounds. The transport candidates i < m obey
// min p_i d_i <= 1/(m-1)^2; extending the gap list with the boundary gap
// f(1/2) - f(x_m) tightens the Cauchy-Schwarz argument to 1/m^2 over m
// terms. Merging never costs more than transporting the same pair.
struct StepBoundReport {
    bool pass = false;
    std::size_t m = 0;
    double min_transport_cost = 0.0;  // over the m-1 movable masses
    double transport_bound = 0.0;     // 1/(m-1)^2
    double min_gap_cost = 0.0;        // over m terms incl. the boundary gap
    double gap_bound = 0.0;           // 1/m^2
    double max_merge_excess = 0.0;    // max over pairs of e_merge - e_transport
};
StepBoundReport step_cost_bound_check(const MassDistribution& w, const Kernel& f);

// Cumulative quantization loss versus k on a fixed input set, with the
// log-log slope fitted by least squares.
struct DecayDiagnostic {
    std::vector<std::size_t> ks;
    std::vector<double> losses;  // mean cumulative loss over the inputs
    double fitted_exponent = 0.0;
    bool monotone_nonincreasing = false;
};
DecayDiagnostic decay_diagnostic(std::span<const MassDistribution> inputs,
                                 std::span<const std::size_t> ks, const Kernel& f,
                                 QuantizerKind quantizer);

}  // namespace polarq
