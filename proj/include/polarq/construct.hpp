#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "polarq/channel.hpp"
#include "polarq/quantize.hpp"

namespace polarq {

enum class Mode { degrade, upgrade };
enum class DegradeQuantizer { merge, transport };
enum class IndexOrder { natural, bit_reversed };

struct ConstructionConfig {
    int n = 0;                // tree depth; N = 2^n leaves
    std::size_t k = 16;       // max masses kept per node
    Mode mode = Mode::degrade;
    DegradeQuantizer quantizer = DegradeQuantizer::merge;  // ignored in upgrade mode
    Kernel::Family kernel = Kernel::Family::bhattacharyya;
    std::optional<double> delta;  // BEC relaxation threshold; disabled by default
    IndexOrder index_order = IndexOrder::natural;

    void validate() const;  // throws std::invalid_argument
};

struct LeafReport {
    std::uint64_t index = 0;
    double z = 0.0;   // Bhattacharyya parameter
    double i = 0.0;   // mutual information
    double pe = 0.0;  // MAP error probability (mean crossover)
};

// What the budget constrains. Summing Bhattacharyya parameters bounds the
// successive-cancellation block error from above; summing per-channel error
// probabilities is the selection the bundled achievable-rate tables use.
enum class SelectionMetric { bhattacharyya, error_prob };

// Per-depth sums collected during an audited run: mutual information of the
// quantized node distributions and the information lost to quantization
// (plus relaxation) at that depth. Signed: negative losses mean an upgrade.
struct LevelAudit {
    double root_input_i = 0.0;
    std::vector<double> i_sum;
    std::vector<double> i_loss;
};

// Depth-first evolution: every node, the root included, is reduced to at
// most k masses before it is split, so working storage stays O(n k). The
// sink receives each leaf in natural (minus-first) position order; calls
// may come from different threads but positions never repeat.
using LeafSink = std::function<void(std::uint64_t pos, const MassDistribution& leaf)>;
void evolve_visit(const MassDistribution& w0, const ConstructionConfig& cfg, const LeafSink& sink,
                  LevelAudit* audit = nullptr);

// Leaf statistics for all 2^n leaves, indexed per cfg.index_order.
std::vector<LeafReport> evolve(const MassDistribution& w0, const ConstructionConfig& cfg,
                               LevelAudit* audit = nullptr);

// Theorem-2 relaxation: once Z(W) drops below delta the channel is replaced
// by the degraded BEC(Z(W)), whose descendants stay two-mass BECs.
MassDistribution bec_relax(const MassDistribution& w, double delta);

struct CodeDesign {
    std::vector<std::uint64_t> info_set;  // sorted ascending
    double rate = 0.0;
    double z_sum = 0.0;       // Bhattacharyya sum of the selected set
    double metric_sum = 0.0;  // sum of the budgeted metric, <= budget
    SelectionMetric metric = SelectionMetric::bhattacharyya;
    std::optional<double> budget;
};

// Longest prefix of leaves, taken in ascending metric order, whose metric
// sum stays within budget.
CodeDesign select_by_error_budget(std::span<const LeafReport> leaves, double budget,
                                  SelectionMetric metric = SelectionMetric::bhattacharyya);

// The floor(N*R) smallest-Z indices; z_sum bounds the block error rate
// under successive cancellation.
CodeDesign select_by_rate(std::span<const LeafReport> leaves, double target_rate);

// Fraction of leaves with I above the threshold; finite-n polarization proxy.
double good_fraction(std::span<const LeafReport> leaves, double threshold = 0.5);

std::vector<std::uint64_t> bit_reverse_indices(int n);

// Memory-lean budget-rate computation used by the table sweeps: only the
// budgeted leaf statistic is collected, never index sets.
double achievable_rate(const MassDistribution& w0, const ConstructionConfig& cfg, double budget,
                       SelectionMetric metric = SelectionMetric::bhattacharyya);

// Checks the doubling identity on an audited run: the per-depth information
// deficit against 2^d I(W0) must match the loss recursion
// D_{d+1} = 2 D_d + loss_{d+1} and grow monotonically in magnitude.
struct ConservationReport {
    std::vector<double> deficit;
    std::vector<double> loss_bound;
    bool deficit_monotone = false;
    bool deficit_bounded = false;
};
ConservationReport conservation_audit(const LevelAudit& audit);

}  // namespace polarq
