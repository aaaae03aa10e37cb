#include "polarq/construct.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <thread>

#include "polarq/transform.hpp"

namespace polarq {

void ConstructionConfig::validate() const {
    if (n < 0 || n > 30)
        throw std::invalid_argument("construction: n must be in [0, 30]");
    const std::size_t k_min = mode == Mode::upgrade ? 2 : 1;
    if (k < k_min)
        throw std::invalid_argument("construction: k too small for the selected mode");
    if (delta && (!(*delta >= 0.0) || !(*delta <= 1.0)))
        throw std::invalid_argument("construction: delta outside [0, 1]");
}

MassDistribution bec_relax(const MassDistribution& w, double delta) {
    if (!(delta >= 0.0) || !(delta <= 1.0))
        throw std::invalid_argument("bec_relax: delta outside [0, 1]");
    const double z = w.bhattacharyya();
    if (z < delta)
        return MassDistribution::from_bec(z);
    return w;
}

namespace {

int thread_count_from_env() {
    if (const char* env = std::getenv("POLARQ_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1)
            return static_cast<int>(std::min<long>(v, 256));
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

struct PendingNode {
    MassDistribution dist;  // already reduced to <= k masses
    int depth = 0;
    std::uint64_t pos = 0;  // leftmost leaf position under this node
};

class Evolver {
public:
    Evolver(const ConstructionConfig& cfg, const LeafSink& sink)
        : cfg_(cfg), kernel_(Kernel::from_family(cfg.kernel)), sink_(sink) {}

    // Quantize (and optionally relax) one node distribution, charging the
    // information loss to the audit row for its depth.
    MassDistribution reduce(const MassDistribution& w, int depth, LevelAudit* audit) const {
        MassDistribution out = [&] {
            if (cfg_.mode == Mode::upgrade)
                return split_upgrade(w, cfg_.k, kernel_).dist;
            if (cfg_.quantizer == DegradeQuantizer::transport)
                return transport_degrade(w, cfg_.k, kernel_).dist;
            return merge_degrade(w, cfg_.k, kernel_).dist;
        }();
        if (cfg_.delta)
            out = bec_relax(out, *cfg_.delta);
        if (audit) {
            const double i_out = out.mutual_info();
            audit->i_sum[depth] += i_out;
            audit->i_loss[depth] += w.mutual_info() - i_out;
        }
        return out;
    }

    // Sequential depth-first sweep of the subtree rooted at an already
    // reduced node. The right child is pushed first so leaves emerge in
    // left-to-right (minus-first) order.
    void run_subtree(PendingNode root, LevelAudit* audit) const {
        std::vector<PendingNode> stack;
        stack.reserve(2 * (cfg_.n + 1));
        stack.push_back(std::move(root));
        while (!stack.empty()) {
            PendingNode node = std::move(stack.back());
            stack.pop_back();
            if (node.depth == cfg_.n) {
                sink_(node.pos, node.dist);
                continue;
            }
            auto children = transform_pair(node.dist);
            const std::uint64_t half = std::uint64_t{1} << (cfg_.n - node.depth - 1);
            stack.push_back(
                {reduce(children.second, node.depth + 1, audit), node.depth + 1, node.pos + half});
            stack.push_back({reduce(children.first, node.depth + 1, audit), node.depth + 1, node.pos});
        }
    }

    const ConstructionConfig& cfg_;
    Kernel kernel_;
    const LeafSink& sink_;
};

LevelAudit make_audit(int n) {
    LevelAudit a;
    a.i_sum.assign(static_cast<std::size_t>(n) + 1, 0.0);
    a.i_loss.assign(static_cast<std::size_t>(n) + 1, 0.0);
    return a;
}

void merge_audit(LevelAudit& into, const LevelAudit& part) {
    for (std::size_t d = 0; d < into.i_sum.size(); ++d) {
        into.i_sum[d] += part.i_sum[d];
        into.i_loss[d] += part.i_loss[d];
    }
}

}  // namespace

void evolve_visit(const MassDistribution& w0, const ConstructionConfig& cfg, const LeafSink& sink,
                  LevelAudit* audit) {
    cfg.validate();
    if (audit) {
        *audit = make_audit(cfg.n);
        audit->root_input_i = w0.mutual_info();
    }

    Evolver evolver(cfg, sink);
    PendingNode root{evolver.reduce(w0, 0, audit), 0, 0};

    const int threads = thread_count_from_env();
    int split_depth = 0;
    if (threads > 1) {
        while ((1 << split_depth) < 4 * threads && split_depth < cfg.n - 2 && split_depth < 10)
            ++split_depth;
    }
    if (split_depth == 0) {
        evolver.run_subtree(std::move(root), audit);
        return;
    }

    // Expand the top of the tree breadth-first into independent subtree
    // tasks; each task is evolved sequentially, so every leaf value is a
    // pure function of its root-to-leaf path and scheduling cannot change
    // results. Audit partials are merged in task order.
    std::vector<PendingNode> frontier;
    frontier.push_back(std::move(root));
    for (int d = 0; d < split_depth; ++d) {
        std::vector<PendingNode> next_frontier;
        next_frontier.reserve(frontier.size() * 2);
        for (PendingNode& node : frontier) {
            auto children = transform_pair(node.dist);
            const std::uint64_t half = std::uint64_t{1} << (cfg.n - node.depth - 1);
            next_frontier.push_back(
                {evolver.reduce(children.first, node.depth + 1, audit), node.depth + 1, node.pos});
            next_frontier.push_back({evolver.reduce(children.second, node.depth + 1, audit),
                                     node.depth + 1, node.pos + half});
        }
        frontier = std::move(next_frontier);
    }

    std::vector<LevelAudit> partials(audit ? frontier.size() : 0);
    std::atomic<std::size_t> next_task{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t t = next_task.fetch_add(1);
            if (t >= frontier.size())
                return;
            LevelAudit* part = nullptr;
            if (audit) {
                partials[t] = make_audit(cfg.n);
                part = &partials[t];
            }
            evolver.run_subtree(std::move(frontier[t]), part);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    for (int i = 1; i < threads; ++i)
        pool.emplace_back(worker);
    worker();
    for (std::thread& th : pool)
        th.join();

    if (audit)
        for (const LevelAudit& part : partials)
            merge_audit(*audit, part);
}

std::vector<LeafReport> evolve(const MassDistribution& w0, const ConstructionConfig& cfg,
                               LevelAudit* audit) {
    cfg.validate();
    const std::uint64_t n_leaves = std::uint64_t{1} << cfg.n;
    std::vector<LeafReport> leaves(n_leaves);
    const auto remap = cfg.index_order == IndexOrder::bit_reversed
                           ? bit_reverse_indices(cfg.n)
                           : std::vector<std::uint64_t>{};
    evolve_visit(
        w0, cfg,
        [&](std::uint64_t pos, const MassDistribution& leaf) {
            const std::uint64_t index = remap.empty() ? pos : remap[pos];
            double z = leaf.bhattacharyya();
            if (z < 1e-300)
                z = 0.0;
            leaves[index] = {index, z, leaf.mutual_info(), leaf.mean_crossover()};
        },
        audit);
    return leaves;
}

CodeDesign select_by_error_budget(std::span<const LeafReport> leaves, double budget,
                                  SelectionMetric metric) {
    if (!(budget > 0.0))
        throw std::invalid_argument("select_by_error_budget: budget must be positive");
    auto value = [&](std::uint32_t slot) {
        return metric == SelectionMetric::bhattacharyya ? leaves[slot].z : leaves[slot].pe;
    };
    std::vector<std::uint32_t> order(leaves.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (value(a) != value(b))
            return value(a) < value(b);
        return leaves[a].index < leaves[b].index;
    });

    CodeDesign design;
    design.budget = budget;
    design.metric = metric;
    double sum = 0.0;
    double z_sum = 0.0;
    for (std::uint32_t slot : order) {
        if (sum + value(slot) > budget)
            break;
        sum += value(slot);
        z_sum += leaves[slot].z;
        design.info_set.push_back(leaves[slot].index);
    }
    std::sort(design.info_set.begin(), design.info_set.end());
    design.metric_sum = sum;
    design.z_sum = z_sum;
    design.rate = leaves.empty() ? 0.0
                                 : static_cast<double>(design.info_set.size()) /
                                       static_cast<double>(leaves.size());
    return design;
}

CodeDesign select_by_rate(std::span<const LeafReport> leaves, double target_rate) {
    if (!(target_rate >= 0.0) || !(target_rate <= 1.0))
        throw std::invalid_argument("select_by_rate: rate outside [0, 1]");
    std::vector<std::uint32_t> order(leaves.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (leaves[a].z != leaves[b].z)
            return leaves[a].z < leaves[b].z;
        return leaves[a].index < leaves[b].index;
    });

    const auto count = static_cast<std::size_t>(
        std::floor(target_rate * static_cast<double>(leaves.size())));
    CodeDesign design;
    double sum = 0.0;
    for (std::size_t i = 0; i < count && i < order.size(); ++i) {
        sum += leaves[order[i]].z;
        design.info_set.push_back(leaves[order[i]].index);
    }
    std::sort(design.info_set.begin(), design.info_set.end());
    design.z_sum = sum;
    design.metric_sum = sum;
    design.rate = leaves.empty() ? 0.0
                                 : static_cast<double>(design.info_set.size()) /
                                       static_cast<double>(leaves.size());
    return design;
}

double good_fraction(std::span<const LeafReport> leaves, double threshold) {
    if (leaves.empty())
        return 0.0;
    std::size_t good = 0;
    for (const LeafReport& leaf : leaves)
        if (leaf.i > threshold)
            ++good;
    return static_cast<double>(good) / static_cast<double>(leaves.size());
}

std::vector<std::uint64_t> bit_reverse_indices(int n) {
    if (n < 0 || n > 32)
        throw std::invalid_argument("bit_reverse_indices: n outside [0, 32]");
    const std::uint64_t size = std::uint64_t{1} << n;
    std::vector<std::uint64_t> out(size);
    for (std::uint64_t i = 0; i < size; ++i) {
        std::uint64_t rev = 0;
        for (int b = 0; b < n; ++b)
            rev |= ((i >> b) & 1u) << (n - 1 - b);
        out[i] = rev;
    }
    return out;
}

double achievable_rate(const MassDistribution& w0, const ConstructionConfig& cfg, double budget,
                       SelectionMetric metric) {
    if (!(budget > 0.0))
        throw std::invalid_argument("achievable_rate: budget must be positive");
    cfg.validate();
    const std::uint64_t n_leaves = std::uint64_t{1} << cfg.n;
    std::vector<double> values(n_leaves);
    evolve_visit(w0, cfg, [&](std::uint64_t pos, const MassDistribution& leaf) {
        const double v = metric == SelectionMetric::bhattacharyya ? leaf.bhattacharyya()
                                                                  : leaf.mean_crossover();
        values[pos] = v < 1e-300 ? 0.0 : v;
    });
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    std::uint64_t count = 0;
    for (double v : values) {
        if (sum + v > budget)
            break;
        sum += v;
        ++count;
    }
    return static_cast<double>(count) / static_cast<double>(n_leaves);
}

ConservationReport conservation_audit(const LevelAudit& audit) {
    ConservationReport report;
    const std::size_t depths = audit.i_sum.size();
    report.deficit.resize(depths);
    report.loss_bound.resize(depths);

    double bound = 0.0;
    for (std::size_t d = 0; d < depths; ++d) {
        const double expected = std::ldexp(audit.root_input_i, static_cast<int>(d));
        report.deficit[d] = expected - audit.i_sum[d];
        bound = 2.0 * bound + audit.i_loss[d];
        report.loss_bound[d] = bound;
    }

    report.deficit_monotone = true;
    for (std::size_t d = 0; d + 1 < depths; ++d) {
        const double tol = 1e-9 * (1.0 + std::abs(report.deficit[d]));
        if (std::abs(report.deficit[d + 1]) + tol < std::abs(report.deficit[d]))
            report.deficit_monotone = false;
    }
    report.deficit_bounded = true;
    for (std::size_t d = 0; d < depths; ++d) {
        const double scale =
            1.0 + std::ldexp(std::abs(audit.root_input_i), static_cast<int>(d));
        if (std::abs(report.deficit[d] - report.loss_bound[d]) > 1e-9 * scale)
            report.deficit_bounded = false;
    }
    return report;
}

}  // namespace polarq
