#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "polarq/construct.hpp"
#include "polarq/oracle.hpp"
#include "polarq/quantize.hpp"
#include "polarq/transform.hpp"

using json = nlohmann::json;
using namespace polarq;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitViolation = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRefused = 3;

struct RunManifest {
    std::string command;
    json config;
    double wall_clock_seconds = 0.0;
    std::vector<std::string> outputs;

    void write(const std::string& base_path) const {
        json doc{{"command", command},
                 {"config", config},
                 {"version", kVersion},
                 {"wall_clock_seconds", wall_clock_seconds},
                 {"outputs", outputs}};
        std::ofstream out(base_path + ".manifest.json");
        out << doc.dump(2) << "\n";
    }
};

Mode parse_mode(const std::string& s) {
    if (s == "degrade")
        return Mode::degrade;
    if (s == "upgrade")
        return Mode::upgrade;
    throw CLI::ValidationError("--mode", "expected degrade or upgrade");
}

struct ConstructArgs {
    std::string channel;
    int n = 0;
    std::size_t k = 16;
    std::string mode = "degrade";
    std::string quantizer = "merge";
    std::string kernel = "bhattacharyya";
    std::string metric = "error-prob";
    double budget = 1e-3;
    double delta = -1.0;  // <0 means disabled
    std::string order = "natural";
    std::string out;
    std::string leaves_out;
};

ConstructionConfig to_config(const ConstructArgs& args) {
    ConstructionConfig cfg;
    cfg.n = args.n;
    cfg.k = args.k;
    cfg.mode = parse_mode(args.mode);
    cfg.quantizer =
        args.quantizer == "transport" ? DegradeQuantizer::transport : DegradeQuantizer::merge;
    cfg.kernel =
        args.kernel == "entropy" ? Kernel::Family::entropy : Kernel::Family::bhattacharyya;
    if (args.delta >= 0.0)
        cfg.delta = args.delta;
    cfg.index_order = args.order == "bit-reversed" ? IndexOrder::bit_reversed : IndexOrder::natural;
    return cfg;
}

int cmd_construct(const ConstructArgs& args) {
    if (args.n > 26) {
        std::cerr << "construct: refusing n > 26 (leaf reports would not fit in memory)\n";
        return kExitRefused;
    }
    const auto metric =
        args.metric == "bhattacharyya" ? SelectionMetric::bhattacharyya : SelectionMetric::error_prob;
    const auto start = std::chrono::steady_clock::now();
    const MassDistribution w0 = parse_channel_spec(args.channel);
    const ConstructionConfig cfg = to_config(args);
    const auto leaves = evolve(w0, cfg);
    const CodeDesign design = select_by_error_budget(leaves, args.budget, metric);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::printf("%.4f\n", design.rate);

    RunManifest manifest;
    manifest.command = "construct";
    manifest.config = {{"channel", args.channel},
                       {"n", cfg.n},
                       {"k", cfg.k},
                       {"mode", args.mode},
                       {"quantizer", args.quantizer},
                       {"kernel", args.kernel},
                       {"metric", args.metric},
                       {"budget", args.budget},
                       {"delta", args.delta >= 0.0 ? json(args.delta) : json()},
                       {"order", args.order}};
    manifest.wall_clock_seconds = elapsed;

    if (!args.out.empty()) {
        json doc{{"n", cfg.n},
                 {"k", cfg.k},
                 {"mode", args.mode},
                 {"kernel", args.kernel},
                 {"metric", args.metric},
                 {"budget", args.budget},
                 {"rate", design.rate},
                 {"z_sum", design.z_sum},
                 {"metric_sum", design.metric_sum},
                 {"info_set", design.info_set}};
        std::ofstream out(args.out);
        if (!out) {
            std::cerr << "construct: cannot write '" << args.out << "'\n";
            return kExitUsage;
        }
        out << doc.dump(2) << "\n";
        manifest.outputs.push_back(args.out);
    }
    if (!args.leaves_out.empty()) {
        std::ofstream out(args.leaves_out);
        if (!out) {
            std::cerr << "construct: cannot write '" << args.leaves_out << "'\n";
            return kExitUsage;
        }
        out << "index,Z,I\n";
        char line[96];
        for (const LeafReport& leaf : leaves) {
            std::snprintf(line, sizeof line, "%llu,%.17g,%.17g\n",
                          static_cast<unsigned long long>(leaf.index), leaf.z, leaf.i);
            out << line;
        }
        manifest.outputs.push_back(args.leaves_out);
    }
    if (!manifest.outputs.empty())
        manifest.write(manifest.outputs.front());
    return 0;
}

struct TableArgs {
    int which = 1;
    std::string scale = "full";
    std::string out;
};

int cmd_table(const TableArgs& args) {
    if (args.which == 3 && args.scale == "ci") {
        std::cerr << "table: table 3 needs depths beyond the ci scale cap of n=20\n";
        return kExitRefused;
    }

    const auto start = std::chrono::steady_clock::now();
    const MassDistribution w0 = MassDistribution::from_bsc(bsc_crossover_for_capacity(0.5));
    const double budget = 1e-3;

    std::string header;
    std::vector<int> axis;
    int fixed_n = 15;
    std::size_t fixed_k = 16;
    if (args.which == 1) {
        header = "k";
        axis = {2, 4, 8, 16, 32, 64};
    } else {
        header = "n";
        axis = args.which == 2 ? std::vector<int>{5, 8, 11, 14, 17, 20}
                               : std::vector<int>{21, 22, 23, 24, 25};
    }

    std::string csv = header + ",degrade,upgrade\n";
    json rows = json::array();
    for (int value : axis) {
        ConstructionConfig lo, hi;
        lo.n = hi.n = args.which == 1 ? fixed_n : value;
        lo.k = hi.k = args.which == 1 ? static_cast<std::size_t>(value) : fixed_k;
        lo.mode = Mode::degrade;
        hi.mode = Mode::upgrade;
        const double degrade = achievable_rate(w0, lo, budget, SelectionMetric::error_prob);
        const double upgrade = achievable_rate(w0, hi, budget, SelectionMetric::error_prob);
        char line[64];
        std::snprintf(line, sizeof line, "%d,%.4f,%.4f\n", value, degrade, upgrade);
        csv += line;
        rows.push_back({{header, value}, {"degrade", degrade}, {"upgrade", upgrade}});
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (args.out.empty()) {
        std::fputs(csv.c_str(), stdout);
    } else {
        std::ofstream out(args.out);
        if (!out) {
            std::cerr << "table: cannot write '" << args.out << "'\n";
            return kExitUsage;
        }
        out << csv;
        RunManifest manifest;
        manifest.command = "table";
        manifest.config = {{"which", args.which}, {"scale", args.scale},
                           {"budget", budget},    {"metric", "error-prob"},
                           {"rows", rows}};
        manifest.wall_clock_seconds = elapsed;
        manifest.outputs.push_back(args.out);
        manifest.write(args.out);
    }
    return 0;
}

struct DiagnoseArgs {
    std::string suite;
    std::string channel = "bsc:0.11002786";
    int n = -1;
    std::size_t k = 16;
    std::string kernel = "bhattacharyya";
    std::uint64_t seed = 1;
    std::size_t trials = 0;  // 0 = suite default
};

MassDistribution random_mixture(std::mt19937_64& rng, std::size_t m) {
    std::exponential_distribution<double> gap(1.0);
    std::exponential_distribution<double> mass(1.0);
    std::vector<MassPoint> pts;
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        acc += 0.05 + gap(rng);
        pts.push_back({mass(rng) + 1e-3, acc});
    }
    for (MassPoint& mp : pts)
        mp.x = 0.5 * mp.x / acc;
    return MassDistribution::canonicalize(std::move(pts));
}

json mixture_to_json(const MassDistribution& w) {
    json entries = json::array();
    for (const MassPoint& mp : w.entries())
        entries.push_back({{"p", mp.p}, {"x", mp.x}});
    return entries;
}

int diagnose_step_bounds(const DiagnoseArgs& args) {
    const std::size_t trials = args.trials ? args.trials : 100;
    std::mt19937_64 rng(args.seed);
    std::uniform_int_distribution<std::size_t> um(2, 256);
    for (std::size_t t = 0; t < trials; ++t) {
        const Kernel f = t % 2 ? Kernel::entropy() : Kernel::bhattacharyya();
        auto w = random_mixture(rng, um(rng));
        auto report = step_cost_bound_check(w, f);
        if (!report.pass) {
            json instance{{"trial", t},
                          {"kernel", std::string(f.name())},
                          {"m", report.m},
                          {"min_transport_cost", report.min_transport_cost},
                          {"transport_bound", report.transport_bound},
                          {"min_gap_cost", report.min_gap_cost},
                          {"gap_bound", report.gap_bound},
                          {"max_merge_excess", report.max_merge_excess},
                          {"entries", mixture_to_json(w)}};
            std::cerr << instance.dump(2) << "\n";
            return kExitViolation;
        }
    }
    std::printf("step-bounds: %zu random instances pass the per-step cost bounds\n", trials);
    return 0;
}

int diagnose_decay(const DiagnoseArgs& args) {
    const std::size_t trials = args.trials ? args.trials : 3;
    std::mt19937_64 rng(args.seed);
    std::vector<MassDistribution> inputs;
    for (std::size_t t = 0; t < trials; ++t)
        inputs.push_back(random_mixture(rng, 1024));
    const std::size_t ks[] = {8, 16, 32, 64, 128};
    const Kernel f = args.kernel == "entropy" ? Kernel::entropy() : Kernel::bhattacharyya();

    bool ok = true;
    for (auto quantizer : {QuantizerKind::merge, QuantizerKind::transport}) {
        auto d = decay_diagnostic(inputs, ks, f, quantizer);
        const char* name = quantizer == QuantizerKind::merge ? "merge" : "transport";
        std::printf("%s losses:", name);
        for (double loss : d.losses)
            std::printf(" %.3e", loss);
        std::printf("  fitted exponent %.2f\n", d.fitted_exponent);
        if (!d.monotone_nonincreasing)
            ok = false;
        if (quantizer == QuantizerKind::merge && d.fitted_exponent > -1.0)
            ok = false;
    }
    if (!ok) {
        std::cerr << "{\"suite\": \"decay\", \"violation\": \"loss not monotone or merge decay "
                     "slower than 1/k\"}\n";
        return kExitViolation;
    }
    return 0;
}

int diagnose_conservation(const DiagnoseArgs& args) {
    ConstructionConfig cfg;
    cfg.n = args.n >= 0 ? args.n : 10;
    cfg.k = args.k;
    LevelAudit audit;
    evolve(parse_channel_spec(args.channel), cfg, &audit);
    auto report = conservation_audit(audit);
    for (std::size_t d = 0; d < report.deficit.size(); ++d)
        std::printf("depth %2zu  deficit %.6e  loss bound %.6e\n", d, report.deficit[d],
                    report.loss_bound[d]);
    if (!report.deficit_monotone || !report.deficit_bounded) {
        json instance{{"suite", "conservation"},
                      {"channel", args.channel},
                      {"deficit", report.deficit},
                      {"loss_bound", report.loss_bound}};
        std::cerr << instance.dump(2) << "\n";
        return kExitViolation;
    }
    return 0;
}

int diagnose_sandwich(const DiagnoseArgs& args) {
    const int n = args.n >= 0 ? args.n : 4;
    const MassDistribution w0 = parse_channel_spec(args.channel);
    const auto exact = oracle::exact_evolve(w0, n);
    for (std::size_t k : {2, 4, 8}) {
        ConstructionConfig lo, hi;
        lo.n = hi.n = n;
        lo.k = hi.k = k;
        lo.mode = Mode::degrade;
        hi.mode = Mode::upgrade;
        const auto lower = evolve(w0, lo);
        const auto upper = evolve(w0, hi);
        for (std::size_t i = 0; i < exact.z.size(); ++i) {
            const bool ok = lower[i].z >= exact.z[i] - 1e-10 && upper[i].z <= exact.z[i] + 1e-10 &&
                            lower[i].i <= exact.i[i] + 1e-10 && upper[i].i >= exact.i[i] - 1e-10;
            if (!ok) {
                json instance{{"suite", "sandwich"}, {"channel", args.channel},
                              {"k", k},              {"leaf", i},
                              {"exact_z", exact.z[i]}, {"degrade_z", lower[i].z},
                              {"upgrade_z", upper[i].z}};
                std::cerr << instance.dump(2) << "\n";
                return kExitViolation;
            }
        }
    }
    std::printf("sandwich: degrade/upgrade bracket the exact evolution at n=%d\n", n);
    return 0;
}

int diagnose_oracle(const DiagnoseArgs& args) {
    const std::size_t trials = args.trials ? args.trials : 30;
    std::mt19937_64 rng(args.seed);
    std::uniform_int_distribution<std::size_t> um(1, 4);
    for (std::size_t t = 0; t < trials; ++t) {
        auto w = random_mixture(rng, um(rng));
        for (int pattern = 0; pattern < 4; ++pattern) {
            MassDistribution mix = w;
            oracle::ExplicitChannel raw = oracle::ExplicitChannel::from_mixture(w);
            for (int level = 0; level < 2; ++level) {
                if ((pattern >> level) & 1) {
                    mix = plus_transform(mix);
                    raw = oracle::raw_plus(raw);
                } else {
                    mix = minus_transform(mix);
                    raw = oracle::raw_minus(raw);
                }
            }
            if (std::abs(mix.mutual_info() - raw.mutual_info()) > 1e-10 ||
                std::abs(mix.bhattacharyya() - raw.bhattacharyya()) > 1e-10) {
                json instance{{"suite", "oracle"},   {"trial", t},
                              {"pattern", pattern},  {"mix_i", mix.mutual_info()},
                              {"raw_i", raw.mutual_info()}, {"entries", mixture_to_json(w)}};
                std::cerr << instance.dump(2) << "\n";
                return kExitViolation;
            }
        }
        auto mc = oracle::monte_carlo_z(w, 100000, args.seed + t);
        if (std::abs(mc.mean - w.bhattacharyya()) > 4.0 * mc.std_error + 1e-12) {
            json instance{{"suite", "oracle"},
                          {"trial", t},
                          {"monte_carlo", mc.mean},
                          {"std_error", mc.std_error},
                          {"closed_form", w.bhattacharyya()}};
            std::cerr << instance.dump(2) << "\n";
            return kExitViolation;
        }
    }
    std::printf("oracle: %zu random channels agree across mixture, raw and Monte-Carlo paths\n",
                trials);
    return 0;
}

int cmd_diagnose(const DiagnoseArgs& args) {
    try {
        if (args.suite == "step-bounds")
            return diagnose_step_bounds(args);
        if (args.suite == "decay")
            return diagnose_decay(args);
        if (args.suite == "conservation")
            return diagnose_conservation(args);
        if (args.suite == "sandwich")
            return diagnose_sandwich(args);
        if (args.suite == "oracle")
            return diagnose_oracle(args);
    } catch (const oracle::BlowupError& e) {
        std::cerr << "diagnose: " << e.what() << "\n";
        return kExitRefused;
    }
    std::cerr << "diagnose: unknown suite '" << args.suite << "'\n";
    return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"polarq: polar-code construction on quantized BSC mixtures"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    ConstructArgs construct_args;
    auto* construct = app.add_subcommand(
        "construct", "evolve a channel down the polarization tree and select an information set");
    construct->add_option("--channel", construct_args.channel,
                          "channel spec: bsc:<p>, bec:<e>, file:<csv>")->required();
    construct->add_option("--n", construct_args.n, "tree depth, N = 2^n")->required()
        ->check(CLI::Range(0, 30));
    construct->add_option("--k", construct_args.k, "max masses kept per node")->required();
    construct->add_option("--mode", construct_args.mode, "degrade | upgrade")
        ->check(CLI::IsMember({"degrade", "upgrade"}));
    construct->add_option("--quantizer", construct_args.quantizer,
                          "degrade-mode quantizer: merge | transport")
        ->check(CLI::IsMember({"merge", "transport"}));
    construct->add_option("--kernel", construct_args.kernel, "bhattacharyya | entropy")
        ->check(CLI::IsMember({"bhattacharyya", "entropy"}));
    construct->add_option("--metric", construct_args.metric,
                          "budgeted statistic: error-prob | bhattacharyya")
        ->check(CLI::IsMember({"error-prob", "bhattacharyya"}));
    construct->add_option("--budget", construct_args.budget, "error budget (default 1e-3)");
    construct->add_option("--delta", construct_args.delta,
                          "BEC relaxation threshold (disabled when omitted)")
        ->check(CLI::Range(0.0, 1.0));
    construct->add_option("--order", construct_args.order, "natural | bit-reversed")
        ->check(CLI::IsMember({"natural", "bit-reversed"}));
    construct->add_option("--out", construct_args.out, "design JSON path");
    construct->add_option("--leaves", construct_args.leaves_out, "leaf CSV path (index,Z,I)");

    TableArgs table_args;
    auto* table = app.add_subcommand("table", "reproduce an achievable-rate table");
    table->add_option("--which", table_args.which, "1, 2 or 3")->required()
        ->check(CLI::Range(1, 3));
    table->add_option("--scale", table_args.scale, "full | ci (ci caps n at 20)")
        ->check(CLI::IsMember({"full", "ci"}));
    table->add_option("--out", table_args.out, "CSV path (stdout when omitted)");

    DiagnoseArgs diagnose_args;
    auto* diagnose = app.add_subcommand("diagnose", "run an invariant suite");
    diagnose->add_option("--suite", diagnose_args.suite,
                         "step-bounds | decay | conservation | sandwich | oracle")->required()
        ->check(CLI::IsMember({"step-bounds", "decay", "conservation", "sandwich", "oracle"}));
    diagnose->add_option("--channel", diagnose_args.channel, "channel spec");
    diagnose->add_option("--n", diagnose_args.n, "depth override");
    diagnose->add_option("--k", diagnose_args.k, "mass budget override");
    diagnose->add_option("--kernel", diagnose_args.kernel, "bhattacharyya | entropy")
        ->check(CLI::IsMember({"bhattacharyya", "entropy"}));
    diagnose->add_option("--seed", diagnose_args.seed, "random seed");
    diagnose->add_option("--trials", diagnose_args.trials, "trial count override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (construct->parsed())
            return cmd_construct(construct_args);
        if (table->parsed())
            return cmd_table(table_args);
        if (diagnose->parsed())
            return cmd_diagnose(diagnose_args);
    } catch (const oracle::BlowupError& e) {
        std::cerr << "refused: " << e.what() << "\n";
        return kExitRefused;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid arguments: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitViolation;
    }
    return kExitUsage;
}
