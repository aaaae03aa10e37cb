#include "doctest.h"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "polarq/construct.hpp"

using json = nlohmann::json;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(POLARQ_CLI_PATH) + " " + args + " 2>/dev/null";
    RunResult result;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 512> buf;
    while (fgets(buf.data(), buf.size(), pipe))
        result.output += buf.data();
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

}  // namespace

TEST_CASE("version and flag errors") {
    auto version = run_cli("--version");
    CHECK(version.exit_code == 0);
    CHECK(version.output.find("0.1.0") != std::string::npos);

    CHECK(run_cli("construct --bogus").exit_code == 2);
    CHECK(run_cli("construct --n 4 --k 4").exit_code == 2);              // missing channel
    CHECK(run_cli("nonsense").exit_code == 2);
    CHECK(run_cli("construct --channel awgn:1 --n 2 --k 4").exit_code == 2);
    CHECK(run_cli("construct --channel bsc:0.1 --n 2 --k 1 --mode upgrade").exit_code == 2);
}

TEST_CASE("construct matches the library pipeline and writes artifacts") {
    auto result = run_cli(
        "construct --channel bec:0.5 --n 5 --k 4 --out cli_design.json --leaves cli_leaves.csv");
    REQUIRE(result.exit_code == 0);

    using namespace polarq;
    ConstructionConfig cfg;
    cfg.n = 5;
    cfg.k = 4;
    auto leaves = evolve(MassDistribution::from_bec(0.5), cfg);
    auto design = select_by_error_budget(leaves, 1e-3, SelectionMetric::error_prob);
    char expected[16];
    std::snprintf(expected, sizeof expected, "%.4f\n", design.rate);
    CHECK(result.output == expected);

    std::ifstream design_file("cli_design.json");
    REQUIRE(design_file.good());
    json doc = json::parse(design_file);
    CHECK(doc["n"] == 5);
    CHECK(doc["k"] == 4);
    CHECK(doc["mode"] == "degrade");
    CHECK(doc["budget"] == 1e-3);
    CHECK(doc["rate"] == doctest::Approx(design.rate));
    CHECK(doc["z_sum"] == doctest::Approx(design.z_sum));
    CHECK(doc["info_set"].size() == design.info_set.size());
    CHECK(std::is_sorted(doc["info_set"].begin(), doc["info_set"].end()));

    std::ifstream leaves_file("cli_leaves.csv");
    REQUIRE(leaves_file.good());
    std::string header;
    std::getline(leaves_file, header);
    CHECK(header == "index,Z,I");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(leaves_file, line))
        if (!line.empty())
            ++rows;
    CHECK(rows == 32);

    std::ifstream manifest_file("cli_design.json.manifest.json");
    REQUIRE(manifest_file.good());
    json manifest = json::parse(manifest_file);
    CHECK(manifest["command"] == "construct");
    CHECK(manifest["config"]["channel"] == "bec:0.5");
    CHECK(manifest["outputs"].size() == 2);
    CHECK(manifest["wall_clock_seconds"].get<double>() >= 0.0);

    std::remove("cli_design.json");
    std::remove("cli_leaves.csv");
    std::remove("cli_design.json.manifest.json");
}

TEST_CASE("depth-zero designs depend on the budget check alone") {
    auto perfect = run_cli("construct --channel bsc:0 --n 0 --k 2");
    CHECK(perfect.exit_code == 0);
    CHECK(perfect.output == "1.0000\n");

    auto useless = run_cli("construct --channel bec:0.9 --n 0 --k 2");
    CHECK(useless.exit_code == 0);
    CHECK(useless.output == "0.0000\n");
}

TEST_CASE("bhattacharyya metric is selectable") {
    auto pe = run_cli("construct --channel bsc:0.11 --n 6 --k 8");
    auto z = run_cli("construct --channel bsc:0.11 --n 6 --k 8 --metric bhattacharyya");
    REQUIRE(pe.exit_code == 0);
    REQUIRE(z.exit_code == 0);
    // the Z-sum rule is strictly more conservative
    CHECK(std::stod(z.output) <= std::stod(pe.output));
}

TEST_CASE("table 3 is refused at ci scale") {
    CHECK(run_cli("table --which 3 --scale ci").exit_code == 3);
}

TEST_CASE("output is bit-stable across runs and thread counts") {
    const std::string flags = "construct --channel bsc:0.11 --n 7 --k 6 --leaves cli_stable.csv";
    auto read_all = [](const char* path) {
        std::ifstream in(path);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    setenv("POLARQ_THREADS", "1", 1);
    auto first = run_cli(flags);
    const std::string serial_csv = read_all("cli_stable.csv");
    setenv("POLARQ_THREADS", "4", 1);
    auto second = run_cli(flags);
    const std::string parallel_csv = read_all("cli_stable.csv");
    unsetenv("POLARQ_THREADS");
    REQUIRE(first.exit_code == 0);
    CHECK(first.output == second.output);
    CHECK(serial_csv == parallel_csv);
    CHECK(serial_csv.size() > 128);
    std::remove("cli_stable.csv");
    std::remove("cli_stable.csv.manifest.json");
}

TEST_CASE("diagnose suites run clean") {
    CHECK(run_cli("diagnose --suite step-bounds --trials 25").exit_code == 0);
    CHECK(run_cli("diagnose --suite oracle --trials 5").exit_code == 0);
    CHECK(run_cli("diagnose --suite sandwich --channel bsc:0.3 --n 3").exit_code == 0);
    CHECK(run_cli("diagnose --suite conservation --channel bec:0.4 --n 6").exit_code == 0);
    CHECK(run_cli("diagnose --suite decay --trials 2").exit_code == 0);
}
