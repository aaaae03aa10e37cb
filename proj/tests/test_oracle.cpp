#include "doctest.h"

#include <random>

#include "polarq/oracle.hpp"
#include "polarq/transform.hpp"
#include "test_support.hpp"

using namespace polarq;
using oracle::ExplicitChannel;

TEST_CASE("explicit reference channels are valid and match closed forms") {
    auto bsc = ExplicitChannel::bsc(0.11);
    CHECK(bsc.check_valid());
    CHECK(bsc.bhattacharyya() == doctest::Approx(0.625780).epsilon(1e-6));
    CHECK(bsc.mutual_info() ==
          doctest::Approx(MassDistribution::from_bsc(0.11).mutual_info()).epsilon(1e-12));

    auto bec = ExplicitChannel::bec(0.3);
    CHECK(bec.check_valid());
    CHECK(bec.bhattacharyya() == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(bec.mutual_info() == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("mixture export preserves the functionals") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 50; ++trial) {
        auto w = testing::random_mixture(rng, 1 + trial % 6);
        auto explicit_w = ExplicitChannel::from_mixture(w);
        CHECK(explicit_w.check_valid());
        CHECK(explicit_w.bhattacharyya() == doctest::Approx(w.bhattacharyya()).epsilon(1e-12));
        CHECK(explicit_w.mutual_info() == doctest::Approx(w.mutual_info()).epsilon(1e-12));
    }
}

TEST_CASE("raw minus on reference channels") {
    auto noiseless = oracle::raw_minus(ExplicitChannel::bsc(0.0));
    CHECK(noiseless.check_valid());
    CHECK(noiseless.mutual_info() == doctest::Approx(1.0).epsilon(1e-12));

    auto useless = oracle::raw_minus(ExplicitChannel::bsc(0.5));
    CHECK(useless.mutual_info() == doctest::Approx(0.0).epsilon(1e-12));

    auto w = oracle::raw_minus(ExplicitChannel::bsc(0.11));
    CHECK(w.output_count() == 4);
    CHECK(w.check_valid());
    CHECK(w.mutual_info() ==
          doctest::Approx(MassDistribution::from_bsc(0.19580).mutual_info()).epsilon(1e-12));
}

TEST_CASE("raw plus on reference channels") {
    auto noiseless = oracle::raw_plus(ExplicitChannel::bsc(0.0));
    CHECK(noiseless.bhattacharyya() == doctest::Approx(0.0).epsilon(1e-12));

    auto w = oracle::raw_plus(ExplicitChannel::bsc(0.11));
    CHECK(w.output_count() == 8);
    CHECK(w.check_valid());
    CHECK(w.bhattacharyya() == doctest::Approx(0.391600).epsilon(1e-5));
    const double z = MassDistribution::from_bsc(0.11).bhattacharyya();
    CHECK(w.bhattacharyya() == doctest::Approx(z * z).epsilon(1e-12));

    auto bec = oracle::raw_plus(ExplicitChannel::bec(0.3));
    CHECK(bec.mutual_info() == doctest::Approx(0.91).epsilon(1e-12));
}

TEST_CASE("raw enumeration allows three levels from a BSC and then refuses") {
    auto base = ExplicitChannel::bsc(0.2);
    auto level1 = oracle::raw_plus(base);     // 8 outputs
    auto level2 = oracle::raw_plus(level1);   // 128 outputs
    auto level3 = oracle::raw_plus(level2);   // 32768 outputs
    CHECK(level3.check_valid());
    CHECK_THROWS_AS(oracle::raw_plus(level3), oracle::BlowupError);
    CHECK_THROWS_AS(oracle::raw_minus(level3), oracle::BlowupError);
}

TEST_CASE("mixture transforms agree with raw enumeration to depth two") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 40; ++trial) {
        auto w = testing::random_mixture(rng, 1 + trial % 4);
        for (int pattern = 0; pattern < 4; ++pattern) {
            MassDistribution mix = w;
            ExplicitChannel raw = ExplicitChannel::from_mixture(w);
            for (int level = 0; level < 2; ++level) {
                if ((pattern >> level) & 1) {
                    mix = plus_transform(mix);
                    raw = oracle::raw_plus(raw);
                } else {
                    mix = minus_transform(mix);
                    raw = oracle::raw_minus(raw);
                }
            }
            CHECK(mix.mutual_info() == doctest::Approx(raw.mutual_info()).epsilon(1e-10));
            CHECK(mix.bhattacharyya() == doctest::Approx(raw.bhattacharyya()).epsilon(1e-10));
        }
    }
}

TEST_CASE("exact evolution reproduces the erasure recursion") {
    const int n = 5;
    auto leaves = oracle::exact_evolve(MassDistribution::from_bec(0.5), n);
    auto expected = testing::bec_leaf_erasures(0.5, n);
    REQUIRE(leaves.z.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(leaves.z[i] == doctest::Approx(expected[i]).epsilon(1e-12));
        CHECK(leaves.i[i] == doctest::Approx(1.0 - expected[i]).epsilon(1e-12));
    }
}

TEST_CASE("exact evolution matches raw composition at depth two") {
    auto w0 = MassDistribution::from_bsc(0.11);
    auto leaves = oracle::exact_evolve(w0, 2);
    REQUIRE(leaves.z.size() == 4);
    const ExplicitChannel raw0 = ExplicitChannel::from_mixture(w0);
    std::size_t leaf = 0;
    for (int first : {0, 1}) {
        ExplicitChannel mid = first ? oracle::raw_plus(raw0) : oracle::raw_minus(raw0);
        for (int second : {0, 1}) {
            ExplicitChannel out = second ? oracle::raw_plus(mid) : oracle::raw_minus(mid);
            CHECK(leaves.z[leaf] == doctest::Approx(out.bhattacharyya()).epsilon(1e-12));
            CHECK(leaves.i[leaf] == doctest::Approx(out.mutual_info()).epsilon(1e-12));
            ++leaf;
        }
    }
}

TEST_CASE("exact evolution at depth zero returns the root functionals") {
    auto w0 = MassDistribution::from_bsc(0.23);
    auto leaves = oracle::exact_evolve(w0, 0);
    REQUIRE(leaves.z.size() == 1);
    CHECK(leaves.z[0] == doctest::Approx(w0.bhattacharyya()).epsilon(1e-15));
}

TEST_CASE("exact evolution refuses projected blowup") {
    std::mt19937_64 rng(43);
    auto big = testing::random_mixture(rng, 40);
    CHECK_THROWS_AS(oracle::exact_evolve(big, 3, 1000), oracle::BlowupError);
    try {
        oracle::exact_evolve(big, 3, 1000);
    } catch (const oracle::BlowupError& e) {
        CHECK(e.level() == 1);
        CHECK(e.projected() == 40 * 41);
    }
}

TEST_CASE("Monte-Carlo Z estimation") {
    auto zero = oracle::monte_carlo_z(MassDistribution::from_bsc(0.0), 1000);
    CHECK(zero.mean == 0.0);
    CHECK(zero.std_error == 0.0);

    auto bsc = oracle::monte_carlo_z(MassDistribution::from_bsc(0.11), 1000000);
    CHECK(std::abs(bsc.mean - 0.6257795) <= 4.0 * bsc.std_error);

    auto bec = oracle::monte_carlo_z(MassDistribution::from_bec(0.3), 1000000);
    CHECK(std::abs(bec.mean - 0.3) <= 4.0 * bec.std_error);
}
