#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sipm/sources.hpp"

using namespace sipm;

TEST_CASE("thermal pmf closed forms") {
    CHECK(thermal_pmf(0, 0.0) == 1.0);
    CHECK(thermal_pmf(3, 0.0) == 0.0);
    for (int k = 0; k < 20; ++k)
        CHECK(thermal_pmf(k, 1.0) == doctest::Approx(std::pow(2.0, -(k + 1))).epsilon(1e-12));
    double sum = 0.0;
    for (int n = 0; n <= 200; ++n) sum += thermal_pmf(n, 5.0);
    CHECK(std::fabs(sum - 1.0) < 1e-9);
    CHECK_THROWS_AS(thermal_pmf(0, -0.5), std::invalid_argument);
    CHECK_THROWS_AS(thermal_pmf(-1, 1.0), std::invalid_argument);
}

TEST_CASE("semi-log linearity of the thermal pmf") {
    const double mean = 2.7;
    const double slope = std::log(mean / (1.0 + mean));
    for (int n = 0; n < 60; ++n) {
        const double d = std::log(thermal_pmf(n + 1, mean)) - std::log(thermal_pmf(n, mean));
        CHECK(d == doctest::Approx(slope).epsilon(1e-12));
    }
}

TEST_CASE("fixed and degenerate sources") {
    RunRng rng(RngSeed{1, 0});
    for (int i = 0; i < 100; ++i) {
        CHECK(sample_photon_number(FixedSource{7}, rng) == 7);
        CHECK(sample_photon_number(ThermalSource{0.0}, rng) == 0);
    }
}

TEST_CASE("thermal sampling matches the pmf") {
    const double mean = 2.0;
    const long long draws = 1000000;
    std::vector<long long> counts(64, 0);
    double sum = 0.0;
    for (long long r = 0; r < draws; ++r) {
        RunRng rng(RngSeed{222, static_cast<std::uint64_t>(r)});
        const long long n = sample_photon_number(ThermalSource{mean}, rng);
        REQUIRE(n >= 0);
        if (n < 64) ++counts[static_cast<std::size_t>(n)];
        sum += static_cast<double>(n);
    }
    // sample mean within 3 standard errors (thermal variance = m(1+m))
    const double sem = std::sqrt(mean * (1.0 + mean) / static_cast<double>(draws));
    CHECK(std::fabs(sum / static_cast<double>(draws) - mean) < 3.0 * sem);
    // per-bin agreement within 4 sigma for n <= 20
    for (int n = 0; n <= 20; ++n) {
        const double p = thermal_pmf(n, mean);
        const double expect = p * static_cast<double>(draws);
        const double sd = std::sqrt(expect * (1.0 - p));
        CHECK(std::fabs(static_cast<double>(counts[static_cast<std::size_t>(n)]) - expect) <
              4.0 * sd);
    }
}

TEST_CASE("thermal thinning closure: survivors stay thermal with mean eta*mu") {
    const double mean = 2.0, eta = 0.6;
    const long long draws = 1000000;
    std::vector<long long> counts(64, 0);
    for (long long r = 0; r < draws; ++r) {
        RunRng rng(RngSeed{333, static_cast<std::uint64_t>(r)});
        const long long n = sample_photon_number(ThermalSource{mean}, rng);
        long long kept = 0;
        for (long long i = 0; i < n; ++i)
            if (rng.next_double() < eta) ++kept;
        if (kept < 64) ++counts[static_cast<std::size_t>(kept)];
    }
    for (int n = 0; n <= 15; ++n) {
        const double p = thermal_pmf(n, eta * mean);
        const double expect = p * static_cast<double>(draws);
        const double sd = std::sqrt(expect * (1.0 - p));
        CHECK(std::fabs(static_cast<double>(counts[static_cast<std::size_t>(n)]) - expect) <
              4.0 * sd);
    }
}
