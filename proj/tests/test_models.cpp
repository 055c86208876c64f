#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "sipm/models.hpp"
#include "sipm/sources.hpp"

using namespace sipm;

namespace {

double pmf_mean(const std::vector<double>& pmf) {
    double m = 0.0;
    for (std::size_t n = 0; n < pmf.size(); ++n) m += static_cast<double>(n) * pmf[n];
    return m;
}

double pmf_sum(const std::vector<double>& pmf) {
    return std::accumulate(pmf.begin(), pmf.end(), 0.0);
}

} // namespace

TEST_CASE("expected_detected evaluates the saturation formula") {
    CHECK(expected_detected(0.0, 50, 100) == 0.0);
    CHECK(expected_detected(1.0, 100, 100) ==
          doctest::Approx(100.0 * (1.0 - std::exp(-1.0))).epsilon(1e-12));
    // linear regime: within 1% of eta*N_ph at low occupancy
    CHECK(expected_detected(0.1, 10, 100) == doctest::Approx(1.0).epsilon(0.01));
    CHECK_THROWS_AS(expected_detected(1.5, 10, 100), std::invalid_argument);
    CHECK_THROWS_AS(expected_detected(0.5, -1, 100), std::invalid_argument);
    CHECK_THROWS_AS(expected_detected(0.5, 10, 0), std::invalid_argument);
}

TEST_CASE("linear_detected and the 10%-deviation ratio") {
    CHECK(linear_detected(0.5, 20) == 10.0);
    CHECK(linear_detected(1.0, 0) == 0.0);
    // saturated / linear at occupancy 0.2 is (1-e^-0.2)/0.2 ~ 0.906
    const double ratio = expected_detected(0.2, 100, 100) / linear_detected(0.2, 100);
    CHECK(ratio == doctest::Approx((1.0 - std::exp(-0.2)) / 0.2).epsilon(1e-9));
}

TEST_CASE("epsilon_total values and shape") {
    CHECK(epsilon_total(0.0) == 0.0);
    CHECK(epsilon_total(1.0) == 1.0);
    CHECK(epsilon_total(0.078) == doctest::Approx(1.0 - std::pow(0.922, 4)).epsilon(1e-12));
    CHECK(epsilon_total(0.078) == doctest::Approx(0.277).epsilon(0.005));
    CHECK(epsilon_total(0.010) == doctest::Approx(0.0394).epsilon(0.005));
    // strictly increasing, concave
    double prev = 0.0, prev_step = 1.0;
    for (int i = 1; i <= 100; ++i) {
        const double v = epsilon_total(0.01 * i);
        CHECK(v > prev);
        const double step = v - prev;
        if (i > 1) CHECK(step < prev_step + 1e-15);
        prev = v;
        prev_step = step;
    }
    CHECK_THROWS_AS(epsilon_total(-0.1), std::invalid_argument);
}

TEST_CASE("one-stage distribution closed forms") {
    const std::vector<double> d1 = {0.0, 1.0};
    auto p = one_stage_distribution(d1, 0.0, 8);
    CHECK(p[1] == doctest::Approx(1.0));
    CHECK(pmf_sum(p) == doctest::Approx(1.0).epsilon(1e-12));

    p = one_stage_distribution(d1, 0.5, 8);
    CHECK(p[1] == doctest::Approx(0.5));
    CHECK(p[2] == doctest::Approx(0.5));

    const std::vector<double> d2 = {0.0, 0.0, 1.0};
    p = one_stage_distribution(d2, 0.5, 8);
    CHECK(p[2] == doctest::Approx(0.25));
    CHECK(p[3] == doctest::Approx(0.5));
    CHECK(p[4] == doctest::Approx(0.25));

    // mass never moves below the fired count
    p = one_stage_distribution(d2, 0.3, 8);
    CHECK(p[0] == 0.0);
    CHECK(p[1] == 0.0);

    const std::vector<double> bad = {0.5, 0.4}; // sums to 0.9
    CHECK_THROWS_AS(one_stage_distribution(bad, 0.5, 8), std::invalid_argument);
}

TEST_CASE("recursive distribution geometric law") {
    const std::vector<double> d1 = {0.0, 1.0};
    auto p = recursive_distribution(d1, 0.0, 8);
    CHECK(p[1] == doctest::Approx(1.0));

    p = recursive_distribution(d1, 0.5, 40);
    for (int j = 0; j < 8; ++j)
        CHECK(p[static_cast<std::size_t>(1 + j)] ==
              doctest::Approx(std::pow(0.5, j + 1)).epsilon(1e-9));
    CHECK(pmf_sum(p) == doctest::Approx(1.0).epsilon(1e-12));

    // mean measured = mean fired / (1 - eps)
    const std::vector<double> fired = {0.1, 0.3, 0.4, 0.2};
    const double eps = 0.25;
    p = recursive_distribution(fired, eps, 200);
    CHECK(pmf_mean(p) == doctest::Approx(pmf_mean(const_cast<std::vector<double>&>(fired)) /
                                         (1.0 - eps))
                             .epsilon(1e-6));

    CHECK_THROWS_AS(recursive_distribution(d1, 1.0, 8), std::invalid_argument);
}

TEST_CASE("thermal occupancy pmf matches direct simulation") {
    Geometry g(10, 10);
    const double mean = 2.0;
    const auto analytic = thermal_occupancy_pmf(mean, 100);
    CHECK(pmf_sum(analytic) == doctest::Approx(1.0).epsilon(1e-9));
    const long long runs = 200000;
    const auto mc = mc_measured_distribution(g, ThermalSource{mean},
                                             DetectorParams(1.0, 0.0), runs, 404);
    for (int n = 0; n <= 15; ++n) {
        const double p = analytic[static_cast<std::size_t>(n)];
        const double sd = std::sqrt(p * (1.0 - p) / static_cast<double>(runs));
        CHECK(std::fabs(mc[static_cast<std::size_t>(n)] - p) < 4.0 * sd + 1e-12);
    }
}

TEST_CASE("mc measured distribution trivial and low-occupancy limits") {
    Geometry g(10, 10);
    auto pmf = mc_measured_distribution(g, ThermalSource{0.0}, DetectorParams(1.0, 0.0),
                                        1000, 1);
    CHECK(pmf[0] == doctest::Approx(1.0));

    // low occupancy: measured counts stay thermal with mean eta*mu
    const double mean = 0.5, eta = 0.4;
    const long long runs = 300000;
    pmf = mc_measured_distribution(g, ThermalSource{mean}, DetectorParams(eta, 0.0),
                                   runs, 2);
    for (int n = 0; n <= 6; ++n) {
        const double p = thermal_pmf(n, eta * mean);
        const double sd = std::sqrt(p * (1.0 - p) / static_cast<double>(runs));
        CHECK(std::fabs(pmf[static_cast<std::size_t>(n)] - p) < 4.0 * sd + 2e-4);
    }
}

TEST_CASE("zero-photon probability is crosstalk-invariant") {
    Geometry g(10, 10);
    const long long runs = 400000;
    const auto with_ct = mc_measured_counts(g, ThermalSource{2.0},
                                            DetectorParams(0.7, 0.078), runs, 51);
    const auto no_ct = mc_measured_counts(g, ThermalSource{2.0},
                                          DetectorParams(0.7, 0.0), runs, 52);
    const double p1 = static_cast<double>(with_ct[0]) / static_cast<double>(runs);
    const double p2 = static_cast<double>(no_ct[0]) / static_cast<double>(runs);
    const double sd = std::sqrt((p1 * (1 - p1) + p2 * (1 - p2)) / static_cast<double>(runs));
    CHECK(std::fabs(p1 - p2) < 3.0 * sd);
}

TEST_CASE("all three models agree to first order in epsilon") {
    // total epsilon 0.01 <-> epsilon_nn = 1 - (1-0.01)^(1/4)
    Geometry g(10, 10);
    const double eps = 0.01;
    const double eps_nn = 1.0 - std::pow(1.0 - eps, 0.25);
    const double mean = 2.0;
    const long long runs = 400000;
    const auto full = mc_measured_distribution(g, ThermalSource{mean},
                                               DetectorParams(1.0, eps_nn), runs, 77);
    const auto fired = thermal_occupancy_pmf(mean, 100);
    const auto one = one_stage_distribution(fired, eps, 400);
    const auto rec = recursive_distribution(fired, eps, 400);
    const double m_full = pmf_mean(full);
    const double m_one = pmf_mean(one);
    const double m_rec = pmf_mean(rec);
    CHECK(std::fabs(m_one - m_rec) / m_one < 0.01);
    CHECK(std::fabs(m_full - m_one) / m_one < 0.01);
    CHECK(pmf_sum(one) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(pmf_sum(rec) == doctest::Approx(1.0).epsilon(1e-9));
}
