#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sipm/geometry.hpp"
#include "sipm/lattice.hpp"
#include "sipm/sources.hpp"

namespace sipm {

enum class ModelKind { FullMC, OneStage, Recursive };

/// <N_detected> = N_elements * (1 - exp(-eta * N_photons / N_elements)).
double expected_detected(double eta, double n_photons, double n_elements);

/// Linear limit <N_detected> = eta * N_photons.
double linear_detected(double eta, double n_photons);

/// Overall probability that a fired cell produces at least one crosstalk,
/// 1 - (1 - epsilon_nn)^4.
double epsilon_total(double epsilon_nn);

/// One-stage crosstalk baseline: measured = m + Binomial(m, epsilon),
/// convolved over fired_pmf. Output has n_max+1 bins; overflow mass is
/// folded into the top bin.
std::vector<double> one_stage_distribution(std::span<const double> fired_pmf,
                                           double epsilon, int n_max);

/// Recursive crosstalk baseline: each fired cell adds an independent
/// geometric chain, P(adds j) = epsilon^j * (1 - epsilon). epsilon = 1 is
/// rejected (divergent chains).
std::vector<double> recursive_distribution(std::span<const double> fired_pmf,
                                           double epsilon, int n_max);

/// Distribution of the number of distinct occupied cells when a thermal
/// photon number with the given mean is dropped uniformly on n_elements
/// cells. This is the crosstalk-free fired pmf including the one-avalanche
/// loss; length n_elements + 1.
std::vector<double> thermal_occupancy_pmf(double mean_n, int n_elements);

/// Raw histogram of RunOutcome.n_fired over `runs` pulses with the photon
/// number drawn from the source each pulse; length cell_count + 1.
std::vector<long long> mc_measured_counts(const Geometry& geom, const PhotonSource& source,
                                          const DetectorParams& params, long long runs,
                                          std::uint64_t seed, int threads = 0);

/// Same, normalized to a pmf.
std::vector<double> mc_measured_distribution(const Geometry& geom, const PhotonSource& source,
                                             const DetectorParams& params, long long runs,
                                             std::uint64_t seed, int threads = 0);

} // namespace sipm
