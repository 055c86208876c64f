#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sipm/geometry.hpp"
#include "sipm/lattice.hpp"

namespace sipm {

struct Stat {
    double mean = 0.0;
    double sem = 0.0; ///< standard error of the mean
};

struct EnsembleSummary {
    long long runs = 0;
    Stat crosstalk;
    Stat stages;
    Stat fired;
    Stat cluster; ///< n_fired / n_seed
};

struct SweepSeries {
    double param = 0.0; ///< swept parameter (epsilon_nn or N_photons)
    std::vector<EnsembleSummary> points;
};

struct SweepResult {
    std::vector<double> x_values;
    std::vector<SweepSeries> series;
};

/// Global thread-count default; 0 means SIPMSIM_THREADS or hardware
/// concurrency. Results are independent of the thread count.
void set_default_threads(int threads);
int resolve_threads(int threads);

EnsembleSummary ensemble_fixed_seeds(const Geometry& geom, int n_trg, double epsilon_nn,
                                     long long runs, std::uint64_t seed, int threads = 0,
                                     int max_stages = Simulator::kNoStageCap);

EnsembleSummary ensemble_detection(const Geometry& geom, long long n_photons,
                                   const DetectorParams& params, long long runs,
                                   std::uint64_t seed, int threads = 0);

/// Mean crosstalk count per (n_trg, epsilon_nn) grid point.
SweepResult ct_curve(const Geometry& geom, std::span<const int> n_trg_grid,
                     std::span<const double> epsilon_list, long long runs,
                     std::uint64_t seed, int threads = 0);

/// Mean triggered elements per initial trigger, n_fired / n_seed.
SweepResult cluster_size_curve(const Geometry& geom, std::span<const int> n_trg_grid,
                               std::span<const double> epsilon_list, long long runs,
                               std::uint64_t seed, int threads = 0);

/// Mean crosstalk wave count.
SweepResult stage_curve(const Geometry& geom, std::span<const int> n_trg_grid,
                        std::span<const double> epsilon_list, long long runs,
                        std::uint64_t seed, int threads = 0);

/// Mean detected count vs detection efficiency, one series per photon
/// number. Crosstalk is off so only the loss mechanism acts.
SweepResult saturation_curve(const Geometry& geom, std::span<const double> eta_grid,
                             std::span<const long long> n_photons_list, long long runs,
                             std::uint64_t seed, int threads = 0);

/// Smallest n_trg whose mean cluster size falls below 90% of the n_trg=1
/// baseline; cell count if never crossed.
int critical_triggers(const Geometry& geom, double epsilon_nn, long long runs,
                      std::uint64_t seed, int threads = 0);

struct LinearityThreshold {
    bool reached = false;
    double occupancy = 0.0; ///< eta * n_photons / n_elements at the crossing
    double eta = 0.0;
};

/// Scans eta and returns the occupancy at which the mean detected count
/// first deviates more than 10% from the linear value eta * n_photons.
LinearityThreshold linearity_threshold(const Geometry& geom, long long n_photons,
                                       long long runs, std::uint64_t seed,
                                       int threads = 0);

} // namespace sipm
