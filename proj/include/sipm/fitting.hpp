#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "sipm/geometry.hpp"
#include "sipm/models.hpp"

namespace sipm {

/// Integer-binned photon-number counts.
struct Histogram {
    std::vector<long long> counts; ///< counts[n] for n = 0..max
    long long total = 0;

    static Histogram from_counts(std::span<const long long> counts);
    static Histogram from_pairs(std::span<const std::pair<int, long long>> pairs);

    int occupied_bins() const noexcept;
    int max_n() const noexcept;
};

struct GridSpec {
    double lo = 0.0;
    double hi = 1.0;
    int points = 2;

    double value(int i) const noexcept {
        return points < 2 ? lo : lo + (hi - lo) * i / (points - 1);
    }
    double spacing() const noexcept {
        return points < 2 ? 0.0 : (hi - lo) / (points - 1);
    }
};

struct FitConfig {
    ModelKind model = ModelKind::FullMC;
    GridSpec mean_n_grid{0.2, 8.0, 9};
    GridSpec epsilon_grid{0.0, 0.3, 7};
    long long mc_runs = 100000; ///< FullMC pmf evaluations per candidate
    std::uint64_t rng_seed = 1; ///< common random numbers across candidates
    bool use_loglike = false;   ///< multinomial G^2 instead of Pearson chi-square
    int threads = 0;
};

struct FitResult {
    double mean_n_hat = 0.0;
    double mean_n_sigma = 0.0;
    double epsilon_hat = 0.0; ///< epsilon_nn for FullMC, total epsilon otherwise
    double epsilon_sigma = 0.0;
    double chi2 = 0.0;
    int dof = 0;
    ModelKind model = ModelKind::FullMC;
    bool boundary_flag = false; ///< optimum or error interval hit a grid edge
};

/// Minimizes the binned chi-square over the parameter grid, refines by
/// zooming the grid around the running optimum, and derives 1-sigma
/// uncertainties from the profile chi-square along each parameter axis.
/// Deterministic for fixed (data, config).
FitResult fit_histogram(const Histogram& data, const FitConfig& config,
                        const Geometry& geom);

/// fit_histogram per config on the same data, sorted by reduced chi-square.
std::vector<FitResult> compare_models(const Histogram& data,
                                      std::span<const FitConfig> configs,
                                      const Geometry& geom);

/// Model pmf at given parameters, for overlays and tests. Length len.
std::vector<double> model_pmf(ModelKind model, double mean_n, double epsilon,
                              const Geometry& geom, long long mc_runs,
                              std::uint64_t seed, std::size_t len, int threads = 0);

} // namespace sipm
