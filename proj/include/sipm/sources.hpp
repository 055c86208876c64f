#pragma once

#include <variant>

#include "sipm/rng.hpp"

namespace sipm {

/// Bose-Einstein photon statistics with mean photon number mean_n.
struct ThermalSource {
    double mean_n;
};

/// Deterministic photon number per pulse.
struct FixedSource {
    long long n;
};

using PhotonSource = std::variant<ThermalSource, FixedSource>;

/// p(n) = (1/(1+m)) * (m/(1+m))^n. Evaluated in log space; log p is affine in n.
double thermal_pmf(long long n, double mean_n);

/// Inverse-CDF draw from the source pmf.
long long sample_photon_number(const PhotonSource& source, RunRng& rng);

} // namespace sipm
