#include "sipm/sources.hpp"

#include <cmath>
#include <stdexcept>

namespace sipm {

double thermal_pmf(long long n, double mean_n) {
    if (n < 0)
        throw std::invalid_argument("thermal_pmf: n must be >= 0");
    if (!(mean_n >= 0.0))
        throw std::invalid_argument("thermal_pmf: mean_n must be >= 0");
    if (mean_n == 0.0) return n == 0 ? 1.0 : 0.0;
    const double log_ratio = std::log(mean_n) - std::log1p(mean_n);
    return std::exp(static_cast<double>(n) * log_ratio - std::log1p(mean_n));
}

long long sample_photon_number(const PhotonSource& source, RunRng& rng) {
    return std::visit(
        [&rng](const auto& s) -> long long {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, FixedSource>) {
                if (s.n < 0)
                    throw std::invalid_argument("FixedSource: n must be >= 0");
                return s.n;
            } else {
                if (!(s.mean_n >= 0.0))
                    throw std::invalid_argument("ThermalSource: mean_n must be >= 0");
                if (s.mean_n == 0.0) {
                    rng.next_double(); // keep the draw count source-independent
                    return 0;
                }
                const double u = rng.next_double();
                const double log_ratio = std::log(s.mean_n) - std::log1p(s.mean_n);
                return static_cast<long long>(std::floor(std::log1p(-u) / log_ratio));
            }
        },
        source);
}

} // namespace sipm
