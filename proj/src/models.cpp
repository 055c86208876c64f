#include "sipm/models.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "sipm/metrics.hpp"

namespace sipm {

namespace {

void check_pmf(std::span<const double> pmf) {
    double sum = 0.0;
    for (double p : pmf) {
        if (!(p >= 0.0)) throw std::invalid_argument("pmf: negative entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("pmf: not normalized");
}

} // namespace

double expected_detected(double eta, double n_photons, double n_elements) {
    if (!(eta >= 0.0 && eta <= 1.0))
        throw std::invalid_argument("expected_detected: eta must be in [0,1]");
    if (n_photons < 0.0)
        throw std::invalid_argument("expected_detected: n_photons must be >= 0");
    if (!(n_elements > 0.0))
        throw std::invalid_argument("expected_detected: n_elements must be > 0");
    return n_elements * -std::expm1(-eta * n_photons / n_elements);
}

double linear_detected(double eta, double n_photons) { return eta * n_photons; }

double epsilon_total(double epsilon_nn) {
    if (!(epsilon_nn >= 0.0 && epsilon_nn <= 1.0))
        throw std::invalid_argument("epsilon_total: epsilon_nn must be in [0,1]");
    const double q = 1.0 - epsilon_nn;
    return 1.0 - q * q * q * q;
}

std::vector<double> one_stage_distribution(std::span<const double> fired_pmf,
                                           double epsilon, int n_max) {
    check_pmf(fired_pmf);
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("one_stage_distribution: epsilon must be in [0,1]");
    if (n_max < 0) throw std::invalid_argument("one_stage_distribution: n_max must be >= 0");
    std::vector<double> out(static_cast<std::size_t>(n_max) + 1, 0.0);
    for (std::size_t m = 0; m < fired_pmf.size(); ++m) {
        const double pm = fired_pmf[m];
        if (pm == 0.0) continue;
        // Binomial(m, epsilon) extra counts, computed iteratively.
        double b = std::pow(1.0 - epsilon, static_cast<double>(m));
        if (epsilon == 1.0) {
            const std::size_t k = std::min<std::size_t>(2 * m, n_max);
            out[k] += pm;
            continue;
        }
        const double ratio = epsilon / (1.0 - epsilon);
        for (std::size_t j = 0; j <= m; ++j) {
            const std::size_t k = std::min<std::size_t>(m + j, n_max);
            out[k] += pm * b;
            b *= ratio * static_cast<double>(m - j) / static_cast<double>(j + 1);
        }
    }
    return out;
}

std::vector<double> recursive_distribution(std::span<const double> fired_pmf,
                                           double epsilon, int n_max) {
    check_pmf(fired_pmf);
    if (!(epsilon >= 0.0 && epsilon < 1.0))
        throw std::invalid_argument("recursive_distribution: epsilon must be in [0,1)");
    if (n_max < 0) throw std::invalid_argument("recursive_distribution: n_max must be >= 0");
    std::vector<double> out(static_cast<std::size_t>(n_max) + 1, 0.0);
    for (std::size_t m = 0; m < fired_pmf.size(); ++m) {
        const double pm = fired_pmf[m];
        if (pm == 0.0) continue;
        if (m == 0) {
            out[0] += pm;
            continue;
        }
        // Total extras over m independent geometric chains follow a
        // negative binomial: P(j) = C(m+j-1, j) eps^j (1-eps)^m.
        double nb = std::pow(1.0 - epsilon, static_cast<double>(m));
        double cum = 0.0;
        for (std::size_t j = 0; m + j < static_cast<std::size_t>(n_max); ++j) {
            out[m + j] += pm * nb;
            cum += nb;
            nb *= epsilon * static_cast<double>(m + j) / static_cast<double>(j + 1);
        }
        out[n_max] += pm * std::max(0.0, 1.0 - cum); // overflow tail
    }
    return out;
}

std::vector<double> thermal_occupancy_pmf(double mean_n, int n_elements) {
    if (!(mean_n >= 0.0))
        throw std::invalid_argument("thermal_occupancy_pmf: mean_n must be >= 0");
    if (n_elements < 1)
        throw std::invalid_argument("thermal_occupancy_pmf: n_elements must be >= 1");
    const std::size_t n = static_cast<std::size_t>(n_elements);
    std::vector<double> out(n + 1, 0.0);
    if (mean_n == 0.0) {
        out[0] = 1.0;
        return out;
    }
    // Occupied-cell count evolves as a Markov chain over photon arrivals:
    // from k occupied, the next photon occupies a new cell w.p. (N-k)/N.
    std::vector<double> state(n + 1, 0.0), next(n + 1, 0.0);
    state[0] = 1.0;
    const double r = mean_n / (1.0 + mean_n);
    double p_n = 1.0 / (1.0 + mean_n); // thermal p(n), n = 0, 1, ...
    double tail = 1.0;
    for (long long photons = 0;; ++photons) {
        for (std::size_t k = 0; k <= n; ++k) out[k] += p_n * state[k];
        tail -= p_n;
        if (tail < 1e-14 || photons > 1000000) break;
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t k = 0; k <= n; ++k) {
            if (state[k] == 0.0) continue;
            const double stay = static_cast<double>(k) / n_elements;
            next[k] += state[k] * stay;
            if (k < n) next[k + 1] += state[k] * (1.0 - stay);
        }
        std::swap(state, next);
        p_n *= r;
    }
    // Residual thermal tail mass: photon numbers beyond the cutoff all but
    // surely saturate high occupancy; assign to the current chain state.
    if (tail > 0.0)
        for (std::size_t k = 0; k <= n; ++k) out[k] += tail * state[k];
    return out;
}

std::vector<long long> mc_measured_counts(const Geometry& geom, const PhotonSource& source,
                                          const DetectorParams& params, long long runs,
                                          std::uint64_t seed, int threads) {
    if (runs < 1) throw std::invalid_argument("mc_measured_counts: runs must be >= 1");
    const std::size_t n_bins = static_cast<std::size_t>(geom.cell_count()) + 1;
    const int n_threads = resolve_threads(threads);
    std::vector<std::vector<long long>> partial(
        static_cast<std::size_t>(std::max(1, n_threads)),
        std::vector<long long>(n_bins, 0));

    std::atomic<long long> next_block{0};
    constexpr long long kBlock = 16384;
    const long long n_blocks = (runs + kBlock - 1) / kBlock;
    auto worker = [&](int t) {
        Simulator sim(geom);
        auto& hist = partial[static_cast<std::size_t>(t)];
        for (;;) {
            const long long b = next_block.fetch_add(1);
            if (b >= n_blocks) break;
            const long long begin = b * kBlock;
            const long long end = std::min(runs, begin + kBlock);
            for (long long r = begin; r < end; ++r) {
                RunRng rng(RngSeed{seed, static_cast<std::uint64_t>(r)});
                const long long n = sample_photon_number(source, rng);
                const RunOutcome o = sim.run_detection(n, params, rng);
                ++hist[static_cast<std::size_t>(o.n_fired)];
            }
        }
    };

    if (n_threads <= 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
        for (auto& t : pool) t.join();
    }

    std::vector<long long> counts(n_bins, 0);
    for (const auto& h : partial)
        for (std::size_t i = 0; i < n_bins; ++i) counts[i] += h[i];
    return counts;
}

std::vector<double> mc_measured_distribution(const Geometry& geom, const PhotonSource& source,
                                             const DetectorParams& params, long long runs,
                                             std::uint64_t seed, int threads) {
    const auto counts = mc_measured_counts(geom, source, params, runs, seed, threads);
    std::vector<double> pmf(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
        pmf[i] = static_cast<double>(counts[i]) / static_cast<double>(runs);
    return pmf;
}

} // namespace sipm
