#include "sipm/metrics.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

namespace sipm {

namespace {

std::atomic<int> g_default_threads{0};

struct Accum {
    double sum = 0.0;
    double sumsq = 0.0;

    void add(double x) noexcept {
        sum += x;
        sumsq += x * x;
    }
    void merge(const Accum& o) noexcept {
        sum += o.sum;
        sumsq += o.sumsq;
    }
    Stat stat(long long n) const noexcept {
        Stat s;
        if (n <= 0) return s;
        s.mean = sum / static_cast<double>(n);
        if (n > 1) {
            const double var =
                std::max(0.0, (sumsq - sum * s.mean) / static_cast<double>(n - 1));
            s.sem = std::sqrt(var / static_cast<double>(n));
        }
        return s;
    }
};

struct RunAccums {
    Accum crosstalk, stages, fired, cluster;

    void add(const RunOutcome& o) noexcept {
        crosstalk.add(o.n_crosstalk);
        stages.add(o.n_stages);
        fired.add(o.n_fired);
        cluster.add(o.n_seed > 0 ? static_cast<double>(o.n_fired) / o.n_seed : 0.0);
    }
    void merge(const RunAccums& o) noexcept {
        crosstalk.merge(o.crosstalk);
        stages.merge(o.stages);
        fired.merge(o.fired);
        cluster.merge(o.cluster);
    }
};

constexpr long long kChunk = 8192;

// Runs are split into fixed chunks and chunk sums are merged in chunk
// order, so the reduction is bit-identical for any thread count.
template <typename RunFn>
EnsembleSummary run_ensemble(const Geometry& geom, long long runs, std::uint64_t seed,
                             int threads, RunFn&& fn) {
    if (runs < 1) throw std::invalid_argument("ensemble: runs must be >= 1");
    const long long n_chunks = (runs + kChunk - 1) / kChunk;
    std::vector<RunAccums> chunk_acc(static_cast<std::size_t>(n_chunks));
    const int n_threads = resolve_threads(threads);

    std::atomic<long long> next_chunk{0};
    auto worker = [&] {
        Simulator sim(geom);
        for (;;) {
            const long long c = next_chunk.fetch_add(1);
            if (c >= n_chunks) break;
            RunAccums acc;
            const long long begin = c * kChunk;
            const long long end = std::min(runs, begin + kChunk);
            for (long long r = begin; r < end; ++r) {
                RunRng rng(RngSeed{seed, static_cast<std::uint64_t>(r)});
                acc.add(fn(sim, rng));
            }
            chunk_acc[static_cast<std::size_t>(c)] = acc;
        }
    };

    if (n_threads <= 1 || n_chunks == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    RunAccums total;
    for (const auto& a : chunk_acc) total.merge(a);

    EnsembleSummary s;
    s.runs = runs;
    s.crosstalk = total.crosstalk.stat(runs);
    s.stages = total.stages.stat(runs);
    s.fired = total.fired.stat(runs);
    s.cluster = total.cluster.stat(runs);
    return s;
}

// One derived seed per series; grid points within a series share random
// numbers so curves are smooth in the sweep variable.
std::uint64_t series_seed(std::uint64_t master, std::size_t series_idx) {
    return mix64(master ^ mix64(0x5EEDBA5Eull + series_idx));
}

SweepResult fixed_seed_sweep(const Geometry& geom, std::span<const int> n_trg_grid,
                             std::span<const double> epsilon_list, long long runs,
                             std::uint64_t seed, int threads) {
    SweepResult result;
    result.x_values.assign(n_trg_grid.begin(), n_trg_grid.end());
    result.series.resize(epsilon_list.size());
    for (std::size_t e = 0; e < epsilon_list.size(); ++e) {
        auto& series = result.series[e];
        series.param = epsilon_list[e];
        series.points.reserve(n_trg_grid.size());
        const std::uint64_t s = series_seed(seed, e);
        for (int n_trg : n_trg_grid)
            series.points.push_back(
                ensemble_fixed_seeds(geom, n_trg, epsilon_list[e], runs, s, threads));
    }
    return result;
}

} // namespace

void set_default_threads(int threads) { g_default_threads.store(threads); }

int resolve_threads(int threads) {
    if (threads > 0) return threads;
    const int global = g_default_threads.load();
    if (global > 0) return global;
    if (const char* env = std::getenv("SIPMSIM_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

EnsembleSummary ensemble_fixed_seeds(const Geometry& geom, int n_trg, double epsilon_nn,
                                     long long runs, std::uint64_t seed, int threads,
                                     int max_stages) {
    if (n_trg < 1 || n_trg > geom.cell_count())
        throw std::invalid_argument("ensemble_fixed_seeds: n_trg out of range");
    return run_ensemble(geom, runs, seed, threads, [=](Simulator& sim, RunRng& rng) {
        return sim.run_fixed_seeds(n_trg, epsilon_nn, rng, false, max_stages);
    });
}

EnsembleSummary ensemble_detection(const Geometry& geom, long long n_photons,
                                   const DetectorParams& params, long long runs,
                                   std::uint64_t seed, int threads) {
    return run_ensemble(geom, runs, seed, threads, [=](Simulator& sim, RunRng& rng) {
        return sim.run_detection(n_photons, params, rng);
    });
}

SweepResult ct_curve(const Geometry& geom, std::span<const int> n_trg_grid,
                     std::span<const double> epsilon_list, long long runs,
                     std::uint64_t seed, int threads) {
    return fixed_seed_sweep(geom, n_trg_grid, epsilon_list, runs, seed, threads);
}

SweepResult cluster_size_curve(const Geometry& geom, std::span<const int> n_trg_grid,
                               std::span<const double> epsilon_list, long long runs,
                               std::uint64_t seed, int threads) {
    return fixed_seed_sweep(geom, n_trg_grid, epsilon_list, runs, seed, threads);
}

SweepResult stage_curve(const Geometry& geom, std::span<const int> n_trg_grid,
                        std::span<const double> epsilon_list, long long runs,
                        std::uint64_t seed, int threads) {
    return fixed_seed_sweep(geom, n_trg_grid, epsilon_list, runs, seed, threads);
}

SweepResult saturation_curve(const Geometry& geom, std::span<const double> eta_grid,
                             std::span<const long long> n_photons_list, long long runs,
                             std::uint64_t seed, int threads) {
    SweepResult result;
    result.x_values.assign(eta_grid.begin(), eta_grid.end());
    result.series.resize(n_photons_list.size());
    for (std::size_t p = 0; p < n_photons_list.size(); ++p) {
        auto& series = result.series[p];
        series.param = static_cast<double>(n_photons_list[p]);
        series.points.reserve(eta_grid.size());
        const std::uint64_t s = series_seed(seed, p);
        for (double eta : eta_grid) {
            DetectorParams params(eta, 0.0);
            series.points.push_back(
                ensemble_detection(geom, n_photons_list[p], params, runs, s, threads));
        }
    }
    return result;
}

int critical_triggers(const Geometry& geom, double epsilon_nn, long long runs,
                      std::uint64_t seed, int threads) {
    if (!(epsilon_nn > 0.0 && epsilon_nn <= 1.0))
        throw std::invalid_argument("critical_triggers: epsilon_nn must be in (0,1]");
    const int n_cells = geom.cell_count();
    const double baseline =
        ensemble_fixed_seeds(geom, 1, epsilon_nn, runs, seed, threads).cluster.mean;
    const double limit = 0.9 * baseline;
    for (int n_trg = 2; n_trg <= n_cells; ++n_trg) {
        const double cluster =
            ensemble_fixed_seeds(geom, n_trg, epsilon_nn, runs, seed, threads).cluster.mean;
        if (cluster < limit) return n_trg;
    }
    return n_cells;
}

LinearityThreshold linearity_threshold(const Geometry& geom, long long n_photons,
                                       long long runs, std::uint64_t seed, int threads) {
    if (n_photons < 1)
        throw std::invalid_argument("linearity_threshold: n_photons must be >= 1");
    LinearityThreshold out;
    const int steps = 50;
    for (int i = 1; i <= steps; ++i) {
        const double eta = static_cast<double>(i) / steps;
        DetectorParams params(eta, 0.0);
        const double mean =
            ensemble_detection(geom, n_photons, params, runs, seed, threads).fired.mean;
        const double linear = eta * static_cast<double>(n_photons);
        if (std::abs(mean - linear) > 0.10 * linear) {
            out.reached = true;
            out.eta = eta;
            out.occupancy = eta * static_cast<double>(n_photons) / geom.cell_count();
            return out;
        }
    }
    return out; // not reached
}

} // namespace sipm
