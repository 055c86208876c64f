#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "sipm/geometry.hpp"
#include "sipm/rng.hpp"

namespace sipm {

/// Detection efficiency and per-neighbour crosstalk probability.
struct DetectorParams {
    double eta;
    double epsilon_nn;

    DetectorParams(double eta_, double epsilon_nn_);
};

enum class CellState : std::uint8_t { Untriggered = 0, Seed = 1, Crosstalk = 2 };

struct RunOutcome {
    long long n_photons = 0; ///< impinging photons (0 when seeds were placed directly)
    int n_seed = 0;          ///< initially triggered cells, N_trg
    int n_crosstalk = 0;     ///< cells triggered by crosstalk
    int n_stages = 0;        ///< last productive crosstalk wave (0 if none)
    int n_fired = 0;         ///< n_seed + n_crosstalk

    bool has_grid = false;
    std::vector<CellState> state; ///< per-cell state when has_grid
    std::vector<std::int16_t> stage; ///< per-cell stage, -1 untriggered
};

/// Trigger/crosstalk percolation engine. Holds per-run scratch buffers, so
/// one instance must not be shared between threads; distinct instances on
/// distinct (seed, stream) pairs are fully independent.
class Simulator {
public:
    static constexpr int kNoStageCap = std::numeric_limits<int>::max();

    explicit Simulator(const Geometry& g);

    const Geometry& geometry() const noexcept { return *geom_; }

    /// Drops n_photons uniformly on the lattice; each converts its cell to
    /// Seed with probability eta. A cell already Seed absorbs further
    /// photons without effect. Returns the distinct seed set (ascending).
    std::vector<int> place_photons(long long n_photons, double eta, RunRng& rng);

    /// Stage-synchronous crosstalk percolation from the given distinct seed
    /// cells. Stage k: every cell triggered at stage k-1 makes one
    /// Bernoulli(epsilon_nn) attempt on each still-untriggered neighbour,
    /// row-major order. Stops when a stage produces no new triggers, or at
    /// max_stages.
    RunOutcome propagate_crosstalk(std::span<const int> seeds, double epsilon_nn,
                                   RunRng& rng, bool keep_grid = false,
                                   int max_stages = kNoStageCap);

    /// n_trg distinct uniformly random seed cells, then crosstalk.
    RunOutcome run_fixed_seeds(int n_trg, double epsilon_nn, RunRng& rng,
                               bool keep_grid = false, int max_stages = kNoStageCap);

    /// place_photons then propagate_crosstalk.
    RunOutcome run_detection(long long n_photons, const DetectorParams& params,
                             RunRng& rng, bool keep_grid = false,
                             int max_stages = kNoStageCap);

private:
    void reset_cells();

    const Geometry* geom_;
    std::vector<std::uint8_t> state_;
    std::vector<std::int16_t> stage_;
    std::vector<int> frontier_;
    std::vector<int> next_;
    std::vector<int> seeds_;
    std::vector<int> ident_; ///< identity permutation for seed sampling
};

} // namespace sipm
