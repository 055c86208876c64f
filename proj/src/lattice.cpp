#include "sipm/lattice.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace sipm {

DetectorParams::DetectorParams(double eta_, double epsilon_nn_)
    : eta(eta_), epsilon_nn(epsilon_nn_) {
    if (!(eta >= 0.0 && eta <= 1.0))
        throw std::invalid_argument("DetectorParams: eta must be in [0,1]");
    if (!(epsilon_nn >= 0.0 && epsilon_nn <= 1.0))
        throw std::invalid_argument("DetectorParams: epsilon_nn must be in [0,1]");
}

Simulator::Simulator(const Geometry& g) : geom_(&g) {
    const std::size_t n = static_cast<std::size_t>(g.cell_count());
    state_.assign(n, 0);
    stage_.assign(n, -1);
    ident_.resize(n);
    std::iota(ident_.begin(), ident_.end(), 0);
    frontier_.reserve(n);
    next_.reserve(n);
    seeds_.reserve(n);
}

void Simulator::reset_cells() {
    std::fill(state_.begin(), state_.end(), std::uint8_t{0});
    std::fill(stage_.begin(), stage_.end(), std::int16_t{-1});
}

std::vector<int> Simulator::place_photons(long long n_photons, double eta, RunRng& rng) {
    if (n_photons < 0)
        throw std::invalid_argument("place_photons: n_photons must be >= 0");
    if (!(eta >= 0.0 && eta <= 1.0))
        throw std::invalid_argument("place_photons: eta must be in [0,1]");
    reset_cells();
    const auto n_cells = static_cast<std::uint64_t>(geom_->cell_count());
    std::vector<int> seeds;
    for (long long i = 0; i < n_photons; ++i) {
        const int cell = static_cast<int>(rng.next_below(n_cells));
        const double u = rng.next_double(); // always consumed, keeps draw count fixed
        if (u < eta && state_[cell] == static_cast<std::uint8_t>(CellState::Untriggered)) {
            state_[cell] = static_cast<std::uint8_t>(CellState::Seed);
            seeds.push_back(cell);
        }
    }
    std::sort(seeds.begin(), seeds.end());
    return seeds;
}

RunOutcome Simulator::propagate_crosstalk(std::span<const int> seeds, double epsilon_nn,
                                          RunRng& rng, bool keep_grid, int max_stages) {
    if (!(epsilon_nn >= 0.0 && epsilon_nn <= 1.0))
        throw std::invalid_argument("propagate_crosstalk: epsilon_nn must be in [0,1]");
    const int n_cells = geom_->cell_count();
    reset_cells();
    frontier_.clear();
    for (int s : seeds) {
        if (s < 0 || s >= n_cells)
            throw std::invalid_argument("propagate_crosstalk: seed cell out of range");
        if (state_[s] != static_cast<std::uint8_t>(CellState::Untriggered))
            throw std::invalid_argument("propagate_crosstalk: duplicate seed cell");
        state_[s] = static_cast<std::uint8_t>(CellState::Seed);
        stage_[s] = 0;
        frontier_.push_back(s);
    }
    std::sort(frontier_.begin(), frontier_.end());

    int stage = 0;
    int fired = static_cast<int>(frontier_.size());
    while (!frontier_.empty() && stage < max_stages) {
        next_.clear();
        for (int u : frontier_) {
            const std::uint64_t base = static_cast<std::uint64_t>(u) * Geometry::kDirections;
            for (int d = 0; d < Geometry::kDirections; ++d) {
                const int v = geom_->neighbour(u, d);
                if (v < 0 || state_[v] != static_cast<std::uint8_t>(CellState::Untriggered))
                    continue;
                if (rng.edge_uniform(base + d) < epsilon_nn) {
                    state_[v] = static_cast<std::uint8_t>(CellState::Crosstalk);
                    stage_[v] = static_cast<std::int16_t>(stage + 1);
                    next_.push_back(v);
                }
            }
        }
        if (next_.empty()) break;
        ++stage;
        fired += static_cast<int>(next_.size());
        std::sort(next_.begin(), next_.end());
        std::swap(frontier_, next_);
    }

    RunOutcome out;
    out.n_seed = static_cast<int>(seeds.size());
    out.n_fired = fired;
    out.n_crosstalk = fired - out.n_seed;
    out.n_stages = stage;
    if (keep_grid) {
        out.has_grid = true;
        out.state.resize(state_.size());
        for (std::size_t i = 0; i < state_.size(); ++i)
            out.state[i] = static_cast<CellState>(state_[i]);
        out.stage.assign(stage_.begin(), stage_.end());
    }
    return out;
}

RunOutcome Simulator::run_fixed_seeds(int n_trg, double epsilon_nn, RunRng& rng,
                                      bool keep_grid, int max_stages) {
    const int n_cells = geom_->cell_count();
    if (n_trg < 1 || n_trg > n_cells)
        throw std::invalid_argument("run_fixed_seeds: n_trg must be in [1, cell count]");
    // partial Fisher-Yates over the identity permutation
    std::iota(ident_.begin(), ident_.end(), 0);
    seeds_.clear();
    for (int i = 0; i < n_trg; ++i) {
        const int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n_cells - i)));
        std::swap(ident_[i], ident_[j]);
        seeds_.push_back(ident_[i]);
    }
    return propagate_crosstalk(seeds_, epsilon_nn, rng, keep_grid, max_stages);
}

RunOutcome Simulator::run_detection(long long n_photons, const DetectorParams& params,
                                    RunRng& rng, bool keep_grid, int max_stages) {
    std::vector<int> seeds = place_photons(n_photons, params.eta, rng);
    RunOutcome out = propagate_crosstalk(seeds, params.epsilon_nn, rng, keep_grid, max_stages);
    out.n_photons = n_photons;
    return out;
}

} // namespace sipm
