#include "sipmsim.h"

#include <cstring>
#include <exception>
#include <new>
#include <stdexcept>
#include <string>
#include <vector>

#include "sipm/fitting.hpp"
#include "sipm/geometry.hpp"
#include "sipm/lattice.hpp"
#include "sipm/metrics.hpp"
#include "sipm/models.hpp"
#include "sipm/sources.hpp"

namespace {

thread_local std::string g_error;

template <typename Fn>
sipm_status guarded(Fn&& fn) {
    try {
        fn();
        g_error.clear();
        return SIPM_OK;
    } catch (const std::invalid_argument& e) {
        g_error = e.what();
        return SIPM_ERR_INVALID_ARGUMENT;
    } catch (const std::exception& e) {
        g_error = e.what();
        return SIPM_ERR_NUMERIC;
    } catch (...) {
        g_error = "unknown error";
        return SIPM_ERR_NUMERIC;
    }
}

sipm_status fail_arg(const char* msg) {
    g_error = msg;
    return SIPM_ERR_INVALID_ARGUMENT;
}

sipm::PhotonSource make_source(int kind, double value) {
    switch (kind) {
    case SIPM_SOURCE_THERMAL:
        return sipm::ThermalSource{value};
    case SIPM_SOURCE_FIXED:
        return sipm::FixedSource{static_cast<long long>(value)};
    default:
        throw std::invalid_argument("unknown source kind");
    }
}

void export_outcome(const sipm::RunOutcome& o, sipm_run_outcome* out, int* cell_state,
                    int* cell_stage) {
    if (out) {
        out->n_photons = o.n_photons;
        out->n_seed = o.n_seed;
        out->n_crosstalk = o.n_crosstalk;
        out->n_stages = o.n_stages;
        out->n_fired = o.n_fired;
    }
    if (cell_state)
        for (std::size_t i = 0; i < o.state.size(); ++i)
            cell_state[i] = static_cast<int>(o.state[i]);
    if (cell_stage)
        for (std::size_t i = 0; i < o.stage.size(); ++i)
            cell_stage[i] = o.stage[i];
}

} // namespace

struct sipm_detector {
    sipm::Geometry geom;
    sipm::DetectorParams params;
};

struct sipm_sweep {
    int kind = 0;
    sipm::SweepResult result;
};

extern "C" {

const char* sipm_last_error(void) { return g_error.c_str(); }

void sipm_set_default_threads(int threads) { sipm::set_default_threads(threads); }

sipm_status sipm_detector_create(int rows, int cols, double eta, double epsilon_nn,
                                 sipm_detector** out) {
    if (!out) return fail_arg("out is null");
    *out = nullptr;
    return guarded([&] {
        *out = new sipm_detector{sipm::Geometry(rows, cols),
                                 sipm::DetectorParams(eta, epsilon_nn)};
    });
}

void sipm_detector_destroy(sipm_detector* det) { delete det; }

int sipm_detector_cells(const sipm_detector* det) {
    return det ? det->geom.cell_count() : 0;
}

sipm_status sipm_run_detection(const sipm_detector* det, long long n_photons,
                               uint64_t seed, uint64_t stream, sipm_run_outcome* out,
                               int* cell_state, int* cell_stage) {
    if (!det) return fail_arg("detector is null");
    return guarded([&] {
        sipm::Simulator sim(det->geom);
        sipm::RunRng rng(sipm::RngSeed{seed, stream});
        const bool grid = cell_state || cell_stage;
        const auto o = sim.run_detection(n_photons, det->params, rng, grid);
        export_outcome(o, out, cell_state, cell_stage);
    });
}

sipm_status sipm_run_fixed_seeds(const sipm_detector* det, int n_trg, uint64_t seed,
                                 uint64_t stream, sipm_run_outcome* out,
                                 int* cell_state, int* cell_stage) {
    if (!det) return fail_arg("detector is null");
    return guarded([&] {
        sipm::Simulator sim(det->geom);
        sipm::RunRng rng(sipm::RngSeed{seed, stream});
        const bool grid = cell_state || cell_stage;
        const auto o = sim.run_fixed_seeds(n_trg, det->params.epsilon_nn, rng, grid);
        export_outcome(o, out, cell_state, cell_stage);
    });
}

namespace {

void export_summary(const sipm::EnsembleSummary& s, sipm_ensemble_summary* out) {
    out->runs = s.runs;
    out->crosstalk = {s.crosstalk.mean, s.crosstalk.sem};
    out->stages = {s.stages.mean, s.stages.sem};
    out->fired = {s.fired.mean, s.fired.sem};
    out->cluster = {s.cluster.mean, s.cluster.sem};
}

} // namespace

sipm_status sipm_ensemble_fixed_seeds(const sipm_detector* det, int n_trg,
                                      long long runs, uint64_t seed, int max_stages,
                                      sipm_ensemble_summary* out) {
    if (!det || !out) return fail_arg("null argument");
    return guarded([&] {
        const int cap = max_stages > 0 ? max_stages : sipm::Simulator::kNoStageCap;
        const auto s = sipm::ensemble_fixed_seeds(det->geom, n_trg,
                                                  det->params.epsilon_nn, runs, seed,
                                                  0, cap);
        export_summary(s, out);
    });
}

sipm_status sipm_ensemble_detection(const sipm_detector* det, int source_kind,
                                    double source_value, long long runs,
                                    uint64_t seed, sipm_ensemble_summary* out) {
    if (!det || !out) return fail_arg("null argument");
    return guarded([&] {
        if (source_kind != SIPM_SOURCE_FIXED)
            throw std::invalid_argument(
                "ensemble_detection requires a fixed photon number; "
                "use sipm_measured_counts for random sources");
        const auto s = sipm::ensemble_detection(
            det->geom, static_cast<long long>(source_value), det->params, runs, seed);
        export_summary(s, out);
    });
}

sipm_status sipm_measured_counts(const sipm_detector* det, int source_kind,
                                 double source_value, long long runs, uint64_t seed,
                                 long long* counts) {
    if (!det || !counts) return fail_arg("null argument");
    return guarded([&] {
        const auto src = make_source(source_kind, source_value);
        const auto c = sipm::mc_measured_counts(det->geom, src, det->params, runs, seed);
        std::memcpy(counts, c.data(), c.size() * sizeof(long long));
    });
}

sipm_status sipm_sweep_run(const sipm_detector* det, int kind, const double* x_grid,
                           int n_x, const double* series_params, int n_series,
                           long long runs, uint64_t seed, sipm_sweep** out) {
    if (!det || !out) return fail_arg("null argument");
    if (!x_grid || n_x < 1 || !series_params || n_series < 1)
        return fail_arg("empty sweep grid");
    *out = nullptr;
    return guarded([&] {
        sipm::SweepResult result;
        if (kind == SIPM_SWEEP_SATURATION) {
            std::vector<double> etas(x_grid, x_grid + n_x);
            std::vector<long long> nph(n_series);
            for (int i = 0; i < n_series; ++i)
                nph[i] = static_cast<long long>(series_params[i]);
            result = sipm::saturation_curve(det->geom, etas, nph, runs, seed);
        } else {
            std::vector<int> n_trg(n_x);
            for (int i = 0; i < n_x; ++i) n_trg[i] = static_cast<int>(x_grid[i]);
            std::vector<double> eps(series_params, series_params + n_series);
            switch (kind) {
            case SIPM_SWEEP_CT:
                result = sipm::ct_curve(det->geom, n_trg, eps, runs, seed);
                break;
            case SIPM_SWEEP_CLUSTER:
                result = sipm::cluster_size_curve(det->geom, n_trg, eps, runs, seed);
                break;
            case SIPM_SWEEP_STAGES:
                result = sipm::stage_curve(det->geom, n_trg, eps, runs, seed);
                break;
            default:
                throw std::invalid_argument("unknown sweep kind");
            }
        }
        *out = new sipm_sweep{kind, std::move(result)};
    });
}

void sipm_sweep_destroy(sipm_sweep* sweep) { delete sweep; }

int sipm_sweep_point_count(const sipm_sweep* sweep) {
    return sweep ? static_cast<int>(sweep->result.x_values.size()) : 0;
}

int sipm_sweep_series_count(const sipm_sweep* sweep) {
    return sweep ? static_cast<int>(sweep->result.series.size()) : 0;
}

double sipm_sweep_x(const sipm_sweep* sweep, int i) {
    if (!sweep || i < 0 || i >= sipm_sweep_point_count(sweep)) return 0.0;
    return sweep->result.x_values[static_cast<std::size_t>(i)];
}

double sipm_sweep_series_param(const sipm_sweep* sweep, int s) {
    if (!sweep || s < 0 || s >= sipm_sweep_series_count(sweep)) return 0.0;
    return sweep->result.series[static_cast<std::size_t>(s)].param;
}

sipm_status sipm_sweep_stat(const sipm_sweep* sweep, int s, int i, sipm_stat* out) {
    if (!sweep || !out) return fail_arg("null argument");
    if (s < 0 || s >= sipm_sweep_series_count(sweep) || i < 0 ||
        i >= sipm_sweep_point_count(sweep))
        return fail_arg("sweep index out of range");
    const auto& point =
        sweep->result.series[static_cast<std::size_t>(s)].points[static_cast<std::size_t>(i)];
    sipm::Stat stat;
    switch (sweep->kind) {
    case SIPM_SWEEP_CT:
        stat = point.crosstalk;
        break;
    case SIPM_SWEEP_CLUSTER:
        stat = point.cluster;
        break;
    case SIPM_SWEEP_STAGES:
        stat = point.stages;
        break;
    default:
        stat = point.fired;
        break;
    }
    out->mean = stat.mean;
    out->sem = stat.sem;
    g_error.clear();
    return SIPM_OK;
}

sipm_status sipm_critical_triggers(const sipm_detector* det, double epsilon_nn,
                                   long long runs, uint64_t seed, int* out) {
    if (!det || !out) return fail_arg("null argument");
    return guarded([&] {
        *out = sipm::critical_triggers(det->geom, epsilon_nn, runs, seed);
    });
}

sipm_status sipm_linearity_threshold(const sipm_detector* det, long long n_photons,
                                     long long runs, uint64_t seed, int* reached,
                                     double* occupancy, double* eta) {
    if (!det) return fail_arg("detector is null");
    return guarded([&] {
        const auto t = sipm::linearity_threshold(det->geom, n_photons, runs, seed);
        if (reached) *reached = t.reached ? 1 : 0;
        if (occupancy) *occupancy = t.occupancy;
        if (eta) *eta = t.eta;
    });
}

sipm_status sipm_expected_detected(double eta, double n_photons, double n_elements,
                                   double* out) {
    if (!out) return fail_arg("out is null");
    return guarded([&] { *out = sipm::expected_detected(eta, n_photons, n_elements); });
}

double sipm_linear_detected(double eta, double n_photons) {
    return sipm::linear_detected(eta, n_photons);
}

sipm_status sipm_epsilon_total(double epsilon_nn, double* out) {
    if (!out) return fail_arg("out is null");
    return guarded([&] { *out = sipm::epsilon_total(epsilon_nn); });
}

sipm_status sipm_thermal_pmf(long long n, double mean_n, double* out) {
    if (!out) return fail_arg("out is null");
    return guarded([&] { *out = sipm::thermal_pmf(n, mean_n); });
}

sipm_status sipm_thermal_occupancy_pmf(double mean_n, int n_elements, double* out) {
    if (!out) return fail_arg("out is null");
    return guarded([&] {
        const auto pmf = sipm::thermal_occupancy_pmf(mean_n, n_elements);
        std::memcpy(out, pmf.data(), pmf.size() * sizeof(double));
    });
}

sipm_status sipm_one_stage_pmf(const double* fired_pmf, int len, double epsilon,
                               int n_max, double* out) {
    if (!fired_pmf || len < 1 || !out) return fail_arg("null or empty argument");
    return guarded([&] {
        const auto pmf = sipm::one_stage_distribution(
            std::span<const double>(fired_pmf, static_cast<std::size_t>(len)), epsilon,
            n_max);
        std::memcpy(out, pmf.data(), pmf.size() * sizeof(double));
    });
}

sipm_status sipm_recursive_pmf(const double* fired_pmf, int len, double epsilon,
                               int n_max, double* out) {
    if (!fired_pmf || len < 1 || !out) return fail_arg("null or empty argument");
    return guarded([&] {
        const auto pmf = sipm::recursive_distribution(
            std::span<const double>(fired_pmf, static_cast<std::size_t>(len)), epsilon,
            n_max);
        std::memcpy(out, pmf.data(), pmf.size() * sizeof(double));
    });
}

void sipm_fit_config_init(sipm_fit_config* config) {
    if (!config) return;
    const sipm::FitConfig d;
    config->model = SIPM_MODEL_FULL_MC;
    config->mean_n_lo = d.mean_n_grid.lo;
    config->mean_n_hi = d.mean_n_grid.hi;
    config->mean_n_points = d.mean_n_grid.points;
    config->epsilon_lo = d.epsilon_grid.lo;
    config->epsilon_hi = d.epsilon_grid.hi;
    config->epsilon_points = d.epsilon_grid.points;
    config->mc_runs = d.mc_runs;
    config->rng_seed = d.rng_seed;
    config->use_loglike = d.use_loglike ? 1 : 0;
    config->threads = d.threads;
}

namespace {

sipm::ModelKind to_model(int model) {
    switch (model) {
    case SIPM_MODEL_FULL_MC:
        return sipm::ModelKind::FullMC;
    case SIPM_MODEL_ONE_STAGE:
        return sipm::ModelKind::OneStage;
    case SIPM_MODEL_RECURSIVE:
        return sipm::ModelKind::Recursive;
    default:
        throw std::invalid_argument("unknown model kind");
    }
}

} // namespace

sipm_status sipm_fit_histogram(const long long* counts, int len,
                               const sipm_fit_config* config, int rows, int cols,
                               sipm_fit_result* out) {
    if (!counts || len < 1 || !config || !out) return fail_arg("null or empty argument");
    return guarded([&] {
        const auto data = sipm::Histogram::from_counts(
            std::span<const long long>(counts, static_cast<std::size_t>(len)));
        sipm::FitConfig cfg;
        cfg.model = to_model(config->model);
        cfg.mean_n_grid = {config->mean_n_lo, config->mean_n_hi, config->mean_n_points};
        cfg.epsilon_grid = {config->epsilon_lo, config->epsilon_hi,
                            config->epsilon_points};
        cfg.mc_runs = config->mc_runs;
        cfg.rng_seed = config->rng_seed;
        cfg.use_loglike = config->use_loglike != 0;
        cfg.threads = config->threads;
        const sipm::Geometry geom(rows, cols);
        const auto r = sipm::fit_histogram(data, cfg, geom);
        out->mean_n_hat = r.mean_n_hat;
        out->mean_n_sigma = r.mean_n_sigma;
        out->epsilon_hat = r.epsilon_hat;
        out->epsilon_sigma = r.epsilon_sigma;
        out->chi2 = r.chi2;
        out->dof = r.dof;
        out->model = config->model;
        out->boundary_flag = r.boundary_flag ? 1 : 0;
    });
}

sipm_status sipm_model_pmf(int model, double mean_n, double epsilon, int rows,
                           int cols, long long mc_runs, uint64_t seed, int len,
                           double* out) {
    if (!out || len < 1) return fail_arg("null or empty argument");
    return guarded([&] {
        const sipm::Geometry geom(rows, cols);
        const auto pmf = sipm::model_pmf(to_model(model), mean_n, epsilon, geom,
                                         mc_runs, seed, static_cast<std::size_t>(len));
        std::memcpy(out, pmf.data(), pmf.size() * sizeof(double));
    });
}

} // extern "C"
