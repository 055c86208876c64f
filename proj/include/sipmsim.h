/* C interface to the SiPM crosstalk simulation library.
 *
 * All functions returning int use sipm_status codes; on failure
 * sipm_last_error() describes the problem (thread-local). Handles are
 * opaque and must be released with the matching destroy function.
 */
#ifndef SIPMSIM_H
#define SIPMSIM_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sipm_status {
    SIPM_OK = 0,
    SIPM_ERR_INVALID_ARGUMENT = 1,
    SIPM_ERR_NUMERIC = 2
} sipm_status;

/* Last error message for the calling thread; empty string if none. */
const char* sipm_last_error(void);

/* Default worker-thread count for ensembles: 0 restores the automatic
 * choice (SIPMSIM_THREADS environment variable, else hardware). Results
 * never depend on the thread count. */
void sipm_set_default_threads(int threads);

/* ------------------------------------------------------------------ */
/* Detector                                                            */

typedef struct sipm_detector sipm_detector;

/* rows x cols lattice with detection efficiency eta and per-neighbour
 * crosstalk probability epsilon_nn. */
sipm_status sipm_detector_create(int rows, int cols, double eta, double epsilon_nn,
                                 sipm_detector** out);
void sipm_detector_destroy(sipm_detector* det);

int sipm_detector_cells(const sipm_detector* det);

/* Per-cell state codes in sipm_run_outcome grids. */
enum {
    SIPM_CELL_UNTRIGGERED = 0,
    SIPM_CELL_SEED = 1,
    SIPM_CELL_CROSSTALK = 2
};

typedef struct sipm_run_outcome {
    long long n_photons; /* 0 when seeds were placed directly */
    int n_seed;
    int n_crosstalk;
    int n_stages;
    int n_fired;
} sipm_run_outcome;

/* Single detection run: n_photons dropped uniformly, eta conversion,
 * then crosstalk percolation. cell_state/cell_stage may be NULL; when
 * given they must hold rows*cols entries (stage is -1 for untriggered,
 * 0 for seeds, >=1 for crosstalk generations). */
sipm_status sipm_run_detection(const sipm_detector* det, long long n_photons,
                               uint64_t seed, uint64_t stream, sipm_run_outcome* out,
                               int* cell_state, int* cell_stage);

/* Single run from exactly n_trg distinct random seed cells. */
sipm_status sipm_run_fixed_seeds(const sipm_detector* det, int n_trg, uint64_t seed,
                                 uint64_t stream, sipm_run_outcome* out,
                                 int* cell_state, int* cell_stage);

/* ------------------------------------------------------------------ */
/* Ensembles                                                           */

typedef struct sipm_stat {
    double mean;
    double sem; /* standard error of the mean */
} sipm_stat;

typedef struct sipm_ensemble_summary {
    long long runs;
    sipm_stat crosstalk;
    sipm_stat stages;
    sipm_stat fired;
    sipm_stat cluster; /* n_fired / n_seed */
} sipm_ensemble_summary;

/* Photon sources for ensemble/histogram generation. */
enum {
    SIPM_SOURCE_THERMAL = 0, /* value = mean photon number */
    SIPM_SOURCE_FIXED = 1    /* value = photon count (integer) */
};

/* max_stages caps the crosstalk generations; pass 0 for no cap. */
sipm_status sipm_ensemble_fixed_seeds(const sipm_detector* det, int n_trg,
                                      long long runs, uint64_t seed, int max_stages,
                                      sipm_ensemble_summary* out);

sipm_status sipm_ensemble_detection(const sipm_detector* det, int source_kind,
                                    double source_value, long long runs,
                                    uint64_t seed, sipm_ensemble_summary* out);

/* Histogram of measured (fired-cell) counts over `runs` pulses; counts
 * must hold cells+1 entries. */
sipm_status sipm_measured_counts(const sipm_detector* det, int source_kind,
                                 double source_value, long long runs, uint64_t seed,
                                 long long* counts);

/* ------------------------------------------------------------------ */
/* Sweeps                                                              */

typedef struct sipm_sweep sipm_sweep;

enum {
    SIPM_SWEEP_CT = 0,         /* mean crosstalk vs N_trg, one series per eps   */
    SIPM_SWEEP_CLUSTER = 1,    /* mean cluster size vs N_trg, series per eps    */
    SIPM_SWEEP_STAGES = 2,     /* mean stage count vs N_trg, series per eps     */
    SIPM_SWEEP_SATURATION = 3  /* mean fired vs eta, one series per N_photons;
                                  x grid and series parameters are doubles      */
};

/* For CT/CLUSTER/STAGES: x_grid holds N_trg values (integers as double),
 * series_params holds epsilon_nn values. For SATURATION: x_grid holds
 * eta values, series_params holds photon numbers. eta/epsilon of the
 * detector handle are ignored by sweeps; geometry is taken from it. */
sipm_status sipm_sweep_run(const sipm_detector* det, int kind, const double* x_grid,
                           int n_x, const double* series_params, int n_series,
                           long long runs, uint64_t seed, sipm_sweep** out);
void sipm_sweep_destroy(sipm_sweep* sweep);

int sipm_sweep_point_count(const sipm_sweep* sweep);
int sipm_sweep_series_count(const sipm_sweep* sweep);
double sipm_sweep_x(const sipm_sweep* sweep, int i);
double sipm_sweep_series_param(const sipm_sweep* sweep, int s);
/* quantity follows the sweep kind (crosstalk / cluster / stages / fired) */
sipm_status sipm_sweep_stat(const sipm_sweep* sweep, int s, int i, sipm_stat* out);

/* Smallest N_trg whose mean cluster size drops below 90% of the N_trg=1
 * baseline; cell count if never crossed. */
sipm_status sipm_critical_triggers(const sipm_detector* det, double epsilon_nn,
                                   long long runs, uint64_t seed, int* out);

/* Occupancy at which the mean detected count first deviates >10% from
 * eta*N_photons while scanning eta; reached=0 if it never does. */
sipm_status sipm_linearity_threshold(const sipm_detector* det, long long n_photons,
                                     long long runs, uint64_t seed, int* reached,
                                     double* occupancy, double* eta);

/* ------------------------------------------------------------------ */
/* Analytic models                                                     */

/* Mean detected count N*(1 - exp(-eta*N_ph/N)). */
sipm_status sipm_expected_detected(double eta, double n_photons, double n_elements,
                                   double* out);
/* Linear (no-saturation) mean, eta*N_ph. */
double sipm_linear_detected(double eta, double n_photons);
/* Total crosstalk probability 1 - (1-eps_nn)^4. */
sipm_status sipm_epsilon_total(double epsilon_nn, double* out);

/* Thermal (Bose-Einstein) photon-number probability. */
sipm_status sipm_thermal_pmf(long long n, double mean_n, double* out);

/* Distribution of occupied cells for thermal light on n_elements cells;
 * out must hold n_elements+1 entries. */
sipm_status sipm_thermal_occupancy_pmf(double mean_n, int n_elements, double* out);

/* Measured-count pmfs of the baseline crosstalk models applied to a
 * fired-cell pmf; out must hold n_max+1 entries. */
sipm_status sipm_one_stage_pmf(const double* fired_pmf, int len, double epsilon,
                               int n_max, double* out);
sipm_status sipm_recursive_pmf(const double* fired_pmf, int len, double epsilon,
                               int n_max, double* out);

/* ------------------------------------------------------------------ */
/* Fitting                                                             */

enum {
    SIPM_MODEL_FULL_MC = 0,
    SIPM_MODEL_ONE_STAGE = 1,
    SIPM_MODEL_RECURSIVE = 2
};

typedef struct sipm_fit_config {
    int model;
    double mean_n_lo, mean_n_hi;
    int mean_n_points;
    double epsilon_lo, epsilon_hi;
    int epsilon_points;
    long long mc_runs; /* FullMC pulses per candidate */
    uint64_t rng_seed; /* common random numbers across candidates */
    int use_loglike;   /* multinomial G^2 instead of Pearson chi-square */
    int threads;
} sipm_fit_config;

/* Defaults matching the library's FitConfig. */
void sipm_fit_config_init(sipm_fit_config* config);

typedef struct sipm_fit_result {
    double mean_n_hat, mean_n_sigma;
    /* epsilon_nn for FullMC, total epsilon for the baseline models */
    double epsilon_hat, epsilon_sigma;
    double chi2;
    int dof;
    int model;
    int boundary_flag;
} sipm_fit_result;

/* Fits the photon-number histogram counts[0..len-1] on a rows x cols
 * detector. Deterministic for fixed inputs. */
sipm_status sipm_fit_histogram(const long long* counts, int len,
                               const sipm_fit_config* config, int rows, int cols,
                               sipm_fit_result* out);

/* Model pmf at given parameters (overlay curves); out holds len entries. */
sipm_status sipm_model_pmf(int model, double mean_n, double epsilon, int rows,
                           int cols, long long mc_runs, uint64_t seed, int len,
                           double* out);

#ifdef __cplusplus
}
#endif

#endif /* SIPMSIM_H */
