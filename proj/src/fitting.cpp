#include "sipm/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <map>
#include <stdexcept>

#include "sipm/rng.hpp"

namespace sipm {

namespace {

struct BinnedChi2 {
    double value = 0.0;
    int dof = 1;
};

// Pearson chi-square with low-expectation bins pooled into one tail bin.
// var_factor > 1 accounts for Monte Carlo noise in the model pmf
// (variance ~ T*p*(1 + T/R) when the pmf comes from R simulated pulses);
// min_expect is raised accordingly so that kept bins have adequate MC
// support, otherwise the noisy denominator biases the statistic upward.
BinnedChi2 binned_chi2(std::span<const long long> counts, long long total,
                       std::span<const double> pmf, double var_factor,
                       double min_expect, bool use_loglike) {
    const std::size_t n_top = std::max(counts.size(), pmf.size());
    const double t = static_cast<double>(total);
    double chi2 = 0.0;
    int main_bins = 0;
    double pool_e = 0.0;
    long long pool_o = 0;
    for (std::size_t n = 0; n < n_top; ++n) {
        const double p = n < pmf.size() ? pmf[n] : 0.0;
        const double e = t * p;
        const long long o = n < counts.size() ? counts[n] : 0;
        if (e >= min_expect) {
            ++main_bins;
            if (use_loglike) {
                if (o > 0) chi2 += 2.0 * o * std::log(o / e);
                chi2 += 2.0 * (e - o);
            } else {
                const double d = static_cast<double>(o) - e;
                chi2 += d * d / (e * var_factor);
            }
        } else {
            pool_e += e;
            pool_o += o;
        }
    }
    int bins = main_bins;
    if (pool_e > 0.0 || pool_o > 0) {
        ++bins;
        const double e = std::max(pool_e, 0.5);
        if (use_loglike) {
            if (pool_o > 0) chi2 += 2.0 * pool_o * std::log(pool_o / e);
            chi2 += 2.0 * (e - pool_o);
        } else {
            const double d = static_cast<double>(pool_o) - e;
            chi2 += d * d / (e * var_factor);
        }
    }
    BinnedChi2 out;
    out.value = chi2;
    out.dof = std::max(1, bins - 2);
    return out;
}

class Objective {
public:
    Objective(const Histogram& data, const FitConfig& config, const Geometry& geom)
        : data_(data), config_(config), geom_(geom) {
        pmf_len_ = static_cast<std::size_t>(
            std::max(geom.cell_count() + 1, 4 * data.max_n() + 1));
        var_factor_ = 1.0;
        min_expect_ = 5.0;
        if (config.model == ModelKind::FullMC) {
            const double ratio = static_cast<double>(data.total) / config.mc_runs;
            var_factor_ = 1.0 + ratio;
            // keep only bins backed by >= ~25 simulated pulses
            min_expect_ = std::max(5.0, 25.0 * ratio);
        }
    }

    double operator()(double mean_n, double epsilon) const {
        const auto key = std::make_pair(mean_n, epsilon);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        const double v = stat(mean_n, epsilon).value;
        cache_.emplace(key, v);
        return v;
    }

    BinnedChi2 stat(double mean_n, double epsilon) const {
        const auto pmf = model_pmf(config_.model, mean_n, epsilon, geom_,
                                   config_.mc_runs, config_.rng_seed, pmf_len_,
                                   config_.threads);
        return binned_chi2(data_.counts, data_.total, pmf, var_factor_,
                           min_expect_, config_.use_loglike);
    }

private:
    const Histogram& data_;
    const FitConfig& config_;
    const Geometry& geom_;
    std::size_t pmf_len_;
    double var_factor_;
    double min_expect_;
    mutable std::map<std::pair<double, double>, double> cache_;
};

double clamp(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

} // namespace

Histogram Histogram::from_counts(std::span<const long long> counts) {
    Histogram h;
    h.counts.assign(counts.begin(), counts.end());
    for (long long c : h.counts) {
        if (c < 0) throw std::invalid_argument("Histogram: negative count");
        h.total += c;
    }
    if (h.total < 1) throw std::invalid_argument("Histogram: empty");
    return h;
}

Histogram Histogram::from_pairs(std::span<const std::pair<int, long long>> pairs) {
    int max_n = 0;
    for (const auto& [n, c] : pairs) {
        if (n < 0) throw std::invalid_argument("Histogram: negative bin index");
        max_n = std::max(max_n, n);
    }
    std::vector<long long> counts(static_cast<std::size_t>(max_n) + 1, 0);
    for (const auto& [n, c] : pairs) counts[static_cast<std::size_t>(n)] += c;
    return from_counts(counts);
}

int Histogram::occupied_bins() const noexcept {
    int n = 0;
    for (long long c : counts)
        if (c > 0) ++n;
    return n;
}

int Histogram::max_n() const noexcept {
    for (std::size_t i = counts.size(); i > 0; --i)
        if (counts[i - 1] > 0) return static_cast<int>(i - 1);
    return 0;
}

std::vector<double> model_pmf(ModelKind model, double mean_n, double epsilon,
                              const Geometry& geom, long long mc_runs,
                              std::uint64_t seed, std::size_t len, int threads) {
    if (len == 0) throw std::invalid_argument("model_pmf: len must be > 0");
    std::vector<double> pmf;
    switch (model) {
    case ModelKind::FullMC: {
        DetectorParams params(1.0, epsilon);
        pmf = mc_measured_distribution(geom, ThermalSource{mean_n}, params, mc_runs,
                                       seed, threads);
        break;
    }
    case ModelKind::OneStage:
    case ModelKind::Recursive: {
        // Fired-cell pmf: thermal photon number folded through the
        // one-avalanche occupancy loss of the finite cell array.
        const auto fired = thermal_occupancy_pmf(mean_n, geom.cell_count());
        const int n_max = static_cast<int>(len) - 1;
        pmf = model == ModelKind::OneStage
                  ? one_stage_distribution(fired, epsilon, n_max)
                  : recursive_distribution(fired, epsilon, n_max);
        break;
    }
    }
    if (pmf.size() > len) { // fold excess mass into the top bin
        for (std::size_t i = len; i < pmf.size(); ++i) pmf[len - 1] += pmf[i];
        pmf.resize(len);
    } else {
        pmf.resize(len, 0.0);
    }
    return pmf;
}

FitResult fit_histogram(const Histogram& data, const FitConfig& config,
                        const Geometry& geom) {
    if (data.total < 1) throw std::invalid_argument("fit_histogram: empty histogram");
    if (data.occupied_bins() < 3)
        throw std::invalid_argument("fit_histogram: need at least 3 occupied bins");
    if (config.mean_n_grid.points < 1 || config.epsilon_grid.points < 1)
        throw std::invalid_argument("fit_histogram: empty parameter grid");
    if (config.model == ModelKind::FullMC && config.mc_runs < 10000)
        throw std::invalid_argument("fit_histogram: mc_runs must be >= 10^4 for FullMC");

    const Objective f(data, config, geom);
    const auto& mg = config.mean_n_grid;
    const auto& eg = config.epsilon_grid;

    // coarse grid
    double best_mu = mg.value(0);
    double best_eps = eg.value(0);
    double best = f(best_mu, best_eps);
    for (int i = 0; i < mg.points; ++i) {
        for (int j = 0; j < eg.points; ++j) {
            const double v = f(mg.value(i), eg.value(j));
            if (v < best) {
                best = v;
                best_mu = mg.value(i);
                best_eps = eg.value(j);
            }
        }
    }

    // Zoom refinement: re-grid a shrinking window around the running best
    // point. Derivative-free and deterministic; robust against the strong
    // (mean_n, epsilon) correlation of the chi-square valley.
    const double mu_range = std::max(mg.hi - mg.lo, 1e-9);
    const double eps_range = std::max(eg.hi - eg.lo, 1e-9);
    double half_mu = 0.75 * std::max(mg.spacing(), 1e-3 * mu_range);
    double half_eps = 0.75 * std::max(eg.spacing(), 1e-3 * eps_range);
    constexpr int kZoomStages = 7;
    constexpr int kZoomPoints = 7;
    for (int stage = 0; stage < kZoomStages; ++stage) {
        const double mu_lo = clamp(best_mu - half_mu, mg.lo, mg.hi);
        const double mu_hi = clamp(best_mu + half_mu, mg.lo, mg.hi);
        const double eps_lo = clamp(best_eps - half_eps, eg.lo, eg.hi);
        const double eps_hi = clamp(best_eps + half_eps, eg.lo, eg.hi);
        for (int i = 0; i < kZoomPoints; ++i) {
            const double m = mu_lo + (mu_hi - mu_lo) * i / (kZoomPoints - 1);
            for (int j = 0; j < kZoomPoints; ++j) {
                const double e = eps_lo + (eps_hi - eps_lo) * j / (kZoomPoints - 1);
                const double v = f(m, e);
                if (v < best) {
                    best = v;
                    best_mu = m;
                    best_eps = e;
                }
            }
        }
        half_mu /= 2.5;
        half_eps /= 2.5;
    }

    FitResult result;
    result.model = config.model;
    result.mean_n_hat = best_mu;
    result.epsilon_hat = best_eps;

    const double tol_mu = 1e-4 * mu_range;
    const double tol_eps = 1e-4 * eps_range;
    result.boundary_flag = best_mu <= mg.lo + tol_mu || best_mu >= mg.hi - tol_mu ||
                           best_eps <= eg.lo + tol_eps || best_eps >= eg.hi - tol_eps;

    // 1-sigma uncertainties from the profile chi-square: along each axis the
    // other parameter is re-minimized, so the strong (mean_n, epsilon) valley
    // correlation is absorbed exactly instead of being reconstructed from a
    // noise-sensitive mixed second derivative. sigma = h / sqrt(delta-chi2)
    // at a probe distance h tuned so the profile rise is a few units, which
    // keeps the estimate insensitive to the Monte Carlo jaggedness of the
    // objective.
    auto cond_sigma = [&](bool mu_axis) {
        const double range = mu_axis ? mu_range : eps_range;
        double h = 1e-3 * range;
        double rise = 0.0;
        for (int i = 0; i < 40; ++i) {
            const double xp = mu_axis ? clamp(best_mu + h, mg.lo, mg.hi)
                                      : clamp(best_eps + h, eg.lo, eg.hi);
            const double xm = mu_axis ? clamp(best_mu - h, mg.lo, mg.hi)
                                      : clamp(best_eps - h, eg.lo, eg.hi);
            const double rp = (mu_axis ? f(xp, best_eps) : f(best_mu, xp)) - best;
            const double rm = (mu_axis ? f(xm, best_eps) : f(best_mu, xm)) - best;
            rise = std::max(rp, rm);
            if (rise > 25.0) {
                h *= 0.5;
            } else if (rise < 4.0) {
                if (h > range) break;
                h *= 2.0;
            } else {
                break;
            }
        }
        return rise > 0.0 ? h / std::sqrt(rise) : range;
    };
    const double sig_c_mu = cond_sigma(true);
    const double sig_c_eps = cond_sigma(false);

    struct AxisFit {
        double sigma = 0.0;
        double shift = 0.0;
        bool edge = false;
    };
    auto profile_sigma = [&](bool mu_axis) {
        const double lo_a = mu_axis ? mg.lo : eg.lo;
        const double hi_a = mu_axis ? mg.hi : eg.hi;
        const double lo_b = mu_axis ? eg.lo : mg.lo;
        const double hi_b = mu_axis ? eg.hi : mg.hi;
        const double x0 = mu_axis ? best_mu : best_eps;
        const double y0 = mu_axis ? best_eps : best_mu;
        const double sc_a = mu_axis ? sig_c_mu : sig_c_eps;
        const double sc_b = mu_axis ? sig_c_eps : sig_c_mu;
        auto eval = [&](double x, double y) { return mu_axis ? f(x, y) : f(y, x); };

        double slope = 0.0; // valley direction dy*/dx, learned from the first probe
        bool have_slope = false;
        auto profile_rise = [&](double x) {
            const double rc = std::max(eval(x, y0) - best, 0.0);
            // the inner minimum can shift by at most ~sc_b * sqrt(conditional rise)
            double halfw = sc_b * (have_slope ? 6.0 : 2.0 + std::sqrt(rc));
            halfw = std::min(halfw, hi_b - lo_b);
            double c = have_slope ? clamp(y0 + slope * (x - x0), lo_b, hi_b) : y0;
            double bv = eval(x, c);
            const int stages = std::min(
                9, 3 + static_cast<int>(std::ceil(
                           std::log(std::max(halfw / std::max(sc_b, 1e-12), 1.0)) /
                           std::log(3.0))));
            double w = halfw;
            for (int s = 0; s < stages; ++s) {
                const double blo = clamp(c - w, lo_b, hi_b);
                const double bhi = clamp(c + w, lo_b, hi_b);
                for (int i = 0; i < 7; ++i) {
                    const double y = blo + (bhi - blo) * i / 6.0;
                    const double v = eval(x, y);
                    if (v < bv) {
                        bv = v;
                        c = y;
                    }
                }
                w /= 3.0;
            }
            if (x != x0) {
                slope = (c - y0) / (x - x0);
                have_slope = true;
            }
            return bv - best;
        };
        // Find a probe distance where the profile has risen by ~20 units,
        // far enough out that the quadratic term dominates the Monte Carlo
        // jitter of the objective surface.
        auto reach = [&](double dir, double h_hint) {
            double h = h_hint > 0.0 ? h_hint : 4.0 * sc_a;
            for (int i = 0; i < 30; ++i) {
                const double x = x0 + dir * h;
                if (x < lo_a || x > hi_a) {
                    h = (dir > 0.0 ? hi_a - x0 : x0 - lo_a);
                    if (h <= 0.0) return -1.0;
                    const double r = profile_rise(x0 + dir * h);
                    return r >= 4.0 ? h : -1.0;
                }
                const double rise = profile_rise(x);
                if (rise >= 15.0) return h;
                h *= rise > 0.25 ? std::min(5.0, std::sqrt(25.0 / rise)) : 5.0;
            }
            return -1.0;
        };
        const double l_up = reach(+1.0, 0.0);
        const double l_dn = reach(-1.0, l_up > 0.0 ? l_up : 0.0);

        AxisFit out;
        out.edge = l_up < 0.0 || l_dn < 0.0;
        const double l_max = std::max(l_up, l_dn);
        if (l_max <= 0.0) {
            out.sigma = hi_a - lo_a; // unresolved within the grid
            out.edge = true;
            return out;
        }
        // crude single-point estimate, kept as fallback if the parabola fit
        // degenerates
        const double rise_far = profile_rise(x0 + (l_up > 0.0 ? l_up : -l_dn));
        const double sigma_far =
            rise_far > 0.0 ? l_max / std::sqrt(rise_far) : hi_a - lo_a;
        // Least-squares parabola through profile points on both sides; the
        // linear term absorbs the slow drift that common random numbers
        // leave in the surface, the vertex de-noises the point estimate,
        // and the curvature gives sigma via delta-chi2 = 1.
        double s_yy = 0.0, s_y4 = 0.0, s_y3 = 0.0, s_y2 = 0.0, s_y1 = 0.0;
        double b_2 = 0.0, b_1 = 0.0, b_0 = 0.0;
        int n_pts = 0;
        for (double dir : {+1.0, -1.0}) {
            const double l = dir > 0.0 ? l_up : l_dn;
            if (l <= 0.0) continue;
            for (int i = 1; i <= 4; ++i) {
                const double h = dir * l * i / 4.0;
                const double r = profile_rise(x0 + h);
                s_y4 += h * h * h * h;
                s_y3 += h * h * h;
                s_y2 += h * h;
                s_y1 += h;
                s_yy += 1.0;
                b_2 += r * h * h;
                b_1 += r * h;
                b_0 += r;
                ++n_pts;
            }
        }
        if (n_pts < 4) {
            out.sigma = sigma_far;
            out.edge = true;
            return out;
        }
        // solve [s_y4 s_y3 s_y2; s_y3 s_y2 s_y1; s_y2 s_y1 n] (a,b,c) = rhs
        const double m[3][3] = {{s_y4, s_y3, s_y2}, {s_y3, s_y2, s_y1},
                                {s_y2, s_y1, s_yy}};
        const double rhs[3] = {b_2, b_1, b_0};
        const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        double a_coef = 0.0, b_coef = 0.0;
        if (std::abs(det) > 0.0) {
            a_coef = (rhs[0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                      m[0][1] * (rhs[1] * m[2][2] - m[1][2] * rhs[2]) +
                      m[0][2] * (rhs[1] * m[2][1] - m[1][1] * rhs[2])) /
                     det;
            b_coef = (m[0][0] * (rhs[1] * m[2][2] - m[1][2] * rhs[2]) -
                      rhs[0] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                      m[0][2] * (m[1][0] * rhs[2] - rhs[1] * m[2][0])) /
                     det;
        }
        if (!(a_coef > 0.0)) {
            out.sigma = sigma_far;
            out.edge = true;
            return out;
        }
        out.sigma = 1.0 / std::sqrt(a_coef);
        out.shift = clamp(-0.5 * b_coef / a_coef, -0.5 * l_max, 0.5 * l_max);
        return out;
    };
    const AxisFit mu_fit = profile_sigma(true);
    const AxisFit eps_fit = profile_sigma(false);
    result.mean_n_hat = clamp(best_mu + mu_fit.shift, mg.lo, mg.hi);
    result.epsilon_hat = clamp(best_eps + eps_fit.shift, eg.lo, eg.hi);
    result.mean_n_sigma = mu_fit.sigma;
    result.epsilon_sigma = eps_fit.sigma;
    result.boundary_flag = result.boundary_flag || mu_fit.edge || eps_fit.edge;

    // Report the goodness of fit from an independent Monte Carlo replica of
    // the model pmf at the fitted point. The minimizer rides the noise dips
    // of its own common-random-number surface, which deflates the in-sample
    // minimum by several units; the held-out value is unbiased.
    FitConfig report_config = config;
    report_config.rng_seed = mix64(config.rng_seed ^ 0x5297a3d0c3f8e1bdULL);
    const Objective g(data, report_config, geom);
    const auto report = g.stat(result.mean_n_hat, result.epsilon_hat);
    result.chi2 = report.value;
    result.dof = report.dof;
    return result;
}

std::vector<FitResult> compare_models(const Histogram& data,
                                      std::span<const FitConfig> configs,
                                      const Geometry& geom) {
    std::vector<FitResult> results;
    results.reserve(configs.size());
    for (const auto& c : configs) results.push_back(fit_histogram(data, c, geom));
    std::stable_sort(results.begin(), results.end(), [](const FitResult& a, const FitResult& b) {
        return a.chi2 / a.dof < b.chi2 / b.dof;
    });
    return results;
}

} // namespace sipm
