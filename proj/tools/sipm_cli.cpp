// Command-line front end: single-run rendering, ensemble sweeps, and
// histogram fitting on top of the C library interface.

#include <algorithm>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sipmsim.h"

using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitParse = 3;
constexpr int kExitNumeric = 4;

struct NumericError {
    std::string message;
};

struct ParseError {
    std::string message;
};

void check(sipm_status st) {
    if (st != SIPM_OK) throw NumericError{sipm_last_error()};
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

uint64_t random_seed() {
    std::random_device rd;
    return (static_cast<uint64_t>(rd()) << 32) ^ rd();
}

struct DetectorGuard {
    sipm_detector* det = nullptr;
    ~DetectorGuard() { sipm_detector_destroy(det); }
};

struct SweepGuard {
    sipm_sweep* sweep = nullptr;
    ~SweepGuard() { sipm_sweep_destroy(sweep); }
};

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw NumericError{"cannot open output file: " + path};
    return out;
}

// ------------------------------------------------------------------
// simulate

struct SimulateOpts {
    int rows = 10, cols = 10;
    double eta = 1.0, eps_nn = 0.0;
    std::optional<int> n_trg;
    std::optional<long long> photons;
    std::optional<double> thermal;
    long long runs = 1;
    std::optional<uint64_t> seed;
    uint64_t stream = 0;
    std::string out_path;
};

char cell_char(int state, int stage) {
    if (state == SIPM_CELL_UNTRIGGERED) return '.';
    if (state == SIPM_CELL_SEED) return 'X';
    if (stage >= 10) return '+';
    return static_cast<char>('0' + stage);
}

int run_simulate(const SimulateOpts& opt) {
    const int sources = (opt.n_trg ? 1 : 0) + (opt.photons ? 1 : 0) + (opt.thermal ? 1 : 0);
    if (sources != 1) {
        std::cerr << "simulate: exactly one of --n-trg, --photons, --thermal is required\n";
        return kExitUsage;
    }
    if (opt.runs > 1 && opt.n_trg) {
        std::cerr << "simulate: --runs > 1 needs a photon source (--photons or --thermal)\n";
        return kExitUsage;
    }
    const uint64_t seed = opt.seed.value_or(random_seed());

    DetectorGuard d;
    check(sipm_detector_create(opt.rows, opt.cols, opt.eta, opt.eps_nn, &d.det));

    if (opt.runs > 1) {
        // ensemble mode: emit the measured-count histogram
        const int kind = opt.thermal ? SIPM_SOURCE_THERMAL : SIPM_SOURCE_FIXED;
        const double value = opt.thermal ? *opt.thermal
                                         : static_cast<double>(*opt.photons);
        std::vector<long long> counts(static_cast<size_t>(sipm_detector_cells(d.det)) + 1);
        check(sipm_measured_counts(d.det, kind, value, opt.runs, seed, counts.data()));
        std::ostringstream body;
        body << "# measured-count histogram\n";
        body << "# rerun: simulate --rows " << opt.rows << " --cols " << opt.cols
             << " --eta " << fmt_double(opt.eta) << " --eps-nn " << fmt_double(opt.eps_nn)
             << (opt.thermal ? " --thermal " + fmt_double(*opt.thermal)
                             : " --photons " + std::to_string(*opt.photons))
             << " --runs " << opt.runs << " --seed " << seed << "\n";
        body << "n,count\n";
        size_t top = counts.size();
        while (top > 1 && counts[top - 1] == 0) --top;
        for (size_t n = 0; n < top; ++n) body << n << "," << counts[n] << "\n";
        if (opt.out_path.empty()) {
            std::cout << body.str();
        } else {
            open_output(opt.out_path) << body.str();
        }
        return 0;
    }

    const int cells = sipm_detector_cells(d.det);
    std::vector<int> state(static_cast<size_t>(cells));
    std::vector<int> stage(static_cast<size_t>(cells));
    sipm_run_outcome outcome{};
    if (opt.n_trg) {
        check(sipm_run_fixed_seeds(d.det, *opt.n_trg, seed, opt.stream, &outcome,
                                   state.data(), stage.data()));
    } else {
        long long nph = opt.photons ? *opt.photons : 0;
        if (opt.thermal) {
            // draw the photon number as part of the run
            std::cerr << "simulate: single-run mode needs --n-trg or --photons\n";
            return kExitUsage;
        }
        check(sipm_run_detection(d.det, nph, seed, opt.stream, &outcome, state.data(),
                                 stage.data()));
    }

    for (int r = 0; r < opt.rows; ++r) {
        std::string line(static_cast<size_t>(opt.cols), '.');
        for (int c = 0; c < opt.cols; ++c) {
            const size_t i = static_cast<size_t>(r) * opt.cols + c;
            line[static_cast<size_t>(c)] = cell_char(state[i], stage[i]);
        }
        std::cout << line << "\n";
    }
    std::cout << "seeds: " << outcome.n_seed << ", crosstalks: " << outcome.n_crosstalk
              << ", stages: " << outcome.n_stages << ", fired: " << outcome.n_fired
              << " (seed " << seed << ", stream " << opt.stream << ")\n";

    if (!opt.out_path.empty()) {
        json rec;
        rec["config"] = {{"rows", opt.rows},
                         {"cols", opt.cols},
                         {"eta", opt.eta},
                         {"epsilon_nn", opt.eps_nn},
                         {"seed", seed},
                         {"stream", opt.stream}};
        if (opt.n_trg)
            rec["config"]["n_trg"] = *opt.n_trg;
        else
            rec["config"]["n_photons"] = *opt.photons;
        rec["outcome"] = {{"n_photons", outcome.n_photons},
                          {"n_seed", outcome.n_seed},
                          {"n_crosstalk", outcome.n_crosstalk},
                          {"n_stages", outcome.n_stages},
                          {"n_fired", outcome.n_fired}};
        rec["grid"] = {{"state", state}, {"stage", stage}};
        open_output(opt.out_path) << rec.dump(2) << "\n";
    }
    return 0;
}

// ------------------------------------------------------------------
// sweep

struct SweepOpts {
    std::string kind;
    int rows = 10, cols = 10;
    long long runs = 10000;
    std::optional<uint64_t> seed;
    std::vector<double> eps;
    std::vector<long long> photons;
    int n_trg_min = 1, n_trg_max = 100, n_trg_step = 1;
    double eta_min = 0.05, eta_max = 1.0, eta_step = 0.05;
    long long lin_photons = 100;
    std::string out_path;
};

int run_sweep(const SweepOpts& opt) {
    static const std::map<std::string, int> kinds = {
        {"ct", SIPM_SWEEP_CT},          {"cluster", SIPM_SWEEP_CLUSTER},
        {"stages", SIPM_SWEEP_STAGES},  {"saturation", SIPM_SWEEP_SATURATION},
        {"critical", -1},               {"linearity", -2}};
    const auto it = kinds.find(opt.kind);
    if (it == kinds.end()) {
        std::cerr << "sweep: unknown kind '" << opt.kind
                  << "' (ct, cluster, stages, saturation, critical, linearity)\n";
        return kExitUsage;
    }
    const uint64_t seed = opt.seed.value_or(random_seed());

    DetectorGuard d;
    check(sipm_detector_create(opt.rows, opt.cols, 1.0, 0.0, &d.det));

    std::ostringstream body;
    auto header = [&](const std::string& extra) {
        body << "# sweep kind=" << opt.kind << "\n";
        body << "# rerun: sweep " << opt.kind << " --rows " << opt.rows << " --cols "
             << opt.cols << " --runs " << opt.runs << " --seed " << seed << extra
             << "\n";
    };
    auto join = [](const auto& v) {
        std::string s;
        for (size_t i = 0; i < v.size(); ++i)
            s += (i ? "," : "") + fmt_double(static_cast<double>(v[i]));
        return s;
    };

    if (it->second == -1) { // critical triggers vs epsilon
        std::vector<double> eps = opt.eps;
        if (eps.empty())
            for (int i = 1; i <= 8; ++i) eps.push_back(0.01 * i);
        header(" --eps " + join(eps));
        body << "epsilon_nn,n_critical\n";
        for (double e : eps) {
            int crit = 0;
            check(sipm_critical_triggers(d.det, e, opt.runs, seed, &crit));
            body << fmt_double(e) << "," << crit << "\n";
        }
    } else if (it->second == -2) { // linearity threshold
        header(" --photons " + std::to_string(opt.lin_photons));
        body << "n_photons,reached,occupancy,eta\n";
        int reached = 0;
        double occupancy = 0.0, eta = 0.0;
        check(sipm_linearity_threshold(d.det, opt.lin_photons, opt.runs, seed, &reached,
                                       &occupancy, &eta));
        body << opt.lin_photons << "," << reached << "," << fmt_double(occupancy) << ","
             << fmt_double(eta) << "\n";
    } else if (it->second == SIPM_SWEEP_SATURATION) {
        std::vector<long long> photons = opt.photons;
        if (photons.empty()) photons = {10, 20, 60, 100};
        std::vector<double> etas;
        for (double e = opt.eta_min; e <= opt.eta_max + 1e-12; e += opt.eta_step)
            etas.push_back(e);
        std::vector<double> params(photons.begin(), photons.end());
        header(" --eta-min " + fmt_double(opt.eta_min) + " --eta-max " +
               fmt_double(opt.eta_max) + " --eta-step " + fmt_double(opt.eta_step) +
               " --photons " + join(photons));
        SweepGuard s;
        check(sipm_sweep_run(d.det, SIPM_SWEEP_SATURATION, etas.data(),
                             static_cast<int>(etas.size()), params.data(),
                             static_cast<int>(params.size()), opt.runs, seed, &s.sweep));
        body << "n_photons,eta,mean,stderr\n";
        for (int si = 0; si < sipm_sweep_series_count(s.sweep); ++si)
            for (int i = 0; i < sipm_sweep_point_count(s.sweep); ++i) {
                sipm_stat st{};
                check(sipm_sweep_stat(s.sweep, si, i, &st));
                body << fmt_double(sipm_sweep_series_param(s.sweep, si)) << ","
                     << fmt_double(sipm_sweep_x(s.sweep, i)) << "," << fmt_double(st.mean)
                     << "," << fmt_double(st.sem) << "\n";
            }
    } else { // ct, cluster, stages over an N_trg grid
        std::vector<double> eps = opt.eps;
        if (eps.empty()) eps = {0.05, 0.5, 1.0};
        std::vector<double> xs;
        for (int n = opt.n_trg_min; n <= opt.n_trg_max; n += opt.n_trg_step)
            xs.push_back(n);
        header(" --n-trg-min " + std::to_string(opt.n_trg_min) + " --n-trg-max " +
               std::to_string(opt.n_trg_max) + " --n-trg-step " +
               std::to_string(opt.n_trg_step) + " --eps " + join(eps));
        SweepGuard s;
        check(sipm_sweep_run(d.det, it->second, xs.data(), static_cast<int>(xs.size()),
                             eps.data(), static_cast<int>(eps.size()), opt.runs, seed,
                             &s.sweep));
        body << "epsilon_nn,n_trg,mean,stderr\n";
        for (int si = 0; si < sipm_sweep_series_count(s.sweep); ++si)
            for (int i = 0; i < sipm_sweep_point_count(s.sweep); ++i) {
                sipm_stat st{};
                check(sipm_sweep_stat(s.sweep, si, i, &st));
                body << fmt_double(sipm_sweep_series_param(s.sweep, si)) << ","
                     << static_cast<int>(sipm_sweep_x(s.sweep, i)) << ","
                     << fmt_double(st.mean) << "," << fmt_double(st.sem) << "\n";
            }
    }

    if (opt.out_path.empty()) {
        std::cout << body.str();
    } else {
        open_output(opt.out_path) << body.str();
    }
    return 0;
}

// ------------------------------------------------------------------
// fit

struct FitOpts {
    std::string hist_path;
    std::string model = "all";
    int rows = 10, cols = 10;
    double mean_lo = 0.2, mean_hi = 8.0;
    int mean_points = 9;
    double eps_lo = 0.0, eps_hi = 0.3;
    int eps_points = 7;
    long long mc_runs = 100000;
    uint64_t fit_seed = 1;
    bool loglike = false;
    std::string out_path;
    std::string overlay_path;
};

std::vector<long long> read_histogram(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError{path + ": cannot open file"};
    std::vector<long long> counts;
    std::string line;
    int lineno = 0;
    bool any_row = false;
    while (std::getline(in, line)) {
        ++lineno;
        // tolerate trailing CR from hand-edited files
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (line == "n,count") continue;
        long long n = 0, c = 0;
        char extra = 0;
        const int got = std::sscanf(line.c_str(), "%lld ,%lld %c", &n, &c, &extra);
        if (got != 2)
            throw ParseError{path + ":" + std::to_string(lineno) +
                             ": expected 'n,count', got '" + line + "'"};
        if (n < 0 || c < 0)
            throw ParseError{path + ":" + std::to_string(lineno) +
                             ": negative value"};
        if (static_cast<size_t>(n) >= counts.size())
            counts.resize(static_cast<size_t>(n) + 1, 0);
        counts[static_cast<size_t>(n)] += c;
        any_row = true;
    }
    if (!any_row) throw ParseError{path + ": no data rows"};
    return counts;
}

int run_fit(const FitOpts& opt) {
    static const std::map<std::string, int> models = {
        {"full", SIPM_MODEL_FULL_MC},
        {"onestage", SIPM_MODEL_ONE_STAGE},
        {"recursive", SIPM_MODEL_RECURSIVE}};
    std::vector<std::pair<std::string, int>> to_fit;
    if (opt.model == "all") {
        for (const auto& [name, id] : models) to_fit.emplace_back(name, id);
    } else {
        const auto it = models.find(opt.model);
        if (it == models.end()) {
            std::cerr << "fit: unknown model '" << opt.model
                      << "' (full, onestage, recursive, all)\n";
            return kExitUsage;
        }
        to_fit.emplace_back(it->first, it->second);
    }

    const auto counts = read_histogram(opt.hist_path);
    long long total = 0;
    for (long long c : counts) total += c;

    std::vector<std::pair<std::string, sipm_fit_result>> results;
    for (const auto& [name, id] : to_fit) {
        sipm_fit_config cfg;
        sipm_fit_config_init(&cfg);
        cfg.model = id;
        cfg.mean_n_lo = opt.mean_lo;
        cfg.mean_n_hi = opt.mean_hi;
        cfg.mean_n_points = opt.mean_points;
        cfg.epsilon_lo = opt.eps_lo;
        cfg.epsilon_hi = opt.eps_hi;
        cfg.epsilon_points = opt.eps_points;
        cfg.mc_runs = opt.mc_runs;
        cfg.rng_seed = opt.fit_seed;
        cfg.use_loglike = opt.loglike ? 1 : 0;
        sipm_fit_result r{};
        check(sipm_fit_histogram(counts.data(), static_cast<int>(counts.size()), &cfg,
                                 opt.rows, opt.cols, &r));
        results.emplace_back(name, r);
    }
    std::stable_sort(results.begin(), results.end(), [](const auto& a, const auto& b) {
        return a.second.chi2 / a.second.dof < b.second.chi2 / b.second.dof;
    });

    json out = json::array();
    for (const auto& [name, r] : results) {
        out.push_back({{"model", name},
                       {"mean_n_hat", r.mean_n_hat},
                       {"mean_n_sigma", r.mean_n_sigma},
                       {"epsilon_hat", r.epsilon_hat},
                       {"epsilon_sigma", r.epsilon_sigma},
                       {"chi2", r.chi2},
                       {"dof", r.dof},
                       {"chi2_per_dof", r.chi2 / r.dof},
                       {"boundary_flag", r.boundary_flag != 0}});
        std::printf("%-9s mean_n = %.4f +- %.4f  epsilon = %.5f +- %.5f  "
                    "chi2/dof = %.3f (%d dof)%s\n",
                    name.c_str(), r.mean_n_hat, r.mean_n_sigma, r.epsilon_hat,
                    r.epsilon_sigma, r.chi2 / r.dof, r.dof,
                    r.boundary_flag ? "  [boundary]" : "");
    }
    if (!opt.out_path.empty()) open_output(opt.out_path) << out.dump(2) << "\n";

    if (!opt.overlay_path.empty()) {
        // model-vs-data table for semi-log overlay plots
        const int len = static_cast<int>(counts.size());
        std::vector<std::vector<double>> curves;
        for (const auto& [name, r] : results) {
            std::vector<double> pmf(static_cast<size_t>(len));
            const auto it2 = models.find(name);
            check(sipm_model_pmf(it2->second, r.mean_n_hat, r.epsilon_hat, opt.rows,
                                 opt.cols, opt.mc_runs, opt.fit_seed, len, pmf.data()));
            curves.push_back(std::move(pmf));
        }
        auto out_file = open_output(opt.overlay_path);
        out_file << "n,data";
        for (const auto& [name, r] : results) out_file << "," << name;
        out_file << "\n";
        for (int n = 0; n < len; ++n) {
            out_file << n << ","
                     << fmt_double(static_cast<double>(counts[static_cast<size_t>(n)]) /
                                   static_cast<double>(total));
            for (const auto& c : curves)
                out_file << "," << fmt_double(c[static_cast<size_t>(n)]);
            out_file << "\n";
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SiPM crosstalk lattice simulator"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (0 = auto)");

    SimulateOpts sim;
    auto* simulate = app.add_subcommand("simulate", "single run or pulse ensemble");
    simulate->add_option("--rows", sim.rows);
    simulate->add_option("--cols", sim.cols);
    simulate->add_option("--eta", sim.eta, "detection efficiency");
    simulate->add_option("--eps-nn", sim.eps_nn, "neighbour crosstalk probability");
    simulate->add_option("--n-trg", sim.n_trg, "exact initial trigger count");
    simulate->add_option("--photons", sim.photons, "fixed photon number");
    simulate->add_option("--thermal", sim.thermal, "thermal source mean photon number");
    simulate->add_option("--runs", sim.runs, "pulses; >1 emits a histogram");
    simulate->add_option("--seed", sim.seed);
    simulate->add_option("--stream", sim.stream);
    simulate->add_option("--out", sim.out_path);

    SweepOpts sw;
    auto* sweep = app.add_subcommand("sweep", "crosstalk / cluster / stage / saturation sweeps");
    sweep->add_option("kind", sw.kind,
                      "ct | cluster | stages | saturation | critical | linearity")
        ->required();
    sweep->add_option("--rows", sw.rows);
    sweep->add_option("--cols", sw.cols);
    sweep->add_option("--runs", sw.runs);
    sweep->add_option("--seed", sw.seed);
    sweep->add_option("--eps", sw.eps)->delimiter(',');
    sweep->add_option("--photons", sw.photons)->delimiter(',');
    sweep->add_option("--n-trg-min", sw.n_trg_min);
    sweep->add_option("--n-trg-max", sw.n_trg_max);
    sweep->add_option("--n-trg-step", sw.n_trg_step);
    sweep->add_option("--eta-min", sw.eta_min);
    sweep->add_option("--eta-max", sw.eta_max);
    sweep->add_option("--eta-step", sw.eta_step);
    sweep->add_option("--out", sw.out_path);

    FitOpts fit;
    auto* fitcmd = app.add_subcommand("fit", "fit a photon-number histogram");
    fitcmd->add_option("histogram", fit.hist_path, "CSV file with n,count rows")
        ->required();
    fitcmd->add_option("--model", fit.model, "full | onestage | recursive | all");
    fitcmd->add_option("--rows", fit.rows);
    fitcmd->add_option("--cols", fit.cols);
    fitcmd->add_option("--mean-lo", fit.mean_lo);
    fitcmd->add_option("--mean-hi", fit.mean_hi);
    fitcmd->add_option("--mean-points", fit.mean_points);
    fitcmd->add_option("--eps-lo", fit.eps_lo);
    fitcmd->add_option("--eps-hi", fit.eps_hi);
    fitcmd->add_option("--eps-points", fit.eps_points);
    fitcmd->add_option("--mc-runs", fit.mc_runs);
    fitcmd->add_option("--fit-seed", fit.fit_seed);
    fitcmd->add_flag("--loglike", fit.loglike);
    fitcmd->add_option("--out", fit.out_path, "fit result JSON");
    fitcmd->add_option("--overlay", fit.overlay_path, "model-vs-data CSV");

    // sweep --photons doubles as the linearity photon number
    sweep->callback([&] {
        if (!sw.photons.empty()) sw.lin_photons = sw.photons.front();
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    sipm_set_default_threads(threads);
    try {
        if (simulate->parsed()) return run_simulate(sim);
        if (sweep->parsed()) return run_sweep(sw);
        return run_fit(fit);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.message << "\n";
        return kExitParse;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.message << "\n";
        return kExitNumeric;
    }
}
