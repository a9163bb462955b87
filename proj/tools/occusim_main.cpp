#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "occusim/config.hpp"
#include "occusim/format.hpp"
#include "occusim/harness.hpp"
#include "occusim/io.hpp"
#include "occusim/scheme.hpp"

#ifndef OCCUSIM_VERSION
#define OCCUSIM_VERSION "unversioned"
#endif

namespace fs = std::filesystem;

namespace {

using namespace occusim;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;     // I/O and other runtime failures
constexpr int kExitConfig = 2;      // configuration errors
constexpr int kExitDiverged = 3;    // simulation divergence
constexpr int kExitCheckFailed = 4; // acceptance-threshold failure in --check mode

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw config_error("config: cannot read file '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Collects output files in a run directory and the list for the metadata.
struct Emitter {
    fs::path dir;
    std::vector<std::string> names;

    explicit Emitter(const std::string& d) : dir(d) { fs::create_directories(dir); }
    void emit(const std::string& name, const std::string& content) {
        write_text_file(dir / name, content);
        names.push_back(name);
    }
    void finish(const RunConfig& cfg) {
        names.push_back("metadata.json");
        write_text_file(dir / "metadata.json", metadata_json(cfg, OCCUSIM_VERSION, names));
        std::cout << "wrote " << names.size() << " files to " << dir.string() << "\n";
    }
};

std::vector<std::string> check_columns(const RunConfig& cfg) {
    if (!cfg.check_columns.empty()) return cfg.check_columns;
    if (cfg.experiment == "price") return {"weak"};
    return {"state", "occupation"};
}

bool slope_in_band(const std::string& name, double slope, const RunConfig& cfg) {
    const bool ok = slope >= cfg.check_slope_min && slope <= cfg.check_slope_max;
    (ok ? std::cout : std::cerr)
        << "[check] " << name << " slope " << format_double(slope) << (ok ? " within [" : " OUTSIDE [")
        << format_double(cfg.check_slope_min) << ", " << format_double(cfg.check_slope_max)
        << "]\n";
    return ok;
}

bool require(bool cond, const std::string& what) {
    (cond ? std::cout : std::cerr) << "[check] " << what << (cond ? ": ok" : ": FAILED") << "\n";
    return cond;
}

ErrorColumn parse_column(const std::string& name) {
    if (name == "state") return ErrorColumn::state;
    if (name == "occupation") return ErrorColumn::occupation;
    if (name == "state_terminal") return ErrorColumn::state_terminal;
    return ErrorColumn::occupation_terminal;
}

int cmd_converge(const RunConfig& cfg, bool check_mode) {
    const auto model = cfg.model.build();
    const TimeGrid grid{cfg.horizon, cfg.steps};

    StrongErrorOptions opt;
    opt.k_list = cfg.bins;
    opt.reference = cfg.reference == "exact-oracle" ? ReferenceKind::exact_oracle
                                                    : ReferenceKind::high_k;
    opt.reference_bins = cfg.reference_bins;
    opt.paths = cfg.paths;
    opt.seed = cfg.seed;
    opt.radius = cfg.radius;
    opt.family_truncation = cfg.family_truncation;
    opt.x0 = cfg.start_state();
    opt.stop_radius = cfg.stop_radius;
    opt.threads = cfg.threads;
    opt.max_excluded_fraction = cfg.max_excluded_fraction;
    opt.bootstrap_resamples = cfg.bootstrap_resamples;

    const ErrorTable table = strong_error_experiment(*model, grid, opt);

    for (const ErrorRow& r : table.rows)
        std::cout << "K=" << r.bins << "  state_error=" << format_double(r.state_error)
                  << "  occ_error=" << format_double(r.occ_error) << "\n";

    std::vector<std::pair<std::string, RateFit>> fits;
    for (const char* name : {"state", "occupation", "state_terminal", "occupation_terminal"}) {
        try {
            fits.emplace_back(name, fit_rate(table, parse_column(name)));
            std::cout << "fit " << name << ": slope " << format_double(fits.back().second.slope)
                      << " (r^2 " << format_double(fits.back().second.r_squared) << ")\n";
        } catch (const std::invalid_argument&) {
            // nothing to fit for this column (errors at the noise floor)
        }
    }

    Emitter em(cfg.output_dir);
    em.emit("error_table.csv", error_table_csv(table, /*terminal=*/false));
    em.emit("error_table_terminal.csv", error_table_csv(table, /*terminal=*/true));
    em.emit("diagnostics.csv", diagnostics_csv(table));
    em.emit("rate_fit.csv", rate_fit_csv(fits));
    if (cfg.gnuplot) em.emit("plot.gp", converge_gnuplot_script());
    em.finish(cfg);

    if (!check_mode) return kExitOk;
    bool ok = true;
    for (const std::string& col : check_columns(cfg)) {
        const auto fit =
            std::find_if(fits.begin(), fits.end(), [&](const auto& f) { return f.first == col; });
        if (fit == fits.end()) {
            std::cerr << "[check] no usable rate fit for column '" << col << "'\n";
            ok = false;
            continue;
        }
        ok = slope_in_band(col, fit->second.slope, cfg) && ok;
        if (col == "state")
            ok = require(table.state_monotone_ok, "state errors monotone within noise") && ok;
        if (col == "occupation")
            ok = require(table.occ_monotone_ok, "occupation errors monotone within noise") && ok;
    }
    return ok ? kExitOk : kExitCheckFailed;
}

int cmd_price(const RunConfig& cfg, bool check_mode) {
    const auto model = cfg.model.build();
    const TimeGrid grid{cfg.horizon, cfg.steps};

    WeakErrorOptions opt;
    opt.k_list = cfg.bins;
    opt.reference_bins = cfg.reference_bins;
    opt.paths = cfg.paths;
    opt.seed = cfg.seed;
    opt.radius = cfg.radius;
    opt.x0 = cfg.start_state();
    opt.threads = cfg.threads;
    opt.max_excluded_fraction = cfg.max_excluded_fraction;
    opt.payoff_id = cfg.payoff;

    const PriceTable table = weak_error_experiment(*model, asian_floating_payoff, grid, opt);

    std::cout << "reference K=" << table.reference.estimate.bins << "  price="
              << format_double(table.reference.estimate.price) << "  stderr="
              << format_double(table.reference.estimate.std_error) << "\n";
    for (const PriceRow& r : table.rows)
        std::cout << "K=" << r.estimate.bins << "  price=" << format_double(r.estimate.price)
                  << "  weak_error=" << format_double(r.weak_error) << "\n";

    std::vector<double> bins, weak;
    for (const PriceRow& r : table.rows) {
        bins.push_back(double(r.estimate.bins));
        weak.push_back(r.weak_error);
    }
    std::vector<std::pair<std::string, RateFit>> fits;
    try {
        fits.emplace_back("weak", fit_rate(bins, weak));
        std::cout << "fit weak: slope " << format_double(fits.back().second.slope) << "\n";
    } catch (const std::invalid_argument&) {
    }

    Emitter em(cfg.output_dir);
    em.emit("price_table.csv", price_table_csv(table));
    em.emit("rate_fit.csv", rate_fit_csv(fits));
    if (cfg.gnuplot) em.emit("plot.gp", price_gnuplot_script());
    em.finish(cfg);

    if (!check_mode) return kExitOk;
    bool ok = true;
    for (const std::string& col : check_columns(cfg)) {
        if (col != "weak") {
            std::cerr << "[check] column '" << col << "' not produced by a price run\n";
            ok = false;
            continue;
        }
        if (fits.empty()) {
            std::cerr << "[check] no usable weak-error rate fit\n";
            ok = false;
            continue;
        }
        ok = slope_in_band("weak", fits.front().second.slope, cfg) && ok;
    }
    for (const PriceRow& r : table.rows)
        ok = require(r.weak_error <= r.coupled_strong_error * 1.01,
                     "K=" + std::to_string(r.estimate.bins) +
                         " weak error within coupled strong error") &&
             ok;
    return ok ? kExitOk : kExitCheckFailed;
}

int cmd_simulate(const RunConfig& cfg, bool check_mode) {
    const auto model = cfg.model.build();
    const TimeGrid grid{cfg.horizon, cfg.steps};
    const PartitionOfUnity part(model->dim(), cfg.radius, cfg.bins.front());
    const auto projected = project_coefficients(*model, part);

    std::unique_ptr<SeparatingFamily> fam;
    std::unique_ptr<PartitionPairingTable> ptable;
    EulerOptions opts;
    opts.record_states = true;
    opts.stop_radius = cfg.stop_radius;
    if (!cfg.exit_radii.empty() || cfg.stop_radius > 0.0) {
        fam = std::make_unique<SeparatingFamily>(model->dim(), cfg.family_truncation);
        ptable = std::make_unique<PartitionPairingTable>(part, *fam);
        opts.pairings = ptable.get();
    }

    const auto paths = run_batch(*projected, grid, cfg.seed, cfg.paths, cfg.start_state(), {},
                                 opts, cfg.threads);

    Emitter em(cfg.output_dir);
    em.emit("paths.csv", paths_csv(paths, grid, cfg.sample_paths));
    em.emit("occupation.csv", occupation_csv(paths, part, cfg.sample_paths));
    if (!cfg.exit_radii.empty())
        em.emit("exit_fractions.csv",
                exit_fractions_csv(exit_time_diagnostics(paths, cfg.exit_radii)));
    em.finish(cfg);

    if (check_mode) std::cout << "[check] simulate runs have no thresholds\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"occupied-diffusion simulator: cylindrical-projection experiments"};
    app.set_version_flag("--version", OCCUSIM_VERSION);

    std::string config_path, preset, out_dir;
    std::vector<std::string> sets;
    std::uint64_t seed = 0;
    int threads = -1;
    bool fast = false, check = false, gnuplot = false, list_presets = false;

    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--preset", preset, "start from a named preset configuration");
    app.add_flag("--list-presets", list_presets, "print available preset names and exit");
    app.add_option("--set", sets, "config override as dotted.path=value (repeatable)");
    auto* seed_opt = app.add_option("--seed", seed, "override the base seed");
    app.add_option("--out", out_dir, "override the output directory");
    app.add_option("--threads", threads,
                   "worker thread count (otherwise OCCUSIM_THREADS or the OpenMP default)");
    app.add_flag("--fast", fast, "smoke-run variant: quarter the path count, widen check bands");
    app.add_flag("--check", check, "verify result thresholds; exit 4 when they fail");
    app.add_flag("--gnuplot", gnuplot, "also write a gnuplot script next to the CSV files");

    auto* sub_sim =
        app.add_subcommand("simulate", "write sample trajectories and final occupations");
    auto* sub_conv =
        app.add_subcommand("converge", "strong-error study across partition resolutions");
    auto* sub_price = app.add_subcommand("price", "Monte Carlo pricing with weak-error study");
    app.require_subcommand(0, 1);
    for (CLI::App* sub : {sub_sim, sub_conv, sub_price}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (list_presets) {
        for (const std::string& name : preset_names()) std::cout << name << "\n";
        return kExitOk;
    }

    try {
        if (!preset.empty() && !config_path.empty())
            throw config_error("config: use either --preset or --config, not both");
        std::string text = "{}";
        if (!preset.empty())
            text = preset_json(preset);
        else if (!config_path.empty())
            text = read_file(config_path);

        std::vector<std::string> overrides = sets;
        if (threads >= 0) overrides.push_back("threads=" + std::to_string(threads));
        if (seed_opt->count() > 0) overrides.push_back("seed=" + std::to_string(seed));
        if (!out_dir.empty()) overrides.push_back("output_dir=\"" + json_escape(out_dir) + "\"");
        if (gnuplot) overrides.push_back("gnuplot=true");
        if (sub_sim->parsed()) overrides.push_back("experiment=\"simulate\"");
        if (sub_conv->parsed()) overrides.push_back("experiment=\"converge\"");
        if (sub_price->parsed()) overrides.push_back("experiment=\"price\"");

        RunConfig cfg = config_from_json(text, overrides);
        if (fast) apply_fast_mode(cfg);

        if (cfg.experiment == "converge") return cmd_converge(cfg, check);
        if (cfg.experiment == "price") return cmd_price(cfg, check);
        return cmd_simulate(cfg, check);
    } catch (const config_error& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const simulation_diverged& e) {
        std::cerr << e.what() << "\n";
        return kExitDiverged;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitFailure;
    }
}
