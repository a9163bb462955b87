#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "occusim/models.hpp"

// Experiment run configuration: JSON documents plus named presets, with
// dotted-path overrides ("model.beta=3", "partition.bins=[4,8,16]").

namespace occusim {

class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ModelConfig {
    std::string id = "cranston-le-jan"; // cranston-le-jan | raimond | lov
    int dim = 1;                        // raimond only; others are fixed
    double beta = 0.0;                  // cranston-le-jan / raimond interaction strength
    double eps_reg = 1e-2;              // raimond smoothing
    LovParams lov{1.0, -0.1, 0.01, 0.00375, 0.1, 0.0, 100.0};

    // Instantiates the configured model; throws config_error on a bad id and
    // invalid_argument on bad parameters.
    std::unique_ptr<OsdeModel> build() const;
};

struct RunConfig {
    std::string experiment = "simulate"; // simulate | converge | price
    ModelConfig model;

    double horizon = 1.0;
    int steps = 512;

    double radius = 2.0;
    std::vector<int> bins; // strictly ascending; converge/price need >= 3 entries

    int family_truncation = 64;
    long paths = 100;
    std::uint64_t seed = 0;

    std::string payoff = "asian-floating";
    std::string reference = "high-k"; // exact-oracle | high-k
    int reference_bins = 75;

    std::vector<double> x0;  // empty = model default start
    double stop_radius = 0.0;
    std::vector<double> exit_radii; // simulate mode: exceedance diagnostics

    int threads = 0;          // 0 = OCCUSIM_THREADS env or OpenMP default
    long sample_paths = 4;    // simulate mode: trajectories written to paths.csv
    int bootstrap_resamples = 1000;
    double max_excluded_fraction = 0.01;
    std::string output_dir = "out";
    bool gnuplot = false;

    // --check mode thresholds: fitted log-log slopes of the checked columns
    // must land in [slope_min, slope_max] and the checked errors must be
    // monotone within noise. Empty columns = the experiment's default set
    // (converge: state + occupation; price: weak).
    double check_slope_min = -1.4;
    double check_slope_max = -0.6;
    std::vector<std::string> check_columns;

    // Start state: configured x0, or the model's natural default.
    std::vector<double> start_state() const;
};

// Parse a JSON config document, apply dotted-path overrides in order, then
// validate. Throws config_error with the offending field in the message.
RunConfig config_from_json(const std::string& text,
                           std::span<const std::string> overrides = {});

// Built-in experiment presets; throws config_error for unknown names.
std::string preset_json(const std::string& name);
std::vector<std::string> preset_names();

// Reduce path count for a quick smoke run of the same experiment; widens the
// check band to compensate for the extra Monte Carlo noise.
void apply_fast_mode(RunConfig& config);

// Resolved config as a canonical JSON document (17 significant digits).
std::string config_to_json(const RunConfig& config);

// Field-by-field validation; throws config_error naming the field.
void validate_config(const RunConfig& config);

} // namespace occusim
