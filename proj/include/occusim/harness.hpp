#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "occusim/models.hpp"
#include "occusim/oracle.hpp"
#include "occusim/scheme.hpp"

// Convergence experiments. A single family of Brownian paths drives the
// reference solution and every partition resolution (common random numbers),
// so pathwise errors are directly estimable. Strong errors are root mean
// squares of per-path sup-over-nodes statistics; weak errors are differences
// of Monte Carlo prices against a reference resolution.

namespace occusim {

// How the reference solution is produced: the closed-form kernel solution
// (mean-attracting linear model only) or a high-resolution run.
enum class ReferenceKind { exact_oracle, high_k };

struct ErrorRow {
    int bins = 0; // partition resolution K
    // sup-over-nodes errors: E[sup_n |.|^2]^{1/2} across paths
    double state_error = 0.0;
    double occ_error = 0.0;
    double state_std_error = 0.0; // bootstrap standard errors
    double occ_std_error = 0.0;
    // terminal-node variant of the same errors
    double state_error_terminal = 0.0;
    double occ_error_terminal = 0.0;
    double state_terminal_std_error = 0.0;
    double occ_terminal_std_error = 0.0;
    // diagnostics
    double exterior_mass_fraction = 0.0; // mean share of occupation mass in the exterior cell
    double truncation_fraction = 0.0;    // share of paths frozen by the stop radius
};

struct ErrorTable {
    std::vector<ErrorRow> rows; // sorted by bins
    long paths = 0;             // included paths (common to all rows)
    long excluded = 0;          // divergent paths dropped from every row
    int steps = 0;
    std::uint64_t seed = 0;
    std::string reference;        // "exact-oracle" or "high-k:<bins>"
    bool state_monotone_ok = true; // no error increase beyond 3 combined std errors
    bool occ_monotone_ok = true;
};

struct StrongErrorOptions {
    std::vector<int> k_list;                    // ascending partition resolutions
    ReferenceKind reference = ReferenceKind::high_k;
    int reference_bins = 0;                     // required for high_k; > max(k_list)
    long paths = 0;
    std::uint64_t seed = 0;
    double radius = 0.0;                        // partition half-width R
    int family_truncation = 64;
    std::vector<double> x0;
    double stop_radius = 0.0;                   // 0 = never freeze
    int threads = 0;
    double max_excluded_fraction = 0.01;
    int oracle_resolution = 256;                // kernel quadrature density
    int bootstrap_resamples = 1000;
};

ErrorTable strong_error_experiment(const OsdeModel& model, const TimeGrid& grid,
                                   const StrongErrorOptions& options);
// Plain-loop reference implementation (testing/benchmark counterpart).
ErrorTable strong_error_experiment_serial(const OsdeModel& model, const TimeGrid& grid,
                                          const StrongErrorOptions& options);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0; // of log(error) on log(bins)
    double r_squared = 0.0;
    int points = 0;
    double bins_min = 0.0;
    double bins_max = 0.0;
};

enum class ErrorColumn { state, occupation, state_terminal, occupation_terminal };

// Ordinary least squares of log(error) on log(bins). Nonpositive errors are
// skipped; fewer than 3 usable points is an invalid_argument.
RateFit fit_rate(std::span<const double> bins, std::span<const double> errors);
RateFit fit_rate(const ErrorTable& table, ErrorColumn column);

struct PriceEstimate {
    double price = 0.0;
    double std_error = 0.0;
    long paths = 0;
    int bins = 0;
    std::string payoff_id;
    double ci_halfwidth() const { return 1.96 * std_error; }
};

struct PriceRow {
    PriceEstimate estimate;
    double weak_error = 0.0;            // |price(reference) - price(K)|
    double coupled_strong_error = 0.0;  // Lipschitz bound side, see below
};

struct PriceTable {
    PriceRow reference;         // the high-resolution estimator itself
    std::vector<PriceRow> rows; // sorted by bins
    long paths = 0;
    long excluded = 0;
    int steps = 0;
    std::uint64_t seed = 0;
};

// Payoff of a completed path given its partition. Must be pure.
using PathPayoff = std::function<double(const SimulatedPath&, const PartitionOfUnity&)>;

// Floating-strike Asian call: (X_T - barycenter(lift(Z_T)))^+, where the
// barycenter is the first moment over the mass. Zero terminal mass is an
// invalid_argument.
double asian_floating_payoff(const SimulatedPath& path, const PartitionOfUnity& part);

// Coupled per-path inputs to the Lipschitz payoff bound: the weak-error rows
// report sqrt(mean((|dX_T| + |d barycenter|)^2)) against the reference, which
// dominates |price difference| for 1-Lipschitz payoffs by Cauchy-Schwarz.
struct WeakErrorOptions {
    std::vector<int> k_list;
    int reference_bins = 0; // > max(k_list)
    long paths = 0;
    std::uint64_t seed = 0;
    double radius = 0.0;
    std::vector<double> x0;
    int threads = 0;
    double max_excluded_fraction = 0.01;
    std::string payoff_id = "asian-floating";
};

PriceTable weak_error_experiment(const OsdeModel& model, const PathPayoff& payoff,
                                 const TimeGrid& grid, const WeakErrorOptions& options);
PriceTable weak_error_experiment_serial(const OsdeModel& model, const PathPayoff& payoff,
                                        const TimeGrid& grid, const WeakErrorOptions& options);

struct ExitDiagnostics {
    std::vector<double> radii;
    std::vector<double> exceedance_fraction; // P(sup joint norm >= R), same order
    long paths = 0;
};

// Empirical exceedance frequencies of the running joint norm over a radius
// grid. Requires paths simulated with pairing tracking; fractions are
// non-increasing in the radius by construction (nested events).
ExitDiagnostics exit_time_diagnostics(std::span<const SimulatedPath> paths,
                                      std::span<const double> radii);

} // namespace occusim
