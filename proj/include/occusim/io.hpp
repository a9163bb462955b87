#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "occusim/config.hpp"
#include "occusim/harness.hpp"

// Text output for experiment results: CSV tables (17 significant digits),
// run metadata as JSON, and optional gnuplot scripts. All writers are pure
// string builders so they can be tested without touching the filesystem.

namespace occusim {

void write_text_file(const std::filesystem::path& path, const std::string& content);

// Columns: K, state_error, occ_error, state_err_stderr, occ_err_stderr.
// `terminal` selects the terminal-time error variant over the sup-over-nodes
// variant; the schema is identical.
std::string error_table_csv(const ErrorTable& table, bool terminal);

// Per-level sanity columns: exterior occupation mass, truncation frequency,
// and the number of excluded paths.
std::string diagnostics_csv(const ErrorTable& table);

// One row per named log-log fit.
std::string rate_fit_csv(std::span<const std::pair<std::string, RateFit>> fits);

// Columns: K, price, stderr, ci_low, ci_high, weak_error, coupled_strong_error.
// The reference level is the last row (weak error zero by construction).
std::string price_table_csv(const PriceTable& table);

// Long-format trajectories: path_id, step, t, x_0..x_{d-1}. Only the first
// `limit` paths are written.
std::string paths_csv(std::span<const SimulatedPath> paths, const TimeGrid& grid, long limit);

// Final occupation vectors, nonzero cells only:
// path_id, bin, center_0..center_{d-1}, weight.
std::string occupation_csv(std::span<const SimulatedPath> paths, const PartitionOfUnity& part,
                           long limit);

// Columns: radius, exceedance_fraction.
std::string exit_fractions_csv(const ExitDiagnostics& diag);

// Deterministic run descriptor: tool, version, generator id, resolved config,
// and the list of files written. Contains no timestamps so repeated runs are
// byte-identical.
std::string metadata_json(const RunConfig& config, const std::string& version,
                          std::span<const std::string> outputs);

std::string converge_gnuplot_script();
std::string price_gnuplot_script();

} // namespace occusim
