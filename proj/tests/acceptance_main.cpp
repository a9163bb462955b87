// Release acceptance gate. Each numbered criterion prints a single
// [PASS]/[FAIL] line with its measured quantities and elapsed time; the exit
// status is the number of failed criteria. argv[1] names the CLI binary used
// by the end-to-end determinism criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "occusim/config.hpp"
#include "occusim/harness.hpp"
#include "occusim/io.hpp"
#include "occusim/measure.hpp"
#include "occusim/models.hpp"
#include "occusim/oracle.hpp"
#include "occusim/quadrature.hpp"
#include "occusim/rng.hpp"
#include "occusim/scheme.hpp"

using namespace occusim;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail, double secs) {
    std::ostringstream line;
    line << (ok ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << name;
    if (!detail.empty()) line << " -- " << detail;
    line << " (" << std::fixed << secs << std::defaultfloat << " s)";
    std::cout << line.str() << std::endl;
    if (!ok) ++g_failures;
}

void run_criterion(int id, const std::string& name,
                   const std::function<bool(std::string&)>& body) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report(id, name, ok, detail, secs);
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

// Deterministic per-case random draws for the property suites.
struct Draw {
    std::uint64_t seed;
    std::uint64_t stream;
    std::uint64_t step = 0;
    double u() { return rng::uniform01(seed, stream, step++, 0); }
    double range(double lo, double hi) { return lo + (hi - lo) * u(); }
    long integer(long lo, long hi) { // inclusive bounds
        return lo + long(u() * double(hi - lo + 1)) % (hi - lo + 1);
    }
};

DiscreteMeasure random_measure(Draw& d, int dim, double box, int max_atoms) {
    DiscreteMeasure o(dim);
    const long atoms = d.integer(1, max_atoms);
    std::vector<double> y(static_cast<std::size_t>(dim));
    for (long a = 0; a < atoms; ++a) {
        for (int i = 0; i < dim; ++i) y[std::size_t(i)] = d.range(-box, box);
        o.add_atom(Point(y.data(), y.size()), d.range(0.0, 2.0));
    }
    return o;
}

bool read_file(const std::filesystem::path& p, std::string& out) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return false;
    std::ostringstream buf;
    buf << in.rdbuf();
    out = buf.str();
    return true;
}

// ---------------------------------------------------------------------------

bool criterion1_kernel_identities(std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    const int grid_points = 100;
    const VolterraKernel interacting(5.0);
    const VolterraKernel flat(0.0);

    double worst_diag = 0.0, worst_flat = 0.0;
    for (int i = 0; i < grid_points; ++i) {
        const double t = double(i) / (grid_points - 1);
        worst_diag = std::max(worst_diag, std::abs(interacting.eval(t, t) - 1.0));
        for (int j = 0; j <= i; ++j) {
            const double s = double(j) / (grid_points - 1);
            worst_flat = std::max(worst_flat, std::abs(flat.eval(t, s) - 1.0));
        }
    }

    // fixed-resolution Simpson kernel against the adaptive Gauss-Kronrod oracle
    const double beta = 5.0;
    double worst_gap = 0.0;
    const int sweep = 40;
    for (int i = 0; i < sweep; ++i) {
        const double t = double(i) / (sweep - 1);
        for (int j = 0; j <= i; ++j) {
            const double s = double(j) / (sweep - 1);
            const auto integrand = [&](double u) { return std::exp(-0.5 * beta * u * u); };
            const double tail = quad::adaptive_gauss_kronrod(integrand, s, t, 1e-13);
            const double oracle = 1.0 - beta * s * std::exp(0.5 * beta * s * s) * tail;
            worst_gap = std::max(worst_gap, std::abs(interacting.eval(t, s) - oracle));
        }
    }

    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    detail = "|k(s,s)-1| max " + fmt(worst_diag) + ", |k-1| max (beta 0) " + fmt(worst_flat) +
             ", Simpson vs adaptive max " + fmt(worst_gap);
    return worst_diag <= 1e-12 && worst_flat <= 1e-12 && worst_gap <= 1e-8 && secs < 1.0;
}

bool criterion2_degenerate_coupling(std::string& detail) {
    const TimeGrid grid(1.0, 512);
    const auto model = cranston_le_jan(0.0);
    const double x0 = 0.25;
    double worst = 0.0;
    for (int bins : {4, 16, 64}) {
        const PartitionOfUnity part(1, 2.0, bins);
        const auto projected = model->project(part);
        for (long p = 0; p < 100; ++p) {
            const BrownianPath noise = generate_brownian(9001, std::uint64_t(p), grid, 1);
            const SimulatedPath path = euler_maruyama(*projected, grid, noise, Point(&x0, 1));
            double walk = x0;
            worst = std::max(worst, std::abs(path.states[0] - walk));
            for (int n = 1; n <= grid.steps; ++n) {
                walk += noise.increments[std::size_t(n - 1)];
                worst = std::max(worst, std::abs(path.states[std::size_t(n)] - walk));
            }
        }
    }
    detail = "max |scheme - random walk| = " + fmt(worst) + " over 300 paths";
    return worst < 1e-10;
}

// Point estimates must fall strictly at every refinement, and any apparent
// increase would have to exceed three combined bootstrap standard errors to
// count as a real regression.
bool strictly_decreasing_within_noise(const ErrorTable& table, bool occupation) {
    for (std::size_t i = 0; i + 1 < table.rows.size(); ++i) {
        const double a = occupation ? table.rows[i].occ_error : table.rows[i].state_error;
        const double b =
            occupation ? table.rows[i + 1].occ_error : table.rows[i + 1].state_error;
        const double sa =
            occupation ? table.rows[i].occ_std_error : table.rows[i].state_std_error;
        const double sb =
            occupation ? table.rows[i + 1].occ_std_error : table.rows[i + 1].state_std_error;
        if (!(b < a) || b - a > 3.0 * std::sqrt(sa * sa + sb * sb)) return false;
    }
    return true;
}

bool criterion3_strong_rate(std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    const CranstonLeJanModel model(5.0);
    const TimeGrid grid(1.0, 512);
    StrongErrorOptions opt;
    opt.k_list = {4, 8, 16, 32, 64};
    opt.reference = ReferenceKind::exact_oracle;
    opt.paths = 8192;
    opt.seed = 20240901;
    opt.radius = 2.0;
    opt.x0 = {0.0};
    const ErrorTable table = strong_error_experiment(model, grid, opt);
    const RateFit state = fit_rate(table, ErrorColumn::state);
    const RateFit occ = fit_rate(table, ErrorColumn::occupation);
    const bool state_dec = decreasing_beyond_noise(table, false);
    const bool occ_dec = decreasing_beyond_noise(table, true);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    detail = "state slope " + fmt(state.slope) + ", occupation slope " + fmt(occ.slope) +
             " (band [-1.3, -0.7]), decreasing(state) " + (state_dec ? "yes" : "no") +
             ", decreasing(occ) " + (occ_dec ? "yes" : "no");
    const bool state_ok = state.slope >= -1.3 && state.slope <= -0.7;
    const bool occ_ok = occ.slope >= -1.3 && occ.slope <= -0.7;
    return state_ok && occ_ok && state_dec && occ_dec && secs < 600.0;
}

bool criterion4_smoothed_interaction_rate(std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    const RaimondModel model(5.0, 1e-2, 2);
    const TimeGrid grid(1.0, 512);
    StrongErrorOptions opt;
    opt.k_list = {5, 10, 20, 40};
    opt.reference = ReferenceKind::high_k;
    opt.reference_bins = 75;
    opt.paths = 2048;
    opt.seed = 20240902;
    opt.radius = 2.0;
    opt.x0 = {0.0, 0.0};
    const ErrorTable table = strong_error_experiment(model, grid, opt);
    const RateFit state = fit_rate(table, ErrorColumn::state);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::string errors;
    for (const ErrorRow& r : table.rows)
        errors += (errors.empty() ? "" : ", ") + std::to_string(r.bins) + ":" + fmt(r.state_error);
    detail = "state slope " + fmt(state.slope) + " (band [-1.3, -0.6]); errors " + errors;
    return state.slope >= -1.3 && state.slope <= -0.6 && secs < 1200.0;
}

bool criterion5_weak_rate(std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    LovParams params{1.0, -0.1, 0.01, 0.00375, 0.1, 0.0, 100.0};
    const LovModel model(params);
    const TimeGrid grid(1.0, 512);
    WeakErrorOptions opt;
    opt.k_list = {5, 10, 20, 40, 60};
    opt.reference_bins = 100;
    opt.paths = 16384;
    opt.seed = 20240904;
    opt.radius = 200.0;
    opt.x0 = {100.0};
    const PriceTable table = weak_error_experiment(model, asian_floating_payoff, grid, opt);

    std::vector<double> bins, weak;
    bool coupled_ok = true;
    for (const PriceRow& r : table.rows) {
        bins.push_back(double(r.estimate.bins));
        weak.push_back(r.weak_error);
        if (!(r.weak_error <= 1.01 * r.coupled_strong_error)) coupled_ok = false;
    }
    const RateFit fit = fit_rate(bins, weak);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    detail = "weak slope " + fmt(fit.slope) + " (band [-1.4, -0.6]), weak <= 1.01 x coupled " +
             (coupled_ok ? "yes" : "no") + ", reference price " +
             fmt(table.reference.estimate.price);
    return fit.slope >= -1.4 && fit.slope <= -0.6 && coupled_ok && secs < 900.0;
}

bool criterion6_mass_ledger(std::string& detail) {
    const TimeGrid grid(1.0, 512);
    const double unit_tol = 512.0 * std::ldexp(1.0, -50);

    // unit-clock models: occupation mass tracks elapsed time at every node
    double worst_unit = 0.0;
    {
        const auto cranston = cranston_le_jan(5.0);
        const auto raimond_model = raimond(5.0, 1e-2, 2);
        struct Case {
            const OsdeModel* model;
            std::vector<double> x0;
        };
        const std::vector<Case> cases = {{cranston.get(), {0.0}}, {raimond_model.get(), {0.0, 0.0}}};
        for (const Case& c : cases) {
            const PartitionOfUnity part(c.model->dim(), 2.0, 16);
            const auto projected = c.model->project(part);
            EulerOptions opts;
            opts.record_states = false;
            opts.snapshot_stride = 1;
            for (long p = 0; p < 10; ++p) {
                const BrownianPath noise =
                    generate_brownian(77, std::uint64_t(p), grid, c.model->dim());
                const SimulatedPath path = euler_maruyama(
                    *projected, grid, noise, Point(c.x0.data(), c.x0.size()), {}, opts);
                for (const PathSnapshot& snap : path.snapshots)
                    worst_unit = std::max(worst_unit,
                                          std::abs(compensated_total(snap.occupation) -
                                                   grid.node(snap.step)));
                worst_unit = std::max(worst_unit, std::abs(path.mass() - 1.0));
            }
        }
    }

    // mass-coupled clock: the occupation total solves dm = (1 + kappa m) dt;
    // the first-order scheme error halves with the step
    LovParams params{1.0, -0.1, 0.01, 0.00375, 0.1, 0.5, 100.0};
    const LovModel model(params);
    const double exact = (std::exp(0.5) - 1.0) / 0.5;
    std::vector<double> errs;
    for (int steps : {128, 256, 512}) {
        const TimeGrid g(1.0, steps);
        const PartitionOfUnity part(1, 200.0, 8);
        const auto projected = model.project(part);
        const double x0 = 100.0;
        const BrownianPath noise = generate_brownian(7, 0, g, 1);
        EulerOptions opts;
        opts.record_states = false;
        const SimulatedPath path = euler_maruyama(*projected, g, noise, Point(&x0, 1), {}, opts);
        errs.push_back(std::abs(path.mass() - exact));
    }
    const double r1 = errs[0] / errs[1];
    const double r2 = errs[1] / errs[2];

    detail = "unit-clock max |mass - t| = " + fmt(worst_unit) + " (tol " + fmt(unit_tol) +
             "), halving ratios " + fmt(r1) + ", " + fmt(r2) + " (band [1.7, 2.3])";
    return worst_unit < unit_tol && r1 >= 1.7 && r1 <= 2.3 && r2 >= 1.7 && r2 <= 2.3;
}

bool criterion7_markov_restart(std::string& detail) {
    int compared = 0;
    for (const std::string& preset : {"cranston-fig5", "raimond-fig8", "lov-fig12"}) {
        const RunConfig cfg = config_from_json(preset_json(preset));
        const auto model = cfg.model.build();
        const int k = cfg.bins[cfg.bins.size() / 2];
        const PartitionOfUnity part(model->dim(), cfg.radius, k);
        const SeparatingFamily fam(model->dim(), cfg.family_truncation);
        const PartitionPairingTable table(part, fam);
        const auto projected = project_coefficients(*model, part);
        const TimeGrid grid(cfg.horizon, cfg.steps);
        const int half = cfg.steps / 2;
        const std::vector<double> x0 = cfg.start_state();

        for (long p = 0; p < 10; ++p) {
            const BrownianPath noise =
                generate_brownian(cfg.seed, std::uint64_t(p), grid, model->dim());

            EulerOptions full_opts;
            full_opts.snapshot_stride = half;
            full_opts.pairings = &table;
            const SimulatedPath full = euler_maruyama(*projected, grid, noise,
                                                      Point(x0.data(), x0.size()), {}, full_opts);
            if (full.snapshots.empty() || full.snapshots[0].step != half) {
                detail = preset + ": expected a snapshot at node " + std::to_string(half);
                return false;
            }
            const PathSnapshot& snap = full.snapshots[0];

            EulerOptions resume_opts;
            resume_opts.first_step = half;
            resume_opts.initial_pairings =
                std::span<const double>(snap.pairings.data(), snap.pairings.size());
            resume_opts.pairings = &table;
            const SimulatedPath tail = euler_maruyama(
                *projected, grid, noise, Point(snap.state.data(), snap.state.size()),
                std::span<const double>(snap.occupation.data(), snap.occupation.size()),
                resume_opts);

            for (int n = half; n <= cfg.steps; ++n) {
                const auto a = full.state(n), b = tail.state(n);
                for (int i = 0; i < full.dim; ++i)
                    if (a[std::size_t(i)] != b[std::size_t(i)]) {
                        detail = preset + ": state differs at node " + std::to_string(n);
                        return false;
                    }
                const auto pa = full.pairings_row(n), pb = tail.pairings_row(n);
                for (int j = 0; j < full.family_size; ++j)
                    if (pa[std::size_t(j)] != pb[std::size_t(j)]) {
                        detail = preset + ": pairings differ at node " + std::to_string(n);
                        return false;
                    }
            }
            if (full.final_state != tail.final_state || full.occupation != tail.occupation ||
                full.support != tail.support || full.truncated != tail.truncated) {
                detail = preset + ": terminal data differs";
                return false;
            }
            ++compared;
        }
    }
    detail = "resumed tails bit-identical on " + std::to_string(compared) +
             " paths across 3 presets";
    return compared == 30;
}

bool criterion8_cli_determinism(const std::string& cli, std::string& detail) {
    if (cli.empty()) {
        detail = "no CLI binary path supplied";
        return false;
    }
    namespace fs = std::filesystem;
    std::string tmpl = (fs::temp_directory_path() / "occusim-acceptance-XXXXXX").string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!mkdtemp(buf.data())) {
        detail = "mkdtemp failed";
        return false;
    }
    const fs::path root(buf.data());
    const fs::path dir1 = root / "threads1", dir2 = root / "threads3";

    auto run = [&](const fs::path& dir, int threads) {
        const std::string cmd = "\"" + cli + "\" converge --preset raimond-fig8 --fast --threads " +
                                std::to_string(threads) + " --out \"" + dir.string() + "\" > \"" +
                                (dir.string() + ".log") + "\" 2>&1";
        return std::system(cmd.c_str());
    };
    const int rc1 = run(dir1, 1);
    const int rc2 = run(dir2, 3);
    if (rc1 != 0 || rc2 != 0) {
        detail = "CLI exited with status " + std::to_string(rc1) + " / " + std::to_string(rc2);
        return false;
    }

    bool all_equal = true;
    std::string mismatched;
    for (const char* name :
         {"error_table.csv", "error_table_terminal.csv", "diagnostics.csv", "rate_fit.csv"}) {
        std::string a, b;
        if (!read_file(dir1 / name, a) || !read_file(dir2 / name, b) || a.empty() || a != b) {
            all_equal = false;
            mismatched += std::string(mismatched.empty() ? "" : ", ") + name;
        }
    }
    fs::remove_all(root);
    detail = all_equal ? "4 CSV outputs byte-identical across 1 and 3 worker threads"
                       : ("outputs differ: " + mismatched);
    return all_equal;
}

bool criterion9_property_suites(std::string& detail) {
    const int cases = 1000;
    int bad_roundtrip = 0, bad_triangle = 0, bad_contraction = 0, bad_volatility = 0,
        bad_force = 0;

    // partition roundtrip: every cell center locates back to its own cell
    for (int c = 0; c < cases; ++c) {
        Draw d{41, std::uint64_t(c)};
        const int dim = int(d.integer(1, 3));
        const long max_bins = dim == 1 ? 24 : (dim == 2 ? 12 : 6);
        const PartitionOfUnity part(dim, d.range(0.25, 8.0), int(d.integer(1, max_bins)));
        const long cell = d.integer(0, part.num_cells() - 1);
        if (part.locate(part.center(cell)) != cell) ++bad_roundtrip;
    }

    // cylindrical norm triangle inequality
    for (int c = 0; c < cases; ++c) {
        Draw d{42, std::uint64_t(c)};
        const int dim = int(d.integer(1, 3));
        const SeparatingFamily fam(dim, int(d.integer(1, 48)));
        const DiscreteMeasure a = random_measure(d, dim, 4.0, 6);
        const DiscreteMeasure b = random_measure(d, dim, 4.0, 6);
        DiscreteMeasure sum(dim);
        for (std::size_t i = 0; i < a.size(); ++i) sum.add_atom(a.location(i), a.weight(i));
        for (std::size_t i = 0; i < b.size(); ++i) sum.add_atom(b.location(i), b.weight(i));
        const double lhs = cyl_norm(sum, fam);
        const double rhs = cyl_norm(a, fam) + cyl_norm(b, fam);
        if (!(lhs <= rhs * (1.0 + 1e-12) + 1e-15)) ++bad_triangle;
    }

    // lift-project contraction: moving atoms to cell centers displaces the
    // cylindrical embedding by at most the half-diagonal times mass times the
    // family's total gradient norm
    for (int c = 0; c < cases; ++c) {
        Draw d{43, std::uint64_t(c)};
        const int dim = int(d.integer(1, 3));
        const long max_bins = dim == 1 ? 24 : (dim == 2 ? 12 : 6);
        const double radius = d.range(0.5, 5.0);
        const int bins = int(d.integer(1, max_bins));
        const PartitionOfUnity part(dim, radius, bins);
        const SeparatingFamily fam(dim, int(d.integer(1, 48)));
        const DiscreteMeasure o = random_measure(d, dim, radius * 0.999, 6);
        const std::vector<double> z = project(o, part);
        const DiscreteMeasure back = lift(std::span<const double>(z.data(), z.size()), part);
        const double width = 2.0 * radius / bins;
        const double bound = 0.5 * width * std::sqrt(double(dim)) * o.mass() *
                                 fam.grad_norm_total() * (1.0 + 1e-9) +
                             1e-15;
        if (!(cyl_distance(o, back, fam) <= bound)) ++bad_contraction;
    }

    // occupied volatility stays above the smile minimum minus the tilt
    for (int c = 0; c < cases; ++c) {
        Draw d{44, std::uint64_t(c)};
        LovParams p{1.0, -0.1, 0.01, 0.0, 0.0, 0.0, 100.0};
        p.delta = d.range(0.0, 0.9 * p.v_min());
        p.epsilon = d.range(0.01, 1.0);
        p.kappa = d.range(0.0, 2.0);
        const LovModel model(p);
        const double x = d.range(1.0, 400.0);
        DiscreteMeasure o(1);
        const long atoms = d.integer(0, 6);
        for (long a = 0; a < atoms; ++a) {
            const double y = d.range(1.0, 400.0);
            o.add_atom(Point(&y, 1), d.range(0.0, 2.0));
        }
        double sigma = 0.0;
        model.diffusion(o, Point(&x, 1), std::span<double>(&sigma, 1));
        const double normalized = (sigma / x) * (sigma / x);
        if (!(normalized >= (p.v_min() - p.delta) * (1.0 - 1e-9))) ++bad_volatility;
    }

    // smoothed interaction force is bounded by strength times mass
    for (int c = 0; c < cases; ++c) {
        Draw d{45, std::uint64_t(c)};
        const int dim = int(d.integer(1, 3));
        const double beta = d.range(-8.0, 8.0);
        const double eps = d.range(1e-4, 1.0);
        const RaimondModel model(beta, eps, dim);
        const DiscreteMeasure o = random_measure(d, dim, 4.0, 6);
        std::vector<double> x(static_cast<std::size_t>(dim)), b(static_cast<std::size_t>(dim));
        for (int i = 0; i < dim; ++i) x[std::size_t(i)] = d.range(-4.0, 4.0);
        model.drift(o, Point(x.data(), x.size()), std::span<double>(b.data(), b.size()));
        double norm = 0.0;
        for (double v : b) norm += v * v;
        norm = std::sqrt(norm);
        if (!(norm <= std::abs(beta) * o.mass() * (1.0 + 1e-12) + 1e-15)) ++bad_force;
    }

    detail = "violations: roundtrip " + std::to_string(bad_roundtrip) + ", triangle " +
             std::to_string(bad_triangle) + ", contraction " + std::to_string(bad_contraction) +
             ", volatility floor " + std::to_string(bad_volatility) + ", force bound " +
             std::to_string(bad_force) + " (1000 cases each)";
    return bad_roundtrip + bad_triangle + bad_contraction + bad_volatility + bad_force == 0;
}

} // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    std::cout.precision(3);

    run_criterion(1, "kernel oracle identities", criterion1_kernel_identities);
    run_criterion(2, "degenerate coupling reduces to a random walk",
                  criterion2_degenerate_coupling);
    run_criterion(3, "strong convergence rate, mean-attracting model",
                  criterion3_strong_rate);
    run_criterion(4, "strong convergence rate, smoothed interaction",
                  criterion4_smoothed_interaction_rate);
    run_criterion(5, "weak convergence rate, occupied volatility pricing",
                  criterion5_weak_rate);
    run_criterion(6, "occupation mass ledger", criterion6_mass_ledger);
    run_criterion(7, "snapshot restart reproduces the tail", criterion7_markov_restart);
    run_criterion(8, "CLI output is independent of worker count",
                  [&](std::string& d) { return criterion8_cli_determinism(cli, d); });
    run_criterion(9, "randomized property suites", criterion9_property_suites);

    std::cout << (g_failures == 0 ? "ACCEPTANCE: all criteria passed"
                                  : "ACCEPTANCE: " + std::to_string(g_failures) +
                                        " criterion(s) failed")
              << std::endl;
    return g_failures;
}
