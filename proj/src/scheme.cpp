#include "occusim/scheme.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>

#include "occusim/rng.hpp"

namespace occusim {

// ---------------------------------------------------------------------------
// Brownian increments

void generate_brownian_into(BrownianPath& out, std::uint64_t seed, std::uint64_t path_index,
                            const TimeGrid& grid, int dim) {
    if (dim < 1 || dim > 8) throw std::invalid_argument("generate_brownian: dim must be in 1..8");
    out.dim = dim;
    out.steps = grid.steps;
    out.increments.resize(std::size_t(grid.steps) * dim);
    const double scale = std::sqrt(grid.dt());
    for (int n = 0; n < grid.steps; ++n)
        for (int c = 0; c < dim; ++c)
            out.increments[std::size_t(n) * dim + c] =
                scale * rng::normal_variate(seed, path_index, std::uint32_t(n), std::uint32_t(c));
}

BrownianPath generate_brownian(std::uint64_t seed, std::uint64_t path_index, const TimeGrid& grid,
                               int dim) {
    BrownianPath out;
    generate_brownian_into(out, seed, path_index, grid, dim);
    return out;
}

// ---------------------------------------------------------------------------
// Euler-Maruyama

simulation_diverged::simulation_diverged(long path_index_, int step_)
    : std::runtime_error(
          (step_ >= 0 ? "simulation diverged at step " + std::to_string(step_)
                      : std::string("too many simulated paths diverged")) +
          (path_index_ >= 0 ? " (first on path " + std::to_string(path_index_) + ")" : "")),
      path_index(path_index_),
      step(step_) {}

namespace {

double joint_norm_from(std::span<const double> pair_row, const double* x, int dim) {
    double sq = 0.0;
    for (double p : pair_row) sq += p * p;
    for (int i = 0; i < dim; ++i) sq += x[i] * x[i];
    return std::sqrt(sq);
}

void insert_sorted(std::vector<long>& support, long cell) {
    const auto it = std::lower_bound(support.begin(), support.end(), cell);
    if (it == support.end() || *it != cell) support.insert(it, cell);
}

// Shared by the single-path kernel and (up front) by the batch drivers, so the
// kernel cannot throw inside a parallel region when batch arguments passed.
void validate_euler_args(const ProjectedModel& model, const TimeGrid& grid, int noise_dim,
                         int noise_steps, Point x0, std::span<const double> z0,
                         const EulerOptions& opts) {
    const PartitionOfUnity& part = model.partition();
    const int d = part.dim();
    const long cells = part.num_cells();
    if (d > 8) throw std::invalid_argument("euler_maruyama: dim must be <= 8");
    if (noise_dim != d) throw std::invalid_argument("euler_maruyama: noise dimension mismatch");
    if (noise_steps < grid.steps)
        throw std::invalid_argument("euler_maruyama: noise shorter than grid");
    if (int(x0.size()) != d) throw std::invalid_argument("euler_maruyama: x0 dimension mismatch");
    if (!z0.empty() && long(z0.size()) != cells)
        throw std::invalid_argument("euler_maruyama: z0 length must equal cell count");
    if (opts.first_step < 0 || opts.first_step > grid.steps)
        throw std::invalid_argument("euler_maruyama: first_step out of range");
    if (opts.stop_radius > 0.0 && opts.pairings == nullptr)
        throw std::invalid_argument("euler_maruyama: stop_radius requires a pairing table");
    if (opts.pairings && opts.pairings->cells() != cells)
        throw std::invalid_argument("euler_maruyama: pairing table does not match partition");
    const int jf = opts.pairings ? opts.pairings->family_size() : 0;
    if (!opts.initial_pairings.empty() && int(opts.initial_pairings.size()) != jf)
        throw std::invalid_argument("euler_maruyama: initial_pairings size mismatch");
}

} // namespace

int euler_maruyama_nothrow(const ProjectedModel& model, const TimeGrid& grid,
                           const BrownianPath& noise, Point x0, std::span<const double> z0,
                           const EulerOptions& opts, SimulatedPath& out) {
    const PartitionOfUnity& part = model.partition();
    const int d = part.dim();
    const int N = grid.steps;
    const double dt = grid.dt();
    const long cells = part.num_cells();

    validate_euler_args(model, grid, noise.dim, noise.steps, x0, z0, opts);
    const int jf = opts.pairings ? opts.pairings->family_size() : 0;

    out.dim = d;
    out.steps = N;
    out.first_step = opts.first_step;
    out.family_size = jf;
    out.truncated = false;
    out.exit_step = -1;
    out.sup_joint_norm = 0.0;
    out.snapshots.clear();

    // occupation + sorted support
    out.occupation.assign(std::size_t(cells), 0.0);
    out.support.clear();
    if (!z0.empty()) {
        std::copy(z0.begin(), z0.end(), out.occupation.begin());
        for (long k = 0; k < cells; ++k)
            if (out.occupation[std::size_t(k)] != 0.0) out.support.push_back(k);
    }

    double x[8];
    for (int i = 0; i < d; ++i) x[i] = x0[i];

    // state trajectory; rows up to first_step hold the initial state
    if (opts.record_states) {
        out.states.resize(std::size_t(N + 1) * d);
        for (int n = 0; n <= opts.first_step; ++n)
            for (int i = 0; i < d; ++i) out.states[std::size_t(n) * d + i] = x[i];
    } else {
        out.states.clear();
    }

    // pairing trajectory
    if (opts.pairings) {
        out.pairings.resize(std::size_t(N + 1) * jf);
        double* row0 = out.pairings.data() + std::size_t(opts.first_step) * jf;
        if (!opts.initial_pairings.empty()) {
            std::copy(opts.initial_pairings.begin(), opts.initial_pairings.end(), row0);
        } else {
            std::vector<CompensatedSum> acc(static_cast<std::size_t>(jf));
            for (long k : out.support) {
                const double w = out.occupation[std::size_t(k)];
                const auto g = opts.pairings->row(k);
                for (int j = 0; j < jf; ++j) acc[std::size_t(j)].add(w * g[std::size_t(j)]);
            }
            for (int j = 0; j < jf; ++j) row0[j] = acc[std::size_t(j)].value();
        }
        for (int n = 0; n < opts.first_step; ++n)
            std::memcpy(out.pairings.data() + std::size_t(n) * jf, row0, sizeof(double) * jf);
        out.sup_joint_norm = joint_norm_from({row0, std::size_t(jf)}, x, d);
    } else {
        out.pairings.clear();
    }

    OccupationView view{out.occupation, &out.support};
    double bbuf[8];
    double sbuf[64];

    for (int n = opts.first_step; n < N; ++n) {
        const double* prow = opts.pairings ? out.pairings.data() + std::size_t(n) * jf : nullptr;

        if (!out.truncated && opts.stop_radius > 0.0 &&
            joint_norm_from({prow, std::size_t(jf)}, x, d) >= opts.stop_radius) {
            out.truncated = true;
            out.exit_step = n;
        }

        if (out.truncated) {
            if (opts.record_states)
                for (int i = 0; i < d; ++i) out.states[std::size_t(n + 1) * d + i] = x[i];
            if (opts.pairings)
                std::memcpy(out.pairings.data() + std::size_t(n + 1) * jf, prow,
                            sizeof(double) * jf);
        } else {
            // occupation update from the pre-update vector
            const long k = part.locate({x, std::size_t(d)});
            const double rate = model.clock_rate(view, {x, std::size_t(d)});
            if (!std::isfinite(rate) || rate < 0.0) return n;
            const double add = rate * dt;
            if (add != 0.0) {
                if (out.occupation[std::size_t(k)] == 0.0) insert_sorted(out.support, k);
                out.occupation[std::size_t(k)] += add;
            }
            if (opts.pairings) {
                double* next = out.pairings.data() + std::size_t(n + 1) * jf;
                if (add != 0.0) {
                    const auto g = opts.pairings->row(k);
                    for (int j = 0; j < jf; ++j) next[j] = prow[j] + add * g[std::size_t(j)];
                } else {
                    std::memcpy(next, prow, sizeof(double) * jf);
                }
            }

            // state update from the post-update vector
            model.drift(view, {x, std::size_t(d)}, {bbuf, std::size_t(d)});
            model.diffusion(view, {x, std::size_t(d)}, {sbuf, std::size_t(d) * d});
            const auto dw = noise.at(n);
            for (int i = 0; i < d; ++i) {
                double xi = x[i] + bbuf[i] * dt;
                for (int j = 0; j < d; ++j) xi += sbuf[std::size_t(i) * d + j] * dw[std::size_t(j)];
                if (!std::isfinite(xi)) return n;
                x[i] = xi;
            }
            if (opts.record_states)
                for (int i = 0; i < d; ++i) out.states[std::size_t(n + 1) * d + i] = x[i];
            if (opts.pairings) {
                const double* next = out.pairings.data() + std::size_t(n + 1) * jf;
                out.sup_joint_norm = std::max(
                    out.sup_joint_norm, joint_norm_from({next, std::size_t(jf)}, x, d));
            }
        }

        if (opts.snapshot_stride > 0 && (n + 1) % opts.snapshot_stride == 0) {
            PathSnapshot snap;
            snap.step = n + 1;
            snap.state.assign(x, x + d);
            snap.occupation = out.occupation;
            if (opts.pairings) {
                const double* next = out.pairings.data() + std::size_t(n + 1) * jf;
                snap.pairings.assign(next, next + jf);
            }
            out.snapshots.push_back(std::move(snap));
        }
    }

    out.final_state.assign(x, x + d);
    return -1;
}

void euler_maruyama_into(const ProjectedModel& model, const TimeGrid& grid,
                         const BrownianPath& noise, Point x0, std::span<const double> z0,
                         const EulerOptions& opts, SimulatedPath& out) {
    const int bad = euler_maruyama_nothrow(model, grid, noise, x0, z0, opts, out);
    if (bad >= 0) throw simulation_diverged(-1, bad);
}

SimulatedPath euler_maruyama(const ProjectedModel& model, const TimeGrid& grid,
                             const BrownianPath& noise, Point x0, std::span<const double> z0,
                             const EulerOptions& opts) {
    SimulatedPath out;
    euler_maruyama_into(model, grid, noise, x0, z0, opts, out);
    return out;
}

// ---------------------------------------------------------------------------
// Batch drivers

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("OCCUSIM_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return omp_get_max_threads();
}

std::vector<SimulatedPath> run_batch(const ProjectedModel& model, const TimeGrid& grid,
                                     std::uint64_t seed, long count, Point x0,
                                     std::span<const double> z0, const EulerOptions& opts,
                                     int threads) {
    if (count < 0) throw std::invalid_argument("run_batch: count must be >= 0");
    validate_euler_args(model, grid, model.dim(), grid.steps, x0, z0, opts);
    std::vector<SimulatedPath> paths(static_cast<std::size_t>(count));
    std::vector<int> diverged(std::size_t(count), -1);
    const int nt = resolve_threads(threads);

#pragma omp parallel num_threads(nt)
    {
        BrownianPath noise;
#pragma omp for schedule(dynamic, 4)
        for (long p = 0; p < count; ++p) {
            generate_brownian_into(noise, seed, std::uint64_t(p), grid, model.dim());
            diverged[std::size_t(p)] =
                euler_maruyama_nothrow(model, grid, noise, x0, z0, opts, paths[std::size_t(p)]);
        }
    }

    for (long p = 0; p < count; ++p)
        if (diverged[std::size_t(p)] >= 0) throw simulation_diverged(p, diverged[std::size_t(p)]);
    return paths;
}

std::vector<SimulatedPath> run_batch_serial(const ProjectedModel& model, const TimeGrid& grid,
                                            std::uint64_t seed, long count, Point x0,
                                            std::span<const double> z0, const EulerOptions& opts) {
    if (count < 0) throw std::invalid_argument("run_batch_serial: count must be >= 0");
    std::vector<SimulatedPath> paths(static_cast<std::size_t>(count));
    BrownianPath noise;
    for (long p = 0; p < count; ++p) {
        generate_brownian_into(noise, seed, std::uint64_t(p), grid, model.dim());
        const int bad = euler_maruyama_nothrow(model, grid, noise, x0, z0, opts, paths[std::size_t(p)]);
        if (bad >= 0) throw simulation_diverged(p, bad);
    }
    return paths;
}

} // namespace occusim
