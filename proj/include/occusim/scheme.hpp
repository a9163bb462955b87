#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "occusim/measure.hpp"
#include "occusim/models.hpp"

// Euler-Maruyama simulation of the projected dynamics: the state diffuses
// while its occupation vector accumulates clock-rate-weighted time in the
// partition cell currently containing the state.

namespace occusim {

struct TimeGrid {
    double horizon;
    int steps;

    TimeGrid(double horizon_, int steps_) : horizon(horizon_), steps(steps_) {
        if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be > 0");
        if (steps < 1) throw std::invalid_argument("TimeGrid: steps must be >= 1");
    }
    double dt() const { return horizon / steps; }
    double node(int n) const { return n * dt(); }
};

// Brownian increments on a time grid, a pure function of (seed, path_index).
// The same increments drive a path regardless of partition resolution, so
// refinements of the same path are coupled by construction.
struct BrownianPath {
    int dim = 0;
    int steps = 0;
    std::vector<double> increments; // steps * dim, already scaled by sqrt(dt)

    std::span<const double> at(int n) const {
        return {increments.data() + std::size_t(n) * dim, std::size_t(dim)};
    }
};

BrownianPath generate_brownian(std::uint64_t seed, std::uint64_t path_index,
                               const TimeGrid& grid, int dim);
void generate_brownian_into(BrownianPath& out, std::uint64_t seed, std::uint64_t path_index,
                            const TimeGrid& grid, int dim);

// State snapshot taken mid-simulation; sufficient to resume the path.
struct PathSnapshot {
    int step = 0;
    std::vector<double> state;
    std::vector<double> occupation;
    std::vector<double> pairings; // empty when pairing tracking was off
};

struct EulerOptions {
    bool record_states = true;        // keep the full state trajectory
    int snapshot_stride = 0;          // 0 = no snapshots
    int first_step = 0;               // resume from this grid node
    std::span<const double> initial_pairings = {}; // seed for pairing tracking on resume

    // When set, the pairings of the lifted occupation vector are maintained
    // incrementally and recorded at every node.
    const PartitionPairingTable* pairings = nullptr;

    // Joint-norm radius at which the path freezes (0 = never). Requires
    // pairing tracking.
    double stop_radius = 0.0;
};

// One simulated path. For resumed runs, rows before `first_step` repeat the
// snapshot state.
struct SimulatedPath {
    int dim = 0;
    int steps = 0;
    int first_step = 0;
    int family_size = 0;

    std::vector<double> states;      // (steps+1) * dim when recorded
    std::vector<double> final_state; // dim
    std::vector<double> occupation;  // terminal occupation vector
    std::vector<long> support;       // sorted cells with positive mass
    std::vector<double> pairings;    // (steps+1) * family_size when tracked
    std::vector<PathSnapshot> snapshots;

    bool truncated = false;
    int exit_step = -1;          // first node at which the joint norm reached the radius
    double sup_joint_norm = 0.0; // max joint norm over nodes (when pairings tracked)

    std::span<const double> state(int n) const {
        return {states.data() + std::size_t(n) * dim, std::size_t(dim)};
    }
    std::span<const double> pairings_row(int n) const {
        return {pairings.data() + std::size_t(n) * family_size, std::size_t(family_size)};
    }
    double mass() const { return compensated_total(occupation); }
    double exterior_mass() const { return occupation.empty() ? 0.0 : occupation[0]; }
};

// A path whose state left the representable range (NaN/inf) mid-simulation.
class simulation_diverged : public std::runtime_error {
public:
    simulation_diverged(long path_index, int step);
    long path_index; // -1 when simulated outside a batch
    int step;
};

// One Euler-Maruyama path of the projected dynamics. Throws
// simulation_diverged if the state becomes non-finite.
//
// Update order per step, state (Z, X) at node n:
//   1. Z[cell(X)] += clock_rate(Z, X) * dt        (pre-update occupation)
//   2. X += drift(Z', X) * dt + diffusion(Z', X) * dW_n   (post-update occupation)
// With a stop radius, the path freezes at the first node whose joint norm
// (lifted occupation, state) reaches the radius; freezing is checked before
// stepping, so a frozen path never moves again.
SimulatedPath euler_maruyama(const ProjectedModel& model, const TimeGrid& grid,
                             const BrownianPath& noise, Point x0,
                             std::span<const double> z0 = {}, const EulerOptions& opts = {});

// Buffer-reusing variant for hot loops.
void euler_maruyama_into(const ProjectedModel& model, const TimeGrid& grid,
                         const BrownianPath& noise, Point x0, std::span<const double> z0,
                         const EulerOptions& opts, SimulatedPath& out);

// Nothrow kernel: returns -1 on success, else the step at which the state
// became non-finite (for use inside parallel regions).
int euler_maruyama_nothrow(const ProjectedModel& model, const TimeGrid& grid,
                           const BrownianPath& noise, Point x0, std::span<const double> z0,
                           const EulerOptions& opts, SimulatedPath& out);

// Simulate paths 0..count-1 from a common initial condition. Results are
// indexed by path and independent of thread count or execution order; any
// diverged path is reported via simulation_diverged with its index (lowest
// index wins). `threads` <= 0 picks up OCCUSIM_THREADS or the OpenMP default.
std::vector<SimulatedPath> run_batch(const ProjectedModel& model, const TimeGrid& grid,
                                     std::uint64_t seed, long count, Point x0,
                                     std::span<const double> z0 = {},
                                     const EulerOptions& opts = {}, int threads = 0);

// Plain-loop reference implementation of run_batch (kept for testing and
// benchmarking the parallel driver against).
std::vector<SimulatedPath> run_batch_serial(const ProjectedModel& model, const TimeGrid& grid,
                                            std::uint64_t seed, long count, Point x0,
                                            std::span<const double> z0 = {},
                                            const EulerOptions& opts = {});

// Thread-count resolution used by every parallel driver: positive request
// wins, then the OCCUSIM_THREADS environment variable, then the OpenMP
// default.
int resolve_threads(int requested);

} // namespace occusim
