#include "occusim/oracle.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "occusim/quadrature.hpp"

namespace occusim {

VolterraKernel::VolterraKernel(double beta_, int resolution_) : beta(beta_), resolution(resolution_) {
    if (!std::isfinite(beta_)) throw std::invalid_argument("VolterraKernel: beta must be finite");
    if (resolution_ < 2) throw std::invalid_argument("VolterraKernel: resolution must be >= 2");
}

namespace {

// Subinterval count for a Simpson pass over [s, t]. The integrand
// exp(-beta u^2 / 2) is bounded by 1 for beta >= 0 but grows for beta < 0,
// where the resolution is scaled up accordingly.
int simpson_panels(double resolution, double s, double t, double beta) {
    double scale = 1.0;
    if (beta < 0.0) scale = std::max(1.0, -beta * t);
    const double want = resolution * (t - s) * scale;
    int n = int(std::ceil(want));
    n = std::max(n, 4);
    if (n % 2 != 0) ++n;
    return n;
}

} // namespace

double VolterraKernel::eval(double t, double s) const {
    if (!(s >= 0.0) || !(t >= 0.0))
        throw std::invalid_argument("VolterraKernel::eval: times must be >= 0");
    if (s > t) throw std::invalid_argument("VolterraKernel::eval: requires s <= t");
    if (beta == 0.0 || s == t) return 1.0;
    const double b = beta;
    const int panels = simpson_panels(resolution, s, t, b);
    const double integral =
        quad::composite_simpson([b](double u) { return std::exp(-0.5 * b * u * u); }, s, t, panels);
    return 1.0 - b * s * std::exp(0.5 * b * s * s) * integral;
}

KernelTable::KernelTable(const VolterraKernel& kernel, const TimeGrid& grid, int threads)
    : steps_(grid.steps) {
    const long n_entries = (long(steps_) + 1) * (long(steps_) + 2) / 2;
    values_.resize(std::size_t(n_entries));
    const int nt = resolve_threads(threads);
    const double dt = grid.dt();

#pragma omp parallel for schedule(dynamic, 8) num_threads(nt)
    for (int n = 0; n <= steps_; ++n) {
        double* row = values_.data() + std::size_t(n) * (n + 1) / 2;
        const double tn = n * dt;
        for (int i = 0; i <= n; ++i) row[i] = kernel.eval(tn, i * dt);
    }
}

void exact_path_states(const KernelTable& table, double x0, const BrownianPath& noise,
                       std::span<double> out) {
    if (noise.dim != 1)
        throw std::invalid_argument("exact_path_states: requires one-dimensional noise");
    if (noise.steps < table.steps())
        throw std::invalid_argument("exact_path_states: noise shorter than kernel table");
    if (int(out.size()) != table.steps() + 1)
        throw std::invalid_argument("exact_path_states: output length must be steps + 1");
    out[0] = x0;
    for (int n = 1; n <= table.steps(); ++n) {
        const auto row = table.row(n);
        CompensatedSum acc;
        for (int i = 0; i < n; ++i) acc.add(row[std::size_t(i)] * noise.increments[std::size_t(i)]);
        out[std::size_t(n)] = x0 + acc.value();
    }
}

SimulatedPath exact_path(double x0, double beta, const TimeGrid& grid, const BrownianPath& noise,
                         int resolution) {
    const VolterraKernel kernel(beta, resolution);
    const KernelTable table(kernel, grid, 1);
    SimulatedPath path;
    path.dim = 1;
    path.steps = grid.steps;
    path.states.resize(std::size_t(grid.steps) + 1);
    exact_path_states(table, x0, noise, path.states);
    path.final_state = {path.states.back()};
    return path;
}

double covariance_eval(double beta, double t, double s, int resolution) {
    if (!(t >= 0.0) || !(s >= 0.0))
        throw std::invalid_argument("covariance_eval: times must be >= 0");
    const double hi = std::max(t, s), lo = std::min(t, s);
    if (lo == 0.0) return 0.0;
    const VolterraKernel kernel(beta, resolution);
    const int panels = simpson_panels(resolution, 0.0, lo, std::min(beta, 0.0));
    return quad::composite_simpson(
        [&](double u) { return kernel.eval(hi, u) * kernel.eval(lo, u); }, 0.0, lo, panels);
}

} // namespace occusim
