#pragma once

#include <span>
#include <vector>

#include "occusim/scheme.hpp"

// Closed-form solution of the mean-attracting linear model. The solution is
// the Wiener integral X_t = x0 + int_0^t kappa(t, s) dW_s with the explicit
// kernel kappa(t, s) = 1 - beta * s * exp(beta s^2 / 2) *
// int_s^t exp(-beta u^2 / 2) du, which makes exact path values and
// covariances available as a simulation-free reference.

namespace occusim {

struct VolterraKernel {
    double beta;
    int resolution; // Simpson subintervals per unit of integration length

    explicit VolterraKernel(double beta_, int resolution_ = 256);

    // kappa(t, s) for 0 <= s <= t; throws invalid_argument when s > t or
    // arguments are negative. kappa(s, s) == 1 exactly; beta == 0 gives
    // kappa == 1 identically.
    double eval(double t, double s) const;
};

// kappa tabulated on the lower triangle of a time grid: entry (n, i) holds
// kappa(t_n, t_i) for i <= n. Built once and shared across paths.
class KernelTable {
public:
    KernelTable(const VolterraKernel& kernel, const TimeGrid& grid, int threads = 0);

    int steps() const { return steps_; }
    double at(int n, int i) const {
        return values_[std::size_t(n) * (n + 1) / 2 + std::size_t(i)];
    }
    std::span<const double> row(int n) const {
        return {values_.data() + std::size_t(n) * (n + 1) / 2, std::size_t(n) + 1};
    }

private:
    int steps_;
    std::vector<double> values_;
};

// Exact-solution values on the grid nodes driven by the given increments:
// X_{t_n} = x0 + sum_{i<n} kappa(t_n, t_i) dW_i (left-endpoint Wiener sums).
// out.size() == steps + 1.
void exact_path_states(const KernelTable& table, double x0, const BrownianPath& noise,
                       std::span<double> out);

// Convenience wrapper returning a SimulatedPath-shaped result (states and
// final state only).
SimulatedPath exact_path(double x0, double beta, const TimeGrid& grid, const BrownianPath& noise,
                         int resolution = 256);

// Covariance of the exact solution: Cov(X_t, X_s) =
// int_0^{min(t,s)} kappa(t, u) kappa(s, u) du. Symmetric in (t, s) exactly.
double covariance_eval(double beta, double t, double s, int resolution = 256);

} // namespace occusim
