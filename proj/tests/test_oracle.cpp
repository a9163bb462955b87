#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "occusim/oracle.hpp"
#include "occusim/quadrature.hpp"
#include "occusim/rng.hpp"
#include "occusim/scheme.hpp"

using namespace occusim;

namespace {

// Kernel evaluation with the integral delegated to the adaptive integrator;
// used as an independent cross-check of the Simpson-based production path.
double kernel_adaptive(double beta, double t, double s) {
    if (beta == 0.0 || s == t) return 1.0;
    const double integral = quad::adaptive_gauss_kronrod(
        [beta](double u) { return std::exp(-0.5 * beta * u * u); }, s, t, 1e-13);
    return 1.0 - beta * s * std::exp(0.5 * beta * s * s) * integral;
}

} // namespace

TEST_CASE("kernel identities: diagonal and drift-free case") {
    const VolterraKernel with_drift(5.0);
    const VolterraKernel no_drift(0.0);
    for (int i = 0; i < 40; ++i) {
        const double t = (i + 1) / 40.0;
        CHECK(with_drift.eval(t, t) == 1.0);
        for (int j = 0; j <= i; ++j) {
            const double s = t * j / (i + 1.0);
            CHECK(no_drift.eval(t, s) == 1.0);
        }
    }
}

TEST_CASE("Simpson kernel values agree with the adaptive-quadrature oracle") {
    for (const double beta : {5.0, 1.0, -2.0}) {
        const VolterraKernel kernel(beta);
        double worst = 0.0;
        for (int i = 1; i <= 30; ++i) {
            const double t = i / 30.0;
            for (int j = 0; j < i; ++j) {
                const double s = t * j / 30.0;
                worst = std::max(worst, std::abs(kernel.eval(t, s) - kernel_adaptive(beta, t, s)));
            }
        }
        CAPTURE(beta);
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("kernel input validation") {
    const VolterraKernel kernel(2.0);
    CHECK_THROWS_AS(kernel.eval(0.5, 0.7), std::invalid_argument);
    CHECK_THROWS_AS(kernel.eval(-0.1, -0.2), std::invalid_argument);
    CHECK_THROWS_AS(VolterraKernel(std::nan("")), std::invalid_argument);
    CHECK_THROWS_AS(VolterraKernel(1.0, 1), std::invalid_argument);
}

TEST_CASE("kernel table matches pointwise evaluation and is thread-invariant") {
    const TimeGrid grid{1.0, 64};
    const VolterraKernel kernel(5.0);
    const KernelTable serial(kernel, grid, 1);
    const KernelTable parallel(kernel, grid, 3);
    for (int n = 0; n <= 64; n += 7) {
        for (int i = 0; i <= n; i += 3) {
            CHECK(serial.at(n, i) == kernel.eval(n * grid.dt(), i * grid.dt()));
            CHECK(serial.at(n, i) == parallel.at(n, i));
        }
    }
}

TEST_CASE("covariance is symmetric and Cauchy-Schwarz consistent") {
    for (const double beta : {0.0, 3.0, -1.0}) {
        const double c_ts = covariance_eval(beta, 0.8, 0.3);
        const double c_st = covariance_eval(beta, 0.3, 0.8);
        CHECK(c_ts == c_st); // same code path after ordering, exact
        const double v_t = covariance_eval(beta, 0.8, 0.8);
        const double v_s = covariance_eval(beta, 0.3, 0.3);
        CHECK(v_t > 0.0);
        CHECK(v_s > 0.0);
        CHECK(std::abs(c_ts) <= std::sqrt(v_t * v_s) * (1.0 + 1e-12));
        CHECK(covariance_eval(beta, 0.0, 0.5) == 0.0);
    }
    // Drift-free case integrates 1*1 over [0, min(t,s)].
    CHECK(covariance_eval(0.0, 0.9, 0.4) == doctest::Approx(0.4).epsilon(1e-14));
}

TEST_CASE("exact path variance matches the kernel integral") {
    // Var(X_T) = int_0^T kappa(T,u)^2 du for the Wiener-integral solution;
    // check the Monte Carlo variance of the discrete left-endpoint sums
    // against the discrete analogue sum kappa(T,t_i)^2 dt within 4 sigma.
    const double beta = 5.0;
    const TimeGrid grid{1.0, 256};
    const VolterraKernel kernel(beta);
    const KernelTable table(kernel, grid, 1);

    double discrete_var = 0.0;
    const auto last_row = table.row(grid.steps);
    for (int i = 0; i < grid.steps; ++i)
        discrete_var += last_row[std::size_t(i)] * last_row[std::size_t(i)] * grid.dt();

    const long paths = 4000;
    std::vector<double> states(std::size_t(grid.steps) + 1);
    BrownianPath noise;
    double sum = 0.0, sum_sq = 0.0;
    for (long j = 0; j < paths; ++j) {
        generate_brownian_into(noise, 0xABCDEFuLL, std::uint64_t(j), grid, 1);
        exact_path_states(table, 0.0, noise, states);
        const double x = states.back();
        sum += x;
        sum_sq += x * x;
    }
    const double mc_var = (sum_sq - sum * sum / paths) / (paths - 1);
    // Fourth-moment-based standard error of a Gaussian sample variance.
    const double se = discrete_var * std::sqrt(2.0 / (paths - 1));
    CHECK(std::abs(mc_var - discrete_var) < 4.0 * se);

    // The continuous-time variance (adaptive quadrature over the kernel
    // squared) is close to its discrete left-endpoint analogue.
    const double continuous_var = covariance_eval(beta, 1.0, 1.0);
    CHECK(std::abs(continuous_var - discrete_var) < 0.05 * continuous_var + 1e-3);
}

TEST_CASE("exact solution agrees with fine-step Euler on the unprojected dynamics") {
    // Simulate dX = beta (int_0^t X_u du - t X_t) dt + dW directly (the
    // occupation integral kept as a running sum) and compare against the
    // kernel solution driven by the same increments, at two step sizes:
    // the finer grid must track the kernel solution more closely.
    const double beta = 5.0;
    const int fine_steps = 2048;
    const TimeGrid fine{1.0, fine_steps};
    const VolterraKernel kernel(beta);
    const KernelTable fine_table(kernel, fine, 1);

    double err_fine = 0.0, err_coarse = 0.0;
    const int paths = 6;
    std::vector<double> exact_fine(std::size_t(fine_steps) + 1);
    BrownianPath noise;
    for (int j = 0; j < paths; ++j) {
        generate_brownian_into(noise, 0x515EEDuLL, std::uint64_t(j), fine, 1);

        exact_path_states(fine_table, 0.0, noise, exact_fine);

        auto euler_terminal = [&](int factor) {
            const int steps = fine_steps / factor;
            const double dt = 1.0 / steps;
            double x = 0.0;
            double occupied_integral = 0.0; // int_0^t X_u du, left endpoint
            for (int n = 0; n < steps; ++n) {
                double dw = 0.0;
                for (int k = 0; k < factor; ++k)
                    dw += noise.increments[std::size_t(n * factor + k)];
                const double t_n = n * dt;
                const double drift = beta * (occupied_integral - t_n * x);
                occupied_integral += x * dt;
                x += drift * dt + dw;
            }
            return x;
        };

        err_fine += std::abs(euler_terminal(1) - exact_fine.back());
        err_coarse += std::abs(euler_terminal(16) - exact_fine.back());
    }
    err_fine /= paths;
    err_coarse /= paths;
    CHECK(err_fine < err_coarse);
    CHECK(err_fine < 0.02);
}

TEST_CASE("exact path helpers validate input shapes") {
    const TimeGrid grid{1.0, 32};
    const VolterraKernel kernel(1.0);
    const KernelTable table(kernel, grid, 1);
    std::vector<double> out(33);

    BrownianPath noise;
    generate_brownian_into(noise, 7uLL, 0, grid, 2); // wrong dimension
    CHECK_THROWS_AS(exact_path_states(table, 0.0, noise, out), std::invalid_argument);

    generate_brownian_into(noise, 7uLL, 0, TimeGrid{1.0, 16}, 1); // too short
    CHECK_THROWS_AS(exact_path_states(table, 0.0, noise, out), std::invalid_argument);

    generate_brownian_into(noise, 7uLL, 0, grid, 1);
    std::vector<double> bad(32);
    CHECK_THROWS_AS(exact_path_states(table, 0.0, noise, bad), std::invalid_argument);

    const SimulatedPath path = exact_path(1.5, 0.0, grid, noise);
    CHECK(path.states.size() == 33);
    CHECK(path.final_state[0] == path.states.back());
    CHECK(path.states.front() == 1.5);
}
