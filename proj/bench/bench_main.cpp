// Benchmark of the OpenMP path-batch and experiment drivers against their
// plain-loop reference implementations, with a bit-exactness cross-check:
// identical results are part of the contract, so any mismatch fails the run.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "occusim/harness.hpp"
#include "occusim/models.hpp"
#include "occusim/scheme.hpp"

namespace {

using namespace occusim;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

bool same_paths(const std::vector<SimulatedPath>& a, const std::vector<SimulatedPath>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::memcmp(a[i].final_state.data(), b[i].final_state.data(),
                        a[i].final_state.size() * sizeof(double)) != 0)
            return false;
        if (a[i].occupation != b[i].occupation) return false;
        if (a[i].states != b[i].states) return false;
    }
    return true;
}

bool same_tables(const ErrorTable& a, const ErrorTable& b) {
    if (a.rows.size() != b.rows.size()) return false;
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        const ErrorRow &ra = a.rows[i], &rb = b.rows[i];
        if (ra.state_error != rb.state_error || ra.occ_error != rb.occ_error ||
            ra.state_std_error != rb.state_std_error || ra.occ_std_error != rb.occ_std_error)
            return false;
    }
    return true;
}

} // namespace

int main() {
    const CranstonLeJanModel model(5.0);
    const TimeGrid grid{1.0, 512};
    const std::vector<double> x0{0.0};

    int failures = 0;

    {
        const PartitionOfUnity part(1, 2.0, 16);
        const auto projected = project_coefficients(model, part);
        const long count = 2048;

        auto t0 = Clock::now();
        const auto serial = run_batch_serial(*projected, grid, 7, count, x0);
        const double t_serial = seconds_since(t0);

        t0 = Clock::now();
        const auto parallel = run_batch(*projected, grid, 7, count, x0);
        const double t_parallel = seconds_since(t0);

        const bool ok = same_paths(serial, parallel);
        failures += !ok;
        std::printf("path batch   (%ld paths x %d steps): serial %.3fs  parallel %.3fs  "
                    "speedup %.2fx  bit-exact %s\n",
                    count, grid.steps, t_serial, t_parallel, t_serial / t_parallel,
                    ok ? "yes" : "NO");
    }

    {
        StrongErrorOptions opt;
        opt.k_list = {4, 8, 16};
        opt.reference = ReferenceKind::exact_oracle;
        opt.paths = 512;
        opt.seed = 11;
        opt.radius = 2.0;
        opt.x0 = x0;
        opt.bootstrap_resamples = 200;

        auto t0 = Clock::now();
        const ErrorTable serial = strong_error_experiment_serial(model, grid, opt);
        const double t_serial = seconds_since(t0);

        t0 = Clock::now();
        const ErrorTable parallel = strong_error_experiment(model, grid, opt);
        const double t_parallel = seconds_since(t0);

        const bool ok = same_tables(serial, parallel);
        failures += !ok;
        std::printf("strong error (%ld paths, K up to %d): serial %.3fs  parallel %.3fs  "
                    "speedup %.2fx  bit-exact %s\n",
                    opt.paths, opt.k_list.back(), t_serial, t_parallel, t_serial / t_parallel,
                    ok ? "yes" : "NO");
    }

    if (failures) {
        std::printf("FAIL: parallel drivers are not bit-exact with the serial reference\n");
        return 1;
    }
    std::printf("all drivers bit-exact with the serial reference\n");
    return 0;
}
