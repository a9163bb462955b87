#pragma once

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <utility>

// One-dimensional quadrature: a fixed-resolution composite Simpson rule for
// production use, and an adaptive Gauss-Kronrod 15(7) integrator used as an
// independent cross-check in the test suite.

namespace occusim::quad {

// Composite Simpson rule with `subintervals` panels (rounded up to even).
template <class F>
double composite_simpson(F&& f, double a, double b, int subintervals) {
    if (!(b >= a)) throw std::invalid_argument("composite_simpson: requires b >= a");
    if (subintervals < 1) throw std::invalid_argument("composite_simpson: requires >= 1 subinterval");
    if (a == b) return 0.0;
    int n = subintervals;
    if (n % 2 != 0) ++n;
    const double h = (b - a) / n;
    double odd = 0.0, even = 0.0;
    for (int i = 1; i < n; i += 2) odd += f(a + i * h);
    for (int i = 2; i < n; i += 2) even += f(a + i * h);
    return (h / 3.0) * (f(a) + 4.0 * odd + 2.0 * even + f(b));
}

namespace detail {

// Kronrod 15-point abscissae/weights with the embedded 7-point Gauss rule
// (QUADPACK dqk15 constants).
inline constexpr double kKronrodNodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double kGaussWeights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

template <class F>
std::pair<double, double> gauss_kronrod_15(F&& f, double a, double b) {
    const double c = 0.5 * (a + b), halfwidth = 0.5 * (b - a);
    const double fc = f(c);
    double kronrod = kKronrodWeights[7] * fc;
    double gauss = kGaussWeights[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double dx = halfwidth * kKronrodNodes[i];
        const double sum = f(c - dx) + f(c + dx);
        kronrod += kKronrodWeights[i] * sum;
        if (i % 2 == 1) gauss += kGaussWeights[i / 2] * sum;
    }
    return {kronrod * halfwidth, std::abs(kronrod - gauss) * halfwidth};
}

template <class F>
double adaptive_gk_rec(F& f, double a, double b, double tol, int depth) {
    const auto [value, err] = gauss_kronrod_15(f, a, b);
    if (err <= tol || depth <= 0) return value;
    const double c = 0.5 * (a + b);
    return adaptive_gk_rec(f, a, c, 0.5 * tol, depth - 1) +
           adaptive_gk_rec(f, c, b, 0.5 * tol, depth - 1);
}

} // namespace detail

// Adaptive Gauss-Kronrod 15(7) with bisection, absolute tolerance `tol`.
template <class F>
double adaptive_gauss_kronrod(F&& f, double a, double b, double tol, int max_depth = 40) {
    if (!(b >= a)) throw std::invalid_argument("adaptive_gauss_kronrod: requires b >= a");
    if (!(tol > 0.0)) throw std::invalid_argument("adaptive_gauss_kronrod: requires tol > 0");
    if (a == b) return 0.0;
    return detail::adaptive_gk_rec(f, a, b, tol, max_depth);
}

} // namespace occusim::quad
