#pragma once

#include <array>
#include <cmath>
#include <cstdint>

// Counter-based random numbers for reproducible parallel Monte Carlo.
//
// Every variate is a pure function of (seed, stream, step, slot), so paths can
// be simulated in any order, on any number of threads, or resumed mid-run and
// still consume exactly the same numbers.

namespace occusim::rng {

inline constexpr const char* kGeneratorId = "philox4x32-10/icdf";

namespace detail {

struct Philox4x32 {
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t(kMul0) * ctr[0];
            const std::uint64_t p1 = std::uint64_t(kMul1) * ctr[2];
            const auto hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
            const auto hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }
};

} // namespace detail

// 64 uniform bits for the given (seed, stream, step, slot) coordinate.
inline std::uint64_t bits64(std::uint64_t seed, std::uint64_t stream,
                            std::uint32_t step, std::uint32_t slot) {
    const std::array<std::uint32_t, 4> ctr = {step, slot, std::uint32_t(stream),
                                              std::uint32_t(stream >> 32)};
    const std::array<std::uint32_t, 2> key = {std::uint32_t(seed), std::uint32_t(seed >> 32)};
    const auto out = detail::Philox4x32::block(ctr, key);
    return (std::uint64_t(out[0]) << 32) | out[1];
}

// Uniform draw in the open interval (0, 1); 53-bit resolution.
inline double uniform01(std::uint64_t seed, std::uint64_t stream,
                        std::uint32_t step, std::uint32_t slot) {
    const std::uint64_t u = bits64(seed, stream, step, slot);
    return double(u >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

// Inverse of the standard normal CDF (Wichura's AS 241 PPND16 rational
// approximations; relative error below 1e-15 over (0,1)).
inline double inverse_normal_cdf(double p) {
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                             1.3314166789178437745e2) * r + 3.3871328727963666080e0);
        const double den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                             4.2313330701600911252e1) * r + 1.0);
        return q * num / den;
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        const double num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                                 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                               3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                             4.63033784615654529590e0) * r + 1.42343711074968357734e0);
        const double den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                                 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                               6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                             2.05319162663775882187e0) * r + 1.0);
        value = num / den;
    } else {
        r -= 5.0;
        const double num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                                 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                               2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                             5.46378491116411436990e0) * r + 6.65790464350110377720e0);
        const double den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                                 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                               1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                             5.99832206555887937690e-1) * r + 1.0);
        value = num / den;
    }
    return (q < 0.0) ? -value : value;
}

// Standard normal variate at the given stream coordinate.
inline double normal_variate(std::uint64_t seed, std::uint64_t stream,
                             std::uint32_t step, std::uint32_t slot) {
    return inverse_normal_cdf(uniform01(seed, stream, step, slot));
}

// Uniform index in [0, n), on a slot range disjoint from path simulation
// (used by the bootstrap resampler).
inline std::uint64_t uniform_index(std::uint64_t seed, std::uint64_t stream,
                                   std::uint32_t step, std::uint64_t n) {
    return bits64(seed, stream, step, 0xB007u) % n;
}

} // namespace occusim::rng
