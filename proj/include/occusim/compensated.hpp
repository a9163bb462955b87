#pragma once

#include <cmath>
#include <span>

namespace occusim {

// Neumaier-compensated accumulator. Summation order still matters for
// bit-level reproducibility, so reductions that must be deterministic feed
// this in a fixed serial order.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_total(std::span<const double> xs) {
    CompensatedSum acc;
    for (double x : xs) acc.add(x);
    return acc.value();
}

} // namespace occusim
