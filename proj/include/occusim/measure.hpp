#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "occusim/compensated.hpp"

// Finite nonnegative measures on R^d and the two finite-dimensional gadgets
// used to work with them: a partition of the domain into half-open boxes
// (occupation vectors live on its cells) and a separating family of smooth
// test functions (the cylindrical norm is the l2 norm of the pairings
// against that family).

namespace occusim {

using Point = std::span<const double>;

// A finite nonnegative discrete measure: weighted atoms in R^d.
class DiscreteMeasure {
public:
    explicit DiscreteMeasure(int dim);

    // Rejects nonnegative-weight or dimension violations with invalid_argument.
    void add_atom(Point location, double weight);
    void add_atom(double location, double weight); // 1-d convenience

    int dim() const { return dim_; }
    std::size_t size() const { return weights_.size(); }
    Point location(std::size_t i) const { return {locations_.data() + i * dim_, std::size_t(dim_)}; }
    double weight(std::size_t i) const { return weights_[i]; }
    std::span<const double> weights() const { return weights_; }

    // Total mass, accumulated with compensation.
    double mass() const { return compensated_total(weights_); }

private:
    int dim_;
    std::vector<double> locations_; // size() * dim_, row-major
    std::vector<double> weights_;
};

// Integral of a scalar function against the measure.
template <class F>
double integrate(const DiscreteMeasure& o, F&& phi) {
    CompensatedSum acc;
    for (std::size_t i = 0; i < o.size(); ++i) acc.add(o.weight(i) * phi(o.location(i)));
    return acc.value();
}

// Integral of a vector-valued function; `phi(x, out)` fills `out`.
template <class F>
void integrate_vector(const DiscreteMeasure& o, F&& phi, std::span<double> out) {
    std::vector<CompensatedSum> acc(out.size());
    std::vector<double> buf(out.size());
    for (std::size_t i = 0; i < o.size(); ++i) {
        phi(o.location(i), std::span<double>(buf));
        const double w = o.weight(i);
        for (std::size_t c = 0; c < out.size(); ++c) acc[c].add(w * buf[c]);
    }
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = acc[c].value();
}

// First moment of the measure (integral of the identity).
std::vector<double> first_moment(const DiscreteMeasure& o);

// Regular partition of R^d into M^d half-open boxes tiling [-R, R)^d plus a
// single exterior cell. Cell 0 is the exterior (nominal center (R, 0, ..., 0));
// interior cells are numbered 1..M^d with axis 0 fastest.
class PartitionOfUnity {
public:
    PartitionOfUnity(int dim, double radius, int bins_per_axis);

    int dim() const { return dim_; }
    double radius() const { return radius_; }
    int bins_per_axis() const { return bins_per_axis_; }
    double bin_width() const { return width_; }
    long interior_cells() const { return interior_cells_; }
    long num_cells() const { return interior_cells_ + 1; }

    // Index of the unique cell whose indicator is 1 at x. Total: anything on
    // or outside the boundary of [-R, R)^d lands in the exterior cell 0.
    long locate(Point x) const;

    // Center of cell k (the exterior cell reports its nominal center).
    Point center(long k) const { return {centers_.data() + k * dim_, std::size_t(dim_)}; }

private:
    int dim_;
    double radius_;
    int bins_per_axis_;
    double width_;
    long interior_cells_;
    std::vector<double> centers_; // num_cells() * dim_
};

// Uniform partition with the bins-per-axis = K convention used throughout the
// convergence experiments.
PartitionOfUnity build_uniform_partition(int dim, double radius, int bins_per_axis);

// Occupation vector of a measure: cell-wise masses. Mass-preserving by
// construction; entries ordered as the partition's cells.
std::vector<double> project(const DiscreteMeasure& o, const PartitionOfUnity& part);

// Reconstruct a discrete measure from an occupation vector by placing each
// cell's mass at the cell center. Zero entries are omitted; tiny negative
// entries (>= -1e-12) are treated as exact zeros; anything more negative is
// rejected with invalid_argument.
DiscreteMeasure lift(std::span<const double> z, const PartitionOfUnity& part);

// Separating family g_0, ..., g_J of weighted C^1 test functions. g_0 is a
// positive constant; the rest are products of coordinate-wise sine/cosine
// waves with geometrically increasing frequencies, enumerated by total order.
// Weights are chosen so that sum_j ||g_j||_{C^1}^2 <= 1.
class SeparatingFamily {
public:
    SeparatingFamily(int dim, int truncation); // truncation = J, family size J+1

    int dim() const { return dim_; }
    int size() const { return int(funcs_.size()); } // J + 1

    double eval(int j, Point x) const;
    // Evaluates all members at once; out.size() == size().
    void eval_all(Point x, std::span<double> out) const;

    double sup_norm(int j) const { return funcs_[j].weight; }           // ||g_j||_inf
    double grad_norm(int j) const { return funcs_[j].grad_bound; }      // ||grad g_j||_inf bound
    double c1_norm(int j) const { return funcs_[j].weight + funcs_[j].grad_bound; }

    // sum_j ||g_j||_{C^1}^2; the weights are designed to keep this at most 1,
    // though the floating-point total may exceed 1 by rounding error.
    double c1_norm_sq_total() const;
    // sqrt(sum_j ||grad g_j||_inf^2) — the constant in the lift/project
    // contraction bound.
    double grad_norm_total() const;

private:
    struct Member {
        std::vector<int> factors; // per-axis factor index
        double weight;            // multiplicative weight w_j
        double grad_bound;        // w_j * sqrt(sum_i freq(a_i)^2)
    };
    double factor_value(int a, double x) const;

    int dim_;
    int max_pair_;  // largest sine/cosine pair index across the family
    std::vector<Member> funcs_;
};

SeparatingFamily build_separating_family(int dim, int truncation);

// Pairings <o, g_j> for all members of the family.
std::vector<double> pairings(const DiscreteMeasure& o, const SeparatingFamily& fam);

// Cylindrical norm: l2 norm of the pairing sequence.
double cyl_norm(const DiscreteMeasure& o, const SeparatingFamily& fam);

// Cylindrical distance between two measures (norm of the signed difference).
double cyl_distance(const DiscreteMeasure& a, const DiscreteMeasure& b,
                    const SeparatingFamily& fam);

// Joint norm on (measure, state) pairs.
double joint_norm(const DiscreteMeasure& o, Point x, const SeparatingFamily& fam);

// Family members tabulated at cell centers: row k holds g_0..g_J at center_k.
// Lets a simulation maintain the pairings of a lifted occupation vector
// incrementally as cell masses change.
class PartitionPairingTable {
public:
    PartitionPairingTable(const PartitionOfUnity& part, const SeparatingFamily& fam);

    int family_size() const { return family_size_; }
    long cells() const { return long(values_.size()) / family_size_; }
    std::span<const double> row(long cell) const {
        return {values_.data() + cell * family_size_, std::size_t(family_size_)};
    }

private:
    int family_size_;
    std::vector<double> values_;
};

} // namespace occusim
