#include "occusim/measure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace occusim {

// ---------------------------------------------------------------------------
// DiscreteMeasure

DiscreteMeasure::DiscreteMeasure(int dim) : dim_(dim) {
    if (dim < 1) throw std::invalid_argument("DiscreteMeasure: dim must be >= 1");
}

void DiscreteMeasure::add_atom(Point location, double weight) {
    if (int(location.size()) != dim_)
        throw std::invalid_argument("DiscreteMeasure::add_atom: location dimension mismatch");
    if (!(weight >= 0.0) || !std::isfinite(weight))
        throw std::invalid_argument("DiscreteMeasure::add_atom: weight must be finite and >= 0");
    for (double c : location)
        if (!std::isfinite(c))
            throw std::invalid_argument("DiscreteMeasure::add_atom: location must be finite");
    locations_.insert(locations_.end(), location.begin(), location.end());
    weights_.push_back(weight);
}

void DiscreteMeasure::add_atom(double location, double weight) {
    add_atom(Point(&location, 1), weight);
}

std::vector<double> first_moment(const DiscreteMeasure& o) {
    std::vector<double> out(o.dim());
    integrate_vector(
        o, [](Point x, std::span<double> buf) { for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = x[i]; },
        out);
    return out;
}

// ---------------------------------------------------------------------------
// PartitionOfUnity

PartitionOfUnity::PartitionOfUnity(int dim, double radius, int bins_per_axis)
    : dim_(dim), radius_(radius), bins_per_axis_(bins_per_axis) {
    if (dim < 1) throw std::invalid_argument("PartitionOfUnity: dim must be >= 1");
    if (!(radius > 0.0) || !std::isfinite(radius))
        throw std::invalid_argument("PartitionOfUnity: radius must be finite and > 0");
    if (bins_per_axis < 1) throw std::invalid_argument("PartitionOfUnity: bins_per_axis must be >= 1");
    width_ = 2.0 * radius / bins_per_axis;

    interior_cells_ = 1;
    for (int i = 0; i < dim; ++i) {
        if (interior_cells_ > (1L << 26) / bins_per_axis)
            throw std::invalid_argument("PartitionOfUnity: too many cells");
        interior_cells_ *= bins_per_axis;
    }

    centers_.assign(std::size_t(num_cells()) * dim_, 0.0);
    centers_[0] = radius_; // exterior cell's nominal center (R, 0, ..., 0)
    for (long k = 1; k <= interior_cells_; ++k) {
        long rem = k - 1;
        for (int i = 0; i < dim_; ++i) {
            const long idx = rem % bins_per_axis_;
            rem /= bins_per_axis_;
            centers_[std::size_t(k) * dim_ + i] = -radius_ + (double(idx) + 0.5) * width_;
        }
    }
}

long PartitionOfUnity::locate(Point x) const {
    long index = 0, stride = 1;
    for (int i = 0; i < dim_; ++i) {
        const double c = x[i];
        if (!(c >= -radius_) || c >= radius_) return 0; // exterior (NaN included)
        long idx = long(std::floor((c + radius_) / width_));
        if (idx < 0) idx = 0;                                   // guard rounding at -R
        if (idx >= bins_per_axis_) idx = bins_per_axis_ - 1;    // guard rounding near +R
        index += idx * stride;
        stride *= bins_per_axis_;
    }
    return index + 1;
}

PartitionOfUnity build_uniform_partition(int dim, double radius, int bins_per_axis) {
    return PartitionOfUnity(dim, radius, bins_per_axis);
}

std::vector<double> project(const DiscreteMeasure& o, const PartitionOfUnity& part) {
    if (o.dim() != part.dim())
        throw std::invalid_argument("project: measure/partition dimension mismatch");
    std::vector<double> z(std::size_t(part.num_cells()), 0.0);
    for (std::size_t i = 0; i < o.size(); ++i) z[std::size_t(part.locate(o.location(i)))] += o.weight(i);
    return z;
}

DiscreteMeasure lift(std::span<const double> z, const PartitionOfUnity& part) {
    if (long(z.size()) != part.num_cells())
        throw std::invalid_argument("lift: occupation vector length must equal cell count");
    DiscreteMeasure o(part.dim());
    for (long k = 0; k < long(z.size()); ++k) {
        const double w = z[std::size_t(k)];
        if (w == 0.0) continue;
        if (w < 0.0) {
            if (w >= -1e-12) continue; // numerically zero
            throw std::invalid_argument("lift: occupation entry " + std::to_string(k) +
                                        " is negative (" + std::to_string(w) + ")");
        }
        o.add_atom(part.center(k), w);
    }
    return o;
}

// ---------------------------------------------------------------------------
// SeparatingFamily

namespace {

// Enumerate multi-indices (a_1..a_d) by increasing total then lexicographic
// order, until `count` of them are produced.
std::vector<std::vector<int>> enumerate_multi_indices(int dim, int count) {
    std::vector<std::vector<int>> out;
    out.reserve(count);
    std::vector<int> idx(dim, 0);
    for (int total = 0; int(out.size()) < count; ++total) {
        // generate all compositions of `total` into dim parts, lexicographically
        auto rec = [&](auto&& self, int pos, int remaining) -> void {
            if (int(out.size()) >= count) return;
            if (pos == dim - 1) {
                idx[pos] = remaining;
                out.push_back(idx);
                return;
            }
            for (int a = 0; a <= remaining; ++a) {
                idx[pos] = a;
                self(self, pos + 1, remaining - a);
                if (int(out.size()) >= count) return;
            }
        };
        rec(rec, 0, total);
    }
    return out;
}

// Angular frequency of 1-d factor a (a = 0 is the constant factor).
double factor_frequency(int a) {
    if (a == 0) return 0.0;
    const int pair = (a + 1) / 2;
    return std::exp2(0.5 * (pair - 1)); // 1, 1, sqrt(2), sqrt(2), 2, 2, ...
}

} // namespace

SeparatingFamily::SeparatingFamily(int dim, int truncation) : dim_(dim), max_pair_(0) {
    if (dim < 1) throw std::invalid_argument("SeparatingFamily: dim must be >= 1");
    if (truncation < 1) throw std::invalid_argument("SeparatingFamily: truncation must be >= 1");
    if (truncation > 255) throw std::invalid_argument("SeparatingFamily: truncation too large");

    const auto indices = enumerate_multi_indices(dim, truncation + 1);
    const double theta = std::sqrt(0.5);
    funcs_.reserve(indices.size());
    for (int j = 0; j < int(indices.size()); ++j) {
        Member m;
        m.factors = indices[j];
        double grad_sq = 0.0;
        for (int a : m.factors) {
            const double w = factor_frequency(a);
            grad_sq += w * w;
            max_pair_ = std::max(max_pair_, (a + 1) / 2);
        }
        const double grad = std::sqrt(grad_sq);       // ||grad u_j||_inf bound, ||u_j||_inf = 1
        const double c1 = 1.0 + grad;                 // C^1 norm bound of the unweighted product
        m.weight = theta * std::exp2(-0.5 * j) / std::max(1.0, c1);
        m.grad_bound = m.weight * grad;
        funcs_.push_back(std::move(m));
    }
    if ((2 * max_pair_ + 1) * dim_ > 256)
        throw std::invalid_argument("SeparatingFamily: factor table too large");
}

double SeparatingFamily::factor_value(int a, double x) const {
    if (a == 0) return 1.0;
    const double wx = factor_frequency(a) * x;
    return (a % 2 == 1) ? std::sin(wx) : std::cos(wx);
}

double SeparatingFamily::eval(int j, Point x) const {
    const Member& m = funcs_[std::size_t(j)];
    double v = m.weight;
    for (int i = 0; i < dim_; ++i) v *= factor_value(m.factors[i], x[i]);
    return v;
}

void SeparatingFamily::eval_all(Point x, std::span<double> out) const {
    // Factor table: per axis, value of every 1-d factor 0..2*max_pair_.
    double table[256];
    const int per_axis = 2 * max_pair_ + 1;
    for (int i = 0; i < dim_; ++i) {
        double* t = table + i * per_axis;
        t[0] = 1.0;
        for (int p = 1; p <= max_pair_; ++p) {
            const double wx = std::exp2(0.5 * (p - 1)) * x[i];
            t[2 * p - 1] = std::sin(wx);
            t[2 * p] = std::cos(wx);
        }
    }
    for (int j = 0; j < size(); ++j) {
        const Member& m = funcs_[std::size_t(j)];
        double v = m.weight;
        for (int i = 0; i < dim_; ++i) v *= table[i * per_axis + m.factors[i]];
        out[std::size_t(j)] = v;
    }
}

double SeparatingFamily::c1_norm_sq_total() const {
    CompensatedSum acc;
    for (int j = 0; j < size(); ++j) acc.add(c1_norm(j) * c1_norm(j));
    return acc.value();
}

double SeparatingFamily::grad_norm_total() const {
    CompensatedSum acc;
    for (int j = 0; j < size(); ++j) acc.add(grad_norm(j) * grad_norm(j));
    return std::sqrt(acc.value());
}

SeparatingFamily build_separating_family(int dim, int truncation) {
    return SeparatingFamily(dim, truncation);
}

std::vector<double> pairings(const DiscreteMeasure& o, const SeparatingFamily& fam) {
    if (o.dim() != fam.dim())
        throw std::invalid_argument("pairings: measure/family dimension mismatch");
    std::vector<CompensatedSum> acc(std::size_t(fam.size()));
    std::vector<double> vals(std::size_t(fam.size()));
    for (std::size_t i = 0; i < o.size(); ++i) {
        fam.eval_all(o.location(i), vals);
        const double w = o.weight(i);
        for (int j = 0; j < fam.size(); ++j) acc[std::size_t(j)].add(w * vals[std::size_t(j)]);
    }
    std::vector<double> out(std::size_t(fam.size()));
    for (int j = 0; j < fam.size(); ++j) out[std::size_t(j)] = acc[std::size_t(j)].value();
    return out;
}

double cyl_norm(const DiscreteMeasure& o, const SeparatingFamily& fam) {
    CompensatedSum acc;
    for (double p : pairings(o, fam)) acc.add(p * p);
    return std::sqrt(acc.value());
}

double cyl_distance(const DiscreteMeasure& a, const DiscreteMeasure& b,
                    const SeparatingFamily& fam) {
    const auto pa = pairings(a, fam);
    const auto pb = pairings(b, fam);
    CompensatedSum acc;
    for (std::size_t j = 0; j < pa.size(); ++j) {
        const double d = pa[j] - pb[j];
        acc.add(d * d);
    }
    return std::sqrt(acc.value());
}

double joint_norm(const DiscreteMeasure& o, Point x, const SeparatingFamily& fam) {
    double n = cyl_norm(o, fam);
    double xsq = 0.0;
    for (double c : x) xsq += c * c;
    return std::sqrt(n * n + xsq);
}

// ---------------------------------------------------------------------------
// PartitionPairingTable

PartitionPairingTable::PartitionPairingTable(const PartitionOfUnity& part,
                                             const SeparatingFamily& fam)
    : family_size_(fam.size()) {
    if (part.dim() != fam.dim())
        throw std::invalid_argument("PartitionPairingTable: dimension mismatch");
    const long cells = part.num_cells();
    values_.resize(std::size_t(cells) * family_size_);
    for (long k = 0; k < cells; ++k)
        fam.eval_all(part.center(k), {values_.data() + k * family_size_, std::size_t(family_size_)});
}

} // namespace occusim
