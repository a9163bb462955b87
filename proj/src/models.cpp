#include "occusim/models.hpp"

#include <cmath>
#include <stdexcept>

namespace occusim {

double OccupationView::mass() const {
    CompensatedSum acc;
    for_each_cell([&](long, double w) { acc.add(w); });
    return acc.value();
}

namespace {

// Measure carried by an occupation vector: each cell's mass at its center.
// Mirrors lift(), including the treatment of numerically-zero entries.
DiscreteMeasure lift_view(const OccupationView& z, const PartitionOfUnity& part) {
    DiscreteMeasure o(part.dim());
    z.for_each_cell([&](long k, double w) {
        if (w < 0.0 && w >= -1e-12) return;
        o.add_atom(part.center(k), w);
    });
    return o;
}

class GenericProjectedModel final : public ProjectedModel {
public:
    GenericProjectedModel(const OsdeModel& model, const PartitionOfUnity& part)
        : ProjectedModel(part), model_(model) {}

    double clock_rate(const OccupationView& z, Point x) const override {
        return model_.clock_rate(lift_view(z, part_), x);
    }
    void drift(const OccupationView& z, Point x, std::span<double> out) const override {
        model_.drift(lift_view(z, part_), x, out);
    }
    void diffusion(const OccupationView& z, Point x, std::span<double> out) const override {
        model_.diffusion(lift_view(z, part_), x, out);
    }

private:
    const OsdeModel& model_;
};

} // namespace

std::unique_ptr<ProjectedModel> OsdeModel::project(const PartitionOfUnity& part) const {
    return std::make_unique<GenericProjectedModel>(*this, part);
}

std::unique_ptr<ProjectedModel> project_coefficients(const OsdeModel& model,
                                                     const PartitionOfUnity& part) {
    if (model.dim() != part.dim())
        throw std::invalid_argument("project_coefficients: model/partition dimension mismatch");
    return model.project(part);
}

std::unique_ptr<ProjectedModel> project_coefficients_generic(const OsdeModel& model,
                                                             const PartitionOfUnity& part) {
    if (model.dim() != part.dim())
        throw std::invalid_argument("project_coefficients_generic: dimension mismatch");
    return std::make_unique<GenericProjectedModel>(model, part);
}

// ---------------------------------------------------------------------------
// Mean-attracting linear model

CranstonLeJanModel::CranstonLeJanModel(double beta) : beta_(beta) {
    if (!std::isfinite(beta)) throw std::invalid_argument("CranstonLeJanModel: beta must be finite");
}

void CranstonLeJanModel::drift(const DiscreteMeasure& o, Point x, std::span<double> out) const {
    const auto m1 = first_moment(o);
    out[0] = beta_ * (m1[0] - o.mass() * x[0]);
}

void CranstonLeJanModel::diffusion(const DiscreteMeasure&, Point, std::span<double> out) const {
    out[0] = 1.0;
}

CoefficientBounds CranstonLeJanModel::bounds() const {
    // Normalized to unit occupation mass: the drift is beta * <o, y - x>.
    return {std::abs(beta_), std::abs(beta_)};
}

namespace {

class CranstonProjected final : public ProjectedModel {
public:
    CranstonProjected(double beta, const PartitionOfUnity& part)
        : ProjectedModel(part), beta_(beta) {}

    double clock_rate(const OccupationView&, Point) const override { return 1.0; }

    void drift(const OccupationView& z, Point x, std::span<double> out) const override {
        CompensatedSum mass, moment;
        z.for_each_cell([&](long k, double w) {
            mass.add(w);
            moment.add(w * part_.center(k)[0]);
        });
        out[0] = beta_ * (moment.value() - mass.value() * x[0]);
    }

    void diffusion(const OccupationView&, Point, std::span<double> out) const override {
        out[0] = 1.0;
    }

private:
    double beta_;
};

} // namespace

std::unique_ptr<ProjectedModel> CranstonLeJanModel::project(const PartitionOfUnity& part) const {
    return std::make_unique<CranstonProjected>(beta_, part);
}

// ---------------------------------------------------------------------------
// Smoothed self-interacting motion

namespace {

// phi_eps(v) = v / sqrt(eps + |v|^2), evaluated componentwise into out.
inline double interaction_denominator(double eps, Point v) {
    double sq = eps;
    for (double c : v) sq += c * c;
    return std::sqrt(sq);
}

} // namespace

RaimondModel::RaimondModel(double beta, double eps_reg, int dim)
    : beta_(beta), eps_(eps_reg), dim_(dim) {
    if (!std::isfinite(beta)) throw std::invalid_argument("RaimondModel: beta must be finite");
    if (!(eps_reg > 0.0) || !std::isfinite(eps_reg))
        throw std::invalid_argument("RaimondModel: eps_reg must be finite and > 0");
    if (dim < 1 || dim > 8)
        throw std::invalid_argument("RaimondModel: dim must be between 1 and 8");
}

void RaimondModel::drift(const DiscreteMeasure& o, Point x, std::span<double> out) const {
    integrate_vector(
        o,
        [&](Point y, std::span<double> buf) {
            double v[8];
            for (int i = 0; i < dim_; ++i) v[i] = y[i] - x[i];
            const double denom = interaction_denominator(eps_, {v, std::size_t(dim_)});
            for (int i = 0; i < dim_; ++i) buf[i] = v[i] / denom;
        },
        out);
    for (int i = 0; i < dim_; ++i) out[i] *= beta_;
}

void RaimondModel::diffusion(const DiscreteMeasure&, Point, std::span<double> out) const {
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) out[std::size_t(i) * dim_ + j] = (i == j) ? 1.0 : 0.0;
}

CoefficientBounds RaimondModel::bounds() const {
    // Normalized to unit occupation mass; the interaction kernel has gradient
    // bound 1/sqrt(eps) and sup bound 1.
    return {std::abs(beta_) / std::sqrt(eps_), std::abs(beta_)};
}

namespace {

class RaimondProjected final : public ProjectedModel {
public:
    RaimondProjected(double beta, double eps, int dim, const PartitionOfUnity& part)
        : ProjectedModel(part), beta_(beta), eps_(eps), dim_(dim) {}

    double clock_rate(const OccupationView&, Point) const override { return 1.0; }

    void drift(const OccupationView& z, Point x, std::span<double> out) const override {
        CompensatedSum acc[8];
        z.for_each_cell([&](long k, double w) {
            const Point c = part_.center(k);
            double v[8];
            double sq = eps_;
            for (int i = 0; i < dim_; ++i) {
                v[i] = c[i] - x[i];
                sq += v[i] * v[i];
            }
            const double denom = std::sqrt(sq);
            for (int i = 0; i < dim_; ++i) acc[i].add(w * (v[i] / denom));
        });
        for (int i = 0; i < dim_; ++i) out[i] = beta_ * acc[i].value();
    }

    void diffusion(const OccupationView&, Point, std::span<double> out) const override {
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j) out[std::size_t(i) * dim_ + j] = (i == j) ? 1.0 : 0.0;
    }

private:
    double beta_;
    double eps_;
    int dim_;
};

} // namespace

std::unique_ptr<ProjectedModel> RaimondModel::project(const PartitionOfUnity& part) const {
    return std::make_unique<RaimondProjected>(beta_, eps_, dim_, part);
}

// ---------------------------------------------------------------------------
// Local occupied volatility

void LovParams::validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(alpha) || !(alpha > 0.0))
        throw std::invalid_argument("LovParams: alpha must be finite and > 0");
    if (!finite(beta)) throw std::invalid_argument("LovParams: beta must be finite");
    if (!finite(gamma)) throw std::invalid_argument("LovParams: gamma must be finite");
    if (!finite(epsilon) || !(epsilon > 0.0))
        throw std::invalid_argument("LovParams: epsilon must be finite and > 0");
    if (!finite(x0) || !(x0 > 0.0)) throw std::invalid_argument("LovParams: x0 must be finite and > 0");
    if (!finite(kappa) || kappa < 0.0)
        throw std::invalid_argument("LovParams: kappa must be finite and >= 0");
    const double vm = v_min();
    if (!(vm > 0.0))
        throw std::invalid_argument("LovParams: smile minimum gamma - beta^2/(4 alpha) must be > 0");
    if (!finite(delta) || !(std::abs(delta) < vm))
        throw std::invalid_argument("LovParams: |delta| must be < the smile minimum");
}

LovModel::LovModel(const LovParams& params) : params_(params) { params_.validate(); }

double LovModel::clock_rate(const DiscreteMeasure& o, Point) const {
    return std::max(0.0, 1.0 + params_.kappa * o.mass());
}

void LovModel::drift(const DiscreteMeasure&, Point, std::span<double> out) const { out[0] = 0.0; }

double LovModel::local_variance(double x) const {
    const double m = x / params_.x0 - 1.0;
    return params_.alpha * m * m + params_.beta * m + params_.gamma;
}

double LovModel::occupied_variance(double x, double mass, double mean_l) const {
    double v = local_variance(x);
    if (mass > 0.0) v += mean_l;
    return v;
}

double LovModel::variance(const DiscreteMeasure& o, double x) const {
    const double mass = o.mass();
    if (mass <= 0.0 || x == 0.0) return local_variance(x);
    const double avg =
        integrate(o, [&](Point y) {
            return params_.delta * std::tanh((y[0] / x - 1.0) / params_.epsilon);
        }) /
        mass;
    return occupied_variance(x, mass, avg);
}

void LovModel::diffusion(const DiscreteMeasure& o, Point x, std::span<double> out) const {
    if (x[0] == 0.0) {
        out[0] = 0.0;
        return;
    }
    out[0] = x[0] * std::sqrt(std::max(0.0, variance(o, x[0])));
}

namespace {

class LovProjected final : public ProjectedModel {
public:
    LovProjected(const LovParams& p, const PartitionOfUnity& part)
        : ProjectedModel(part), p_(p) {}

    double clock_rate(const OccupationView& z, Point) const override {
        return std::max(0.0, 1.0 + p_.kappa * z.mass());
    }

    void drift(const OccupationView&, Point, std::span<double> out) const override { out[0] = 0.0; }

    void diffusion(const OccupationView& z, Point x, std::span<double> out) const override {
        if (x[0] == 0.0) {
            out[0] = 0.0;
            return;
        }
        const double m = x[0] / p_.x0 - 1.0;
        double v = p_.alpha * m * m + p_.beta * m + p_.gamma;
        CompensatedSum mass, lsum;
        z.for_each_cell([&](long k, double w) {
            if (w < 0.0 && w >= -1e-12) return;
            mass.add(w);
            lsum.add(w * (p_.delta * std::tanh((part_.center(k)[0] / x[0] - 1.0) / p_.epsilon)));
        });
        const double total = mass.value();
        if (total > 0.0) v += lsum.value() / total;
        out[0] = x[0] * std::sqrt(std::max(0.0, v));
    }

private:
    LovParams p_;
};

} // namespace

std::unique_ptr<ProjectedModel> LovModel::project(const PartitionOfUnity& part) const {
    return std::make_unique<LovProjected>(params_, part);
}

std::unique_ptr<OsdeModel> cranston_le_jan(double beta) {
    return std::make_unique<CranstonLeJanModel>(beta);
}

std::unique_ptr<OsdeModel> raimond(double beta, double eps_reg, int dim) {
    return std::make_unique<RaimondModel>(beta, eps_reg, dim);
}

std::unique_ptr<OsdeModel> lov(const LovParams& params) { return std::make_unique<LovModel>(params); }

} // namespace occusim
