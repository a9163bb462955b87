#pragma once

#include <memory>
#include <span>
#include <vector>

#include "occusim/measure.hpp"

// Model coefficient triples (clock rate, drift, diffusion) over a pair
// (occupation measure, state), plus their finite-dimensional projections onto
// a partition's occupation vectors.

namespace occusim {

// Optional regularity metadata a model may advertise.
struct CoefficientBounds {
    double lipschitz = -1.0;      // joint Lipschitz constant, < 0 when unknown
    double linear_growth = -1.0;  // linear-growth constant, < 0 when unknown
};

// Coefficients over (measure, state). Implementations are pure and safe to
// share across concurrently simulated paths.
class OsdeModel {
public:
    virtual ~OsdeModel() = default;

    virtual int dim() const = 0;
    virtual double clock_rate(const DiscreteMeasure& o, Point x) const = 0;
    virtual void drift(const DiscreteMeasure& o, Point x, std::span<double> out) const = 0;
    // Row-major d x d matrix.
    virtual void diffusion(const DiscreteMeasure& o, Point x, std::span<double> out) const = 0;

    virtual CoefficientBounds bounds() const { return {}; }
    // True when a closed-form solution of the model is available for use as a
    // convergence reference (only the mean-attracting linear model has one).
    virtual bool has_exact_solution() const { return false; }

    virtual std::unique_ptr<class ProjectedModel> project(const PartitionOfUnity& part) const;
};

// An occupation vector together with the list of cells that may carry mass.
// `support == nullptr` means "scan all cells".
struct OccupationView {
    std::span<const double> weights;
    const std::vector<long>* support = nullptr;

    double mass() const;

    template <class Fn>
    void for_each_cell(Fn&& fn) const {
        if (support) {
            for (long k : *support)
                if (weights[std::size_t(k)] != 0.0) fn(k, weights[std::size_t(k)]);
        } else {
            for (long k = 0; k < long(weights.size()); ++k)
                if (weights[std::size_t(k)] != 0.0) fn(k, weights[std::size_t(k)]);
        }
    }
};

// Coefficients over (occupation vector, state) for a fixed partition.
class ProjectedModel {
public:
    explicit ProjectedModel(const PartitionOfUnity& part) : part_(part) {}
    virtual ~ProjectedModel() = default;

    const PartitionOfUnity& partition() const { return part_; }
    int dim() const { return part_.dim(); }

    virtual double clock_rate(const OccupationView& z, Point x) const = 0;
    virtual void drift(const OccupationView& z, Point x, std::span<double> out) const = 0;
    virtual void diffusion(const OccupationView& z, Point x, std::span<double> out) const = 0;

protected:
    const PartitionOfUnity& part_;
};

// Projection of a model's coefficients onto a partition: evaluate the
// measure-level coefficients on the lifted occupation vector. Built-in models
// return closed forms over z; everything else falls back to the generic
// lift-and-evaluate composition.
std::unique_ptr<ProjectedModel> project_coefficients(const OsdeModel& model,
                                                     const PartitionOfUnity& part);

// Always the generic lift-and-evaluate composition, regardless of model type.
// Used as the correctness oracle for the closed forms. Keeps a reference to
// `model`; the caller keeps it alive.
std::unique_ptr<ProjectedModel> project_coefficients_generic(const OsdeModel& model,
                                                             const PartitionOfUnity& part);

// ---------------------------------------------------------------------------
// Built-in models

// Mean-attracting linear model (d = 1): unit clock, unit volatility, drift
// beta * (first moment of o - mass(o) * x).
class CranstonLeJanModel : public OsdeModel {
public:
    explicit CranstonLeJanModel(double beta);

    double beta() const { return beta_; }
    int dim() const override { return 1; }
    double clock_rate(const DiscreteMeasure&, Point) const override { return 1.0; }
    void drift(const DiscreteMeasure& o, Point x, std::span<double> out) const override;
    void diffusion(const DiscreteMeasure&, Point, std::span<double> out) const override;
    CoefficientBounds bounds() const override;
    bool has_exact_solution() const override { return true; }
    std::unique_ptr<ProjectedModel> project(const PartitionOfUnity& part) const override;

private:
    double beta_;
};

// Smoothed self-interacting motion in R^d: unit clock, identity volatility,
// drift beta * integral of phi_eps(y - x) do(y) with
// phi_eps(v) = v / sqrt(eps + |v|^2).
class RaimondModel : public OsdeModel {
public:
    RaimondModel(double beta, double eps_reg, int dim);

    double beta() const { return beta_; }
    double eps_reg() const { return eps_; }
    int dim() const override { return dim_; }
    double clock_rate(const DiscreteMeasure&, Point) const override { return 1.0; }
    void drift(const DiscreteMeasure& o, Point x, std::span<double> out) const override;
    void diffusion(const DiscreteMeasure&, Point, std::span<double> out) const override;
    CoefficientBounds bounds() const override;
    std::unique_ptr<ProjectedModel> project(const PartitionOfUnity& part) const override;

private:
    double beta_;
    double eps_;
    int dim_;
};

// Parameters of the local-occupied-volatility price model. The smile is
// v_loc(x) = alpha*(x/x0 - 1)^2 + beta*(x/x0 - 1) + gamma with minimum
// v_min = gamma - beta^2/(4 alpha); the occupied adjustment is
// l(y) = delta * tanh((y - 1)/epsilon).
struct LovParams {
    double alpha;
    double beta;
    double gamma;
    double delta;
    double epsilon;
    double kappa; // clock sensitivity to accumulated mass
    double x0;    // smile anchor (initial price scale)

    double v_min() const { return gamma - beta * beta / (4.0 * alpha); }
    // Throws invalid_argument naming the offending field.
    void validate() const;
};

// Local occupied volatility model (d = 1): zero drift, clock rate
// 1 + kappa * mass(o), volatility
// x * sqrt(v_loc(x) + mass-average of l(y/x) over o).
class LovModel : public OsdeModel {
public:
    explicit LovModel(const LovParams& params);

    const LovParams& params() const { return params_; }
    int dim() const override { return 1; }
    double clock_rate(const DiscreteMeasure& o, Point) const override;
    void drift(const DiscreteMeasure&, Point, std::span<double> out) const override;
    void diffusion(const DiscreteMeasure& o, Point x, std::span<double> out) const override;
    std::unique_ptr<ProjectedModel> project(const PartitionOfUnity& part) const override;

    double local_variance(double x) const;
    double occupied_variance(double x, double mass, double mean_l) const;

private:
    double variance(const DiscreteMeasure& o, double x) const;
    LovParams params_;
};

std::unique_ptr<OsdeModel> cranston_le_jan(double beta);
std::unique_ptr<OsdeModel> raimond(double beta, double eps_reg, int dim);
std::unique_ptr<OsdeModel> lov(const LovParams& params);

} // namespace occusim
