#include "occusim/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "occusim/rng.hpp"

namespace occusim {

namespace {

// ---------------------------------------------------------------------------
// Shared experiment plumbing

struct KLevel {
    std::unique_ptr<PartitionOfUnity> part;
    std::unique_ptr<ProjectedModel> model;
    std::unique_ptr<PartitionPairingTable> table;
};

KLevel make_level(const OsdeModel& model, double radius, int bins, const SeparatingFamily* fam) {
    KLevel lv;
    lv.part = std::make_unique<PartitionOfUnity>(model.dim(), radius, bins);
    lv.model = project_coefficients(model, *lv.part);
    if (fam) lv.table = std::make_unique<PartitionPairingTable>(*lv.part, *fam);
    return lv;
}

void validate_k_list(std::span<const int> k_list) {
    if (k_list.empty()) throw std::invalid_argument("experiment: k_list must not be empty");
    for (std::size_t i = 0; i < k_list.size(); ++i) {
        if (k_list[i] < 1) throw std::invalid_argument("experiment: k_list entries must be >= 1");
        if (i > 0 && k_list[i] <= k_list[i - 1])
            throw std::invalid_argument("experiment: k_list must be strictly ascending");
    }
}

// Fixed-order compensated mean over the included paths of a per-path column.
double included_mean(std::span<const double> column, std::span<const long> include) {
    CompensatedSum acc;
    for (long j : include) acc.add(column[std::size_t(j)]);
    return include.empty() ? 0.0 : acc.value() / double(include.size());
}

double sq(double v) { return v * v; }

// ---------------------------------------------------------------------------
// Strong-error experiment

struct StrongContext {
    const OsdeModel* base = nullptr;
    const TimeGrid* grid = nullptr;
    const StrongErrorOptions* opt = nullptr;
    int dim = 0;
    int jf = 0;
    std::unique_ptr<SeparatingFamily> fam;
    std::vector<KLevel> levels;
    KLevel ref_level;                    // high-k reference
    std::unique_ptr<KernelTable> ktable; // exact-oracle reference
};

struct StrongSlots {
    long levels = 0;
    std::vector<double> sup_state_sq, sup_occ_sq, term_state_sq, term_occ_sq;
    std::vector<double> exterior;
    std::vector<unsigned char> truncated;
    std::vector<unsigned char> excluded;

    explicit StrongSlots(long paths, long levels_) : levels(levels_) {
        const std::size_t n = std::size_t(paths) * levels_;
        sup_state_sq.assign(n, 0.0);
        sup_occ_sq.assign(n, 0.0);
        term_state_sq.assign(n, 0.0);
        term_occ_sq.assign(n, 0.0);
        exterior.assign(n, 0.0);
        truncated.assign(n, 0);
        excluded.assign(std::size_t(paths), 0);
    }
    std::size_t at(long path, long level) const { return std::size_t(path) * levels + level; }
};

struct StrongWorkspace {
    BrownianPath noise;
    SimulatedPath sp;
    SimulatedPath refsp;
    std::vector<double> ref_states; // oracle reference trajectory
    std::vector<double> ref_pairs;  // oracle reference occupation pairings
    std::vector<double> gbuf;
};

StrongContext build_strong_context(const OsdeModel& model, const TimeGrid& grid,
                                   const StrongErrorOptions& opt) {
    validate_k_list(opt.k_list);
    if (opt.paths < 1) throw std::invalid_argument("strong_error_experiment: paths must be >= 1");
    if (!(opt.radius > 0.0))
        throw std::invalid_argument("strong_error_experiment: radius must be > 0");
    if (opt.family_truncation < 1)
        throw std::invalid_argument("strong_error_experiment: family_truncation must be >= 1");
    if (int(opt.x0.size()) != model.dim())
        throw std::invalid_argument("strong_error_experiment: x0 dimension mismatch");
    if (opt.reference == ReferenceKind::exact_oracle) {
        if (!model.has_exact_solution())
            throw std::invalid_argument(
                "strong_error_experiment: model has no exact solution; use a high-k reference");
        if (model.dim() != 1)
            throw std::invalid_argument("strong_error_experiment: exact oracle requires d = 1");
    } else {
        if (opt.reference_bins <= opt.k_list.back())
            throw std::invalid_argument(
                "strong_error_experiment: reference_bins must exceed max(k_list)");
    }

    StrongContext ctx;
    ctx.base = &model;
    ctx.grid = &grid;
    ctx.opt = &opt;
    ctx.dim = model.dim();
    ctx.fam = std::make_unique<SeparatingFamily>(model.dim(), opt.family_truncation);
    ctx.jf = ctx.fam->size();
    for (int k : opt.k_list) ctx.levels.push_back(make_level(model, opt.radius, k, ctx.fam.get()));
    if (opt.reference == ReferenceKind::high_k) {
        ctx.ref_level = make_level(model, opt.radius, opt.reference_bins, ctx.fam.get());
    } else {
        const auto* clj = dynamic_cast<const CranstonLeJanModel*>(&model);
        if (!clj)
            throw std::invalid_argument(
                "strong_error_experiment: exact oracle available only for the mean-attracting "
                "linear model");
        ctx.ktable = std::make_unique<KernelTable>(
            VolterraKernel(clj->beta(), opt.oracle_resolution), grid, opt.threads);
    }
    return ctx;
}

// Simulates one coupled path family (reference + every K) and fills the slots.
void strong_path(long path, const StrongContext& ctx, StrongWorkspace& w, StrongSlots& slots) {
    const TimeGrid& grid = *ctx.grid;
    const StrongErrorOptions& opt = *ctx.opt;
    const int N = grid.steps;
    const int d = ctx.dim;
    const int jf = ctx.jf;

    generate_brownian_into(w.noise, opt.seed, std::uint64_t(path), grid, d);

    const double* ref_x = nullptr;
    const double* ref_p = nullptr;
    if (opt.reference == ReferenceKind::exact_oracle) {
        w.ref_states.resize(std::size_t(N) + 1);
        exact_path_states(*ctx.ktable, opt.x0[0], w.noise, w.ref_states);
        // Occupation reference: exact atoms dt * delta_{X_{t_i}}, paired with
        // the family directly (no projection on the reference side).
        w.ref_pairs.assign(std::size_t(N + 1) * jf, 0.0);
        w.gbuf.resize(std::size_t(jf));
        const double dt = grid.dt();
        for (int n = 1; n <= N; ++n) {
            ctx.fam->eval_all({&w.ref_states[std::size_t(n) - 1], 1}, w.gbuf);
            const double* prev = w.ref_pairs.data() + std::size_t(n - 1) * jf;
            double* cur = w.ref_pairs.data() + std::size_t(n) * jf;
            for (int q = 0; q < jf; ++q) cur[q] = prev[q] + dt * w.gbuf[std::size_t(q)];
        }
        ref_x = w.ref_states.data();
        ref_p = w.ref_pairs.data();
    } else {
        EulerOptions ro;
        ro.record_states = true;
        ro.pairings = ctx.ref_level.table.get();
        ro.stop_radius = opt.stop_radius;
        if (euler_maruyama_nothrow(*ctx.ref_level.model, grid, w.noise, opt.x0, {}, ro, w.refsp) >= 0) {
            slots.excluded[std::size_t(path)] = 1;
            return;
        }
        ref_x = w.refsp.states.data();
        ref_p = w.refsp.pairings.data();
    }

    for (long q = 0; q < long(ctx.levels.size()); ++q) {
        const KLevel& lv = ctx.levels[std::size_t(q)];
        EulerOptions eo;
        eo.record_states = true;
        eo.pairings = lv.table.get();
        eo.stop_radius = opt.stop_radius;
        if (euler_maruyama_nothrow(*lv.model, grid, w.noise, opt.x0, {}, eo, w.sp) >= 0) {
            slots.excluded[std::size_t(path)] = 1;
            return;
        }

        double sup_state = 0.0, sup_occ = 0.0, term_state = 0.0, term_occ = 0.0;
        for (int n = 0; n <= N; ++n) {
            double dx_sq = 0.0;
            for (int i = 0; i < d; ++i)
                dx_sq += sq(ref_x[std::size_t(n) * d + i] - w.sp.states[std::size_t(n) * d + i]);
            double dp_sq = 0.0;
            const double* a = ref_p + std::size_t(n) * jf;
            const double* b = w.sp.pairings.data() + std::size_t(n) * jf;
            for (int i = 0; i < jf; ++i) dp_sq += sq(a[i] - b[i]);
            sup_state = std::max(sup_state, dx_sq);
            sup_occ = std::max(sup_occ, dp_sq);
            if (n == N) {
                term_state = dx_sq;
                term_occ = dp_sq;
            }
        }

        const std::size_t slot = slots.at(path, q);
        slots.sup_state_sq[slot] = sup_state;
        slots.sup_occ_sq[slot] = sup_occ;
        slots.term_state_sq[slot] = term_state;
        slots.term_occ_sq[slot] = term_occ;
        const double mass = w.sp.mass();
        slots.exterior[slot] = mass > 0.0 ? w.sp.exterior_mass() / mass : 0.0;
        slots.truncated[slot] = w.sp.truncated ? 1 : 0;
    }
}

// Bootstrap standard errors of sqrt(mean) statistics, resampling all columns
// jointly. Deterministic: indices come from the counter-based generator.
std::vector<double> bootstrap_rms_std_errors(const std::vector<std::span<const double>>& columns,
                                             std::span<const long> include, std::uint64_t seed,
                                             int resamples) {
    const std::size_t ncol = columns.size();
    const long n = long(include.size());
    std::vector<double> mean_acc(ncol, 0.0), sq_acc(ncol, 0.0), resample_sum(ncol);
    if (n == 0 || resamples < 2) return std::vector<double>(ncol, 0.0);
    for (int b = 0; b < resamples; ++b) {
        std::fill(resample_sum.begin(), resample_sum.end(), 0.0);
        for (long i = 0; i < n; ++i) {
            const long pick =
                include[std::size_t(rng::uniform_index(seed, std::uint64_t(b), std::uint32_t(i),
                                                       std::uint64_t(n)))];
            for (std::size_t c = 0; c < ncol; ++c)
                resample_sum[c] += columns[c][std::size_t(pick)];
        }
        for (std::size_t c = 0; c < ncol; ++c) {
            const double err = std::sqrt(resample_sum[c] / double(n));
            mean_acc[c] += err;
            sq_acc[c] += err * err;
        }
    }
    std::vector<double> out(ncol);
    for (std::size_t c = 0; c < ncol; ++c) {
        const double m = mean_acc[c] / resamples;
        const double var = std::max(0.0, (sq_acc[c] - resamples * m * m) / (resamples - 1));
        out[c] = std::sqrt(var);
    }
    return out;
}

bool monotone_within_noise(const std::vector<ErrorRow>& rows, bool occ) {
    for (std::size_t q = 1; q < rows.size(); ++q) {
        const double prev = occ ? rows[q - 1].occ_error : rows[q - 1].state_error;
        const double cur = occ ? rows[q].occ_error : rows[q].state_error;
        const double se_prev = occ ? rows[q - 1].occ_std_error : rows[q - 1].state_std_error;
        const double se_cur = occ ? rows[q].occ_std_error : rows[q].state_std_error;
        if (cur - prev > 3.0 * std::sqrt(sq(se_prev) + sq(se_cur))) return false;
    }
    return true;
}

ErrorTable reduce_strong(const StrongContext& ctx, const StrongSlots& slots) {
    const StrongErrorOptions& opt = *ctx.opt;
    const long paths = opt.paths;
    const long levels = long(ctx.levels.size());

    std::vector<long> include;
    include.reserve(std::size_t(paths));
    for (long j = 0; j < paths; ++j)
        if (!slots.excluded[std::size_t(j)]) include.push_back(j);
    const long excluded = paths - long(include.size());
    if (double(excluded) > opt.max_excluded_fraction * double(paths) || include.empty()) {
        long first = 0;
        while (first < paths && !slots.excluded[std::size_t(first)]) ++first;
        throw simulation_diverged(first, -1);
    }

    ErrorTable table;
    table.paths = long(include.size());
    table.excluded = excluded;
    table.steps = ctx.grid->steps;
    table.seed = opt.seed;
    table.reference = opt.reference == ReferenceKind::exact_oracle
                          ? "exact-oracle"
                          : "high-k:" + std::to_string(opt.reference_bins);

    // Column views per level for the joint bootstrap: 4 error columns each.
    std::vector<std::vector<double>> cols;
    std::vector<std::span<const double>> col_views;
    for (long q = 0; q < levels; ++q) {
        for (const auto* src :
             {&slots.sup_state_sq, &slots.sup_occ_sq, &slots.term_state_sq, &slots.term_occ_sq}) {
            std::vector<double> col(std::size_t(paths), 0.0);
            for (long j = 0; j < paths; ++j) col[std::size_t(j)] = (*src)[slots.at(j, q)];
            cols.push_back(std::move(col));
        }
    }
    for (const auto& c : cols) col_views.emplace_back(c);
    const auto ses =
        bootstrap_rms_std_errors(col_views, include, opt.seed, opt.bootstrap_resamples);

    for (long q = 0; q < levels; ++q) {
        ErrorRow row;
        row.bins = opt.k_list[std::size_t(q)];
        row.state_error = std::sqrt(included_mean(cols[std::size_t(4 * q + 0)], include));
        row.occ_error = std::sqrt(included_mean(cols[std::size_t(4 * q + 1)], include));
        row.state_error_terminal = std::sqrt(included_mean(cols[std::size_t(4 * q + 2)], include));
        row.occ_error_terminal = std::sqrt(included_mean(cols[std::size_t(4 * q + 3)], include));
        row.state_std_error = ses[std::size_t(4 * q + 0)];
        row.occ_std_error = ses[std::size_t(4 * q + 1)];
        row.state_terminal_std_error = ses[std::size_t(4 * q + 2)];
        row.occ_terminal_std_error = ses[std::size_t(4 * q + 3)];

        CompensatedSum ext;
        long trunc = 0;
        for (long j : include) {
            ext.add(slots.exterior[slots.at(j, q)]);
            trunc += slots.truncated[slots.at(j, q)];
        }
        row.exterior_mass_fraction = ext.value() / double(include.size());
        row.truncation_fraction = double(trunc) / double(include.size());
        table.rows.push_back(row);
    }

    table.state_monotone_ok = monotone_within_noise(table.rows, false);
    table.occ_monotone_ok = monotone_within_noise(table.rows, true);
    return table;
}

ErrorTable run_strong(const OsdeModel& model, const TimeGrid& grid,
                      const StrongErrorOptions& opt, bool parallel) {
    const StrongContext ctx = build_strong_context(model, grid, opt);
    StrongSlots slots(opt.paths, long(ctx.levels.size()));

    if (parallel) {
        const int nt = resolve_threads(opt.threads);
#pragma omp parallel num_threads(nt)
        {
            StrongWorkspace w;
#pragma omp for schedule(dynamic, 4)
            for (long j = 0; j < opt.paths; ++j) strong_path(j, ctx, w, slots);
        }
    } else {
        StrongWorkspace w;
        for (long j = 0; j < opt.paths; ++j) strong_path(j, ctx, w, slots);
    }
    return reduce_strong(ctx, slots);
}

} // namespace

ErrorTable strong_error_experiment(const OsdeModel& model, const TimeGrid& grid,
                                   const StrongErrorOptions& options) {
    return run_strong(model, grid, options, true);
}

ErrorTable strong_error_experiment_serial(const OsdeModel& model, const TimeGrid& grid,
                                          const StrongErrorOptions& options) {
    return run_strong(model, grid, options, false);
}

// ---------------------------------------------------------------------------
// Rate fitting

RateFit fit_rate(std::span<const double> bins, std::span<const double> errors) {
    if (bins.size() != errors.size())
        throw std::invalid_argument("fit_rate: bins/errors length mismatch");
    std::vector<double> lx, ly;
    double kmin = 0.0, kmax = 0.0;
    for (std::size_t i = 0; i < bins.size(); ++i) {
        if (!(errors[i] > 0.0) || !(bins[i] > 0.0)) continue;
        lx.push_back(std::log(bins[i]));
        ly.push_back(std::log(errors[i]));
        kmin = kmin == 0.0 ? bins[i] : std::min(kmin, bins[i]);
        kmax = std::max(kmax, bins[i]);
    }
    const int n = int(lx.size());
    if (n < 3) throw std::invalid_argument("fit_rate: fewer than 3 positive error points");

    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
        mx += lx[std::size_t(i)];
        my += ly[std::size_t(i)];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        const double dx = lx[std::size_t(i)] - mx;
        const double dy = ly[std::size_t(i)] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("fit_rate: bins are not distinct");

    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    const double ss_res = std::max(0.0, syy - fit.slope * sxy);
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    fit.points = n;
    fit.bins_min = kmin;
    fit.bins_max = kmax;
    return fit;
}

RateFit fit_rate(const ErrorTable& table, ErrorColumn column) {
    std::vector<double> bins, errors;
    for (const ErrorRow& row : table.rows) {
        bins.push_back(double(row.bins));
        switch (column) {
            case ErrorColumn::state: errors.push_back(row.state_error); break;
            case ErrorColumn::occupation: errors.push_back(row.occ_error); break;
            case ErrorColumn::state_terminal: errors.push_back(row.state_error_terminal); break;
            case ErrorColumn::occupation_terminal: errors.push_back(row.occ_error_terminal); break;
        }
    }
    return fit_rate(bins, errors);
}

// ---------------------------------------------------------------------------
// Payoffs and weak-error experiment

namespace {

double terminal_barycenter(const SimulatedPath& path, const PartitionOfUnity& part) {
    const DiscreteMeasure o = lift(path.occupation, part);
    const double mass = o.mass();
    if (!(mass > 0.0))
        throw std::invalid_argument("asian_floating_payoff: zero occupation mass");
    return first_moment(o)[0] / mass;
}

} // namespace

double asian_floating_payoff(const SimulatedPath& path, const PartitionOfUnity& part) {
    if (path.dim != 1 || part.dim() != 1)
        throw std::invalid_argument("asian_floating_payoff: requires d = 1");
    const double bary = terminal_barycenter(path, part);
    return std::max(0.0, path.final_state[0] - bary);
}

namespace {

struct WeakContext {
    const TimeGrid* grid = nullptr;
    const WeakErrorOptions* opt = nullptr;
    const PathPayoff* payoff = nullptr;
    std::vector<KLevel> levels; // last entry is the reference
};

struct WeakSlots {
    long levels = 0; // including the reference column (last)
    std::vector<double> payoff;
    std::vector<double> dist; // per non-reference level: |dX_T| + |d barycenter|
    std::vector<unsigned char> excluded;

    WeakSlots(long paths, long levels_) : levels(levels_) {
        payoff.assign(std::size_t(paths) * levels_, 0.0);
        dist.assign(std::size_t(paths) * (levels_ - 1), 0.0);
        excluded.assign(std::size_t(paths), 0);
    }
};

struct WeakWorkspace {
    BrownianPath noise;
    SimulatedPath sp;
};

WeakContext build_weak_context(const OsdeModel& model, const PathPayoff& payoff,
                               const TimeGrid& grid, const WeakErrorOptions& opt) {
    validate_k_list(opt.k_list);
    if (opt.paths < 1) throw std::invalid_argument("weak_error_experiment: paths must be >= 1");
    if (!(opt.radius > 0.0))
        throw std::invalid_argument("weak_error_experiment: radius must be > 0");
    if (opt.reference_bins <= opt.k_list.back())
        throw std::invalid_argument("weak_error_experiment: reference_bins must exceed max(k_list)");
    if (int(opt.x0.size()) != model.dim())
        throw std::invalid_argument("weak_error_experiment: x0 dimension mismatch");
    if (!payoff) throw std::invalid_argument("weak_error_experiment: payoff must be callable");

    WeakContext ctx;
    ctx.grid = &grid;
    ctx.opt = &opt;
    ctx.payoff = &payoff;
    for (int k : opt.k_list) ctx.levels.push_back(make_level(model, opt.radius, k, nullptr));
    ctx.levels.push_back(make_level(model, opt.radius, opt.reference_bins, nullptr));
    return ctx;
}

void weak_path(long path, const WeakContext& ctx, WeakWorkspace& w, WeakSlots& slots) {
    const WeakErrorOptions& opt = *ctx.opt;
    const long nlev = long(ctx.levels.size());
    generate_brownian_into(w.noise, opt.seed, std::uint64_t(path), *ctx.grid,
                           ctx.levels[0].model->dim());

    EulerOptions eo;
    eo.record_states = false;

    // Reference level last, simulated first so its terminal data can couple
    // with every K.
    double ref_payoff = 0.0, ref_xt = 0.0, ref_bary = 0.0;
    try {
        const KLevel& ref = ctx.levels[std::size_t(nlev - 1)];
        if (euler_maruyama_nothrow(*ref.model, *ctx.grid, w.noise, opt.x0, {}, eo, w.sp) >= 0) {
            slots.excluded[std::size_t(path)] = 1;
            return;
        }
        ref_xt = w.sp.final_state[0];
        ref_bary = terminal_barycenter(w.sp, *ref.part);
        ref_payoff = (*ctx.payoff)(w.sp, *ref.part);
        slots.payoff[std::size_t(path) * nlev + std::size_t(nlev - 1)] = ref_payoff;

        for (long q = 0; q < nlev - 1; ++q) {
            const KLevel& lv = ctx.levels[std::size_t(q)];
            if (euler_maruyama_nothrow(*lv.model, *ctx.grid, w.noise, opt.x0, {}, eo, w.sp) >= 0) {
                slots.excluded[std::size_t(path)] = 1;
                return;
            }
            slots.payoff[std::size_t(path) * nlev + std::size_t(q)] = (*ctx.payoff)(w.sp, *lv.part);
            const double bary = terminal_barycenter(w.sp, *lv.part);
            slots.dist[std::size_t(path) * (nlev - 1) + std::size_t(q)] =
                std::abs(w.sp.final_state[0] - ref_xt) + std::abs(bary - ref_bary);
        }
    } catch (const std::exception&) {
        // payoff preconditions violated on this sample — treat as divergence
        slots.excluded[std::size_t(path)] = 1;
    }
}

PriceTable reduce_weak(const WeakContext& ctx, const WeakSlots& slots) {
    const WeakErrorOptions& opt = *ctx.opt;
    const long paths = opt.paths;
    const long nlev = slots.levels;

    std::vector<long> include;
    for (long j = 0; j < paths; ++j)
        if (!slots.excluded[std::size_t(j)]) include.push_back(j);
    const long excluded = paths - long(include.size());
    if (double(excluded) > opt.max_excluded_fraction * double(paths) || include.size() < 2) {
        long first = 0;
        while (first < paths && !slots.excluded[std::size_t(first)]) ++first;
        throw simulation_diverged(first, -1);
    }
    const long n = long(include.size());

    auto estimate = [&](long level, int bins) {
        PriceEstimate est;
        est.bins = bins;
        est.paths = n;
        est.payoff_id = opt.payoff_id;
        CompensatedSum sum;
        for (long j : include) sum.add(slots.payoff[std::size_t(j) * nlev + std::size_t(level)]);
        est.price = sum.value() / double(n);
        CompensatedSum var;
        for (long j : include)
            var.add(sq(slots.payoff[std::size_t(j) * nlev + std::size_t(level)] - est.price));
        est.std_error = std::sqrt(std::max(0.0, var.value()) / (double(n) * double(n - 1)));
        return est;
    };

    PriceTable table;
    table.paths = n;
    table.excluded = excluded;
    table.steps = ctx.grid->steps;
    table.seed = opt.seed;
    table.reference.estimate = estimate(nlev - 1, opt.reference_bins);

    for (long q = 0; q < nlev - 1; ++q) {
        PriceRow row;
        row.estimate = estimate(q, opt.k_list[std::size_t(q)]);
        row.weak_error = std::abs(table.reference.estimate.price - row.estimate.price);
        CompensatedSum dsq;
        for (long j : include) dsq.add(sq(slots.dist[std::size_t(j) * (nlev - 1) + std::size_t(q)]));
        row.coupled_strong_error = std::sqrt(dsq.value() / double(n));
        table.rows.push_back(row);
    }
    return table;
}

PriceTable run_weak(const OsdeModel& model, const PathPayoff& payoff, const TimeGrid& grid,
                    const WeakErrorOptions& opt, bool parallel) {
    const WeakContext ctx = build_weak_context(model, payoff, grid, opt);
    WeakSlots slots(opt.paths, long(ctx.levels.size()));

    if (parallel) {
        const int nt = resolve_threads(opt.threads);
#pragma omp parallel num_threads(nt)
        {
            WeakWorkspace w;
#pragma omp for schedule(dynamic, 4)
            for (long j = 0; j < opt.paths; ++j) weak_path(j, ctx, w, slots);
        }
    } else {
        WeakWorkspace w;
        for (long j = 0; j < opt.paths; ++j) weak_path(j, ctx, w, slots);
    }
    return reduce_weak(ctx, slots);
}

} // namespace

PriceTable weak_error_experiment(const OsdeModel& model, const PathPayoff& payoff,
                                 const TimeGrid& grid, const WeakErrorOptions& options) {
    return run_weak(model, payoff, grid, options, true);
}

PriceTable weak_error_experiment_serial(const OsdeModel& model, const PathPayoff& payoff,
                                        const TimeGrid& grid, const WeakErrorOptions& options) {
    return run_weak(model, payoff, grid, options, false);
}

// ---------------------------------------------------------------------------
// Exit-time diagnostics

ExitDiagnostics exit_time_diagnostics(std::span<const SimulatedPath> paths,
                                      std::span<const double> radii) {
    if (paths.empty()) throw std::invalid_argument("exit_time_diagnostics: no paths");
    if (radii.empty()) throw std::invalid_argument("exit_time_diagnostics: no radii");
    for (const SimulatedPath& p : paths)
        if (p.family_size == 0)
            throw std::invalid_argument(
                "exit_time_diagnostics: paths must be simulated with pairing tracking");

    ExitDiagnostics diag;
    diag.paths = long(paths.size());
    diag.radii.assign(radii.begin(), radii.end());
    std::sort(diag.radii.begin(), diag.radii.end());
    for (double r : diag.radii) {
        long count = 0;
        for (const SimulatedPath& p : paths)
            if (p.sup_joint_norm >= r) ++count;
        diag.exceedance_fraction.push_back(double(count) / double(paths.size()));
    }
    return diag;
}

} // namespace occusim
