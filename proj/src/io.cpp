#include "occusim/io.hpp"

#include <fstream>
#include <stdexcept>

#include "occusim/format.hpp"
#include "occusim/rng.hpp"

namespace occusim {

namespace {

void append_row(std::string& out, std::span<const std::string> cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
    }
    out += '\n';
}

std::string fd(double v) { return format_double(v); }

} // namespace

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string error_table_csv(const ErrorTable& table, bool terminal) {
    std::string out = "K,state_error,occ_error,state_err_stderr,occ_err_stderr\n";
    for (const ErrorRow& r : table.rows) {
        const double se = terminal ? r.state_error_terminal : r.state_error;
        const double oe = terminal ? r.occ_error_terminal : r.occ_error;
        const double ss = terminal ? r.state_terminal_std_error : r.state_std_error;
        const double os = terminal ? r.occ_terminal_std_error : r.occ_std_error;
        append_row(out, std::vector<std::string>{std::to_string(r.bins), fd(se), fd(oe), fd(ss),
                                                 fd(os)});
    }
    return out;
}

std::string diagnostics_csv(const ErrorTable& table) {
    std::string out = "K,exterior_mass_fraction,truncation_fraction,excluded_paths\n";
    for (const ErrorRow& r : table.rows)
        append_row(out,
                   std::vector<std::string>{std::to_string(r.bins), fd(r.exterior_mass_fraction),
                                            fd(r.truncation_fraction),
                                            std::to_string(table.excluded)});
    return out;
}

std::string rate_fit_csv(std::span<const std::pair<std::string, RateFit>> fits) {
    std::string out = "column,slope,intercept,r_squared,points,k_min,k_max\n";
    for (const auto& [name, fit] : fits)
        append_row(out, std::vector<std::string>{name, fd(fit.slope), fd(fit.intercept),
                                                 fd(fit.r_squared), std::to_string(fit.points),
                                                 fd(fit.bins_min), fd(fit.bins_max)});
    return out;
}

std::string price_table_csv(const PriceTable& table) {
    std::string out = "K,price,stderr,ci_low,ci_high,weak_error,coupled_strong_error\n";
    auto row = [&](const PriceEstimate& est, double weak, double coupled) {
        const double h = est.ci_halfwidth();
        append_row(out, std::vector<std::string>{std::to_string(est.bins), fd(est.price),
                                                 fd(est.std_error), fd(est.price - h),
                                                 fd(est.price + h), fd(weak), fd(coupled)});
    };
    for (const PriceRow& r : table.rows) row(r.estimate, r.weak_error, r.coupled_strong_error);
    row(table.reference.estimate, 0.0, 0.0);
    return out;
}

std::string paths_csv(std::span<const SimulatedPath> paths, const TimeGrid& grid, long limit) {
    std::string out = "path_id,step,t";
    int dim = paths.empty() ? 0 : paths[0].dim;
    for (int i = 0; i < dim; ++i) out += ",x_" + std::to_string(i);
    out += '\n';
    const long count = std::min<long>(limit, long(paths.size()));
    for (long p = 0; p < count; ++p) {
        const SimulatedPath& sp = paths[std::size_t(p)];
        if (sp.states.empty()) continue; // simulated without trajectory recording
        for (int n = 0; n <= sp.steps; ++n) {
            out += std::to_string(p) + ',' + std::to_string(n) + ',' + fd(grid.node(n));
            for (int i = 0; i < sp.dim; ++i)
                out += ',' + fd(sp.states[std::size_t(n) * sp.dim + i]);
            out += '\n';
        }
    }
    return out;
}

std::string occupation_csv(std::span<const SimulatedPath> paths, const PartitionOfUnity& part,
                           long limit) {
    std::string out = "path_id,bin";
    for (int i = 0; i < part.dim(); ++i) out += ",center_" + std::to_string(i);
    out += ",weight\n";
    const long count = std::min<long>(limit, long(paths.size()));
    for (long p = 0; p < count; ++p) {
        const SimulatedPath& sp = paths[std::size_t(p)];
        for (long k = 0; k < long(sp.occupation.size()); ++k) {
            const double w = sp.occupation[std::size_t(k)];
            if (w == 0.0) continue;
            out += std::to_string(p) + ',' + std::to_string(k);
            for (double c : part.center(k)) out += ',' + fd(c);
            out += ',' + fd(w) + '\n';
        }
    }
    return out;
}

std::string exit_fractions_csv(const ExitDiagnostics& diag) {
    std::string out = "radius,exceedance_fraction\n";
    for (std::size_t i = 0; i < diag.radii.size(); ++i)
        append_row(out, std::vector<std::string>{fd(diag.radii[i]),
                                                 fd(diag.exceedance_fraction[i])});
    return out;
}

std::string metadata_json(const RunConfig& config, const std::string& version,
                          std::span<const std::string> outputs) {
    std::string s = "{\n";
    s += "  \"tool\": \"occusim\",\n";
    s += "  \"version\": \"" + json_escape(version) + "\",\n";
    s += "  \"rng\": \"" + std::string(rng::kGeneratorId) + "\",\n";
    s += "  \"experiment\": \"" + json_escape(config.experiment) + "\",\n";
    s += "  \"seed\": " + std::to_string(config.seed) + ",\n";
    s += "  \"outputs\": [";
    for (std::size_t i = 0; i < outputs.size(); ++i)
        s += (i ? ", " : "") + ("\"" + json_escape(outputs[i]) + "\"");
    s += "],\n";
    s += "  \"config\": " + config_to_json(config) + "\n";
    s += "}\n";
    return s;
}

std::string converge_gnuplot_script() {
    return R"gp(set datafile separator ","
set logscale xy
set xlabel "K (occupation bins)"
set ylabel "strong error"
set key left bottom
set grid
set terminal pngcairo size 900,600
set output "convergence.png"
plot "error_table.csv" skip 1 using 1:2:4 with yerrorlines title "state error", \
     "error_table.csv" skip 1 using 1:3:5 with yerrorlines title "occupation error"
)gp";
}

std::string price_gnuplot_script() {
    return R"gp(set datafile separator ","
set xlabel "K (occupation bins)"
set key right bottom
set grid
set terminal pngcairo size 900,600
set output "price.png"
set ylabel "price"
plot "price_table.csv" skip 1 using 1:2:4:5 with yerrorbars title "Monte Carlo price"
set output "weak_error.png"
set logscale xy
set ylabel "weak error"
plot "price_table.csv" skip 1 using ($6 > 0 ? $1 : 1/0):6 with linespoints title "weak error"
)gp";
}

} // namespace occusim
