#include "occusim/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <set>

#include "occusim/format.hpp"

namespace occusim {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw config_error("config: " + msg); }

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const bool known =
            std::any_of(allowed.begin(), allowed.end(),
                        [&](const char* k) { return it.key() == k; });
        if (!known) bad("unknown key '" + (path.empty() ? "" : path + ".") + it.key() + "'");
    }
}

double as_double(const json& j, const std::string& path) {
    if (!j.is_number()) bad("field '" + path + "' must be a number");
    return j.get<double>();
}

long as_long(const json& j, const std::string& path) {
    if (!j.is_number_integer()) bad("field '" + path + "' must be an integer");
    return j.get<long>();
}

int as_int(const json& j, const std::string& path) {
    const long v = as_long(j, path);
    if (v < -(1L << 31) || v >= (1L << 31)) bad("field '" + path + "' is out of range");
    return int(v);
}

std::uint64_t as_seed(const json& j, const std::string& path) {
    if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() &&
                                   j.get<long long>() < 0))
        bad("field '" + path + "' must be a nonnegative integer");
    return j.get<std::uint64_t>();
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) bad("field '" + path + "' must be a string");
    return j.get<std::string>();
}

bool as_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) bad("field '" + path + "' must be a boolean");
    return j.get<bool>();
}

std::vector<int> as_int_list(const json& j, const std::string& path) {
    if (!j.is_array()) bad("field '" + path + "' must be an array of integers");
    std::vector<int> out;
    for (const auto& e : j) out.push_back(as_int(e, path + "[]"));
    return out;
}

std::vector<double> as_double_list(const json& j, const std::string& path) {
    if (!j.is_array()) bad("field '" + path + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : j) out.push_back(as_double(e, path + "[]"));
    return out;
}

ModelConfig parse_model(const json& j) {
    if (!j.is_object()) bad("field 'model' must be an object");
    check_keys(j, "model", {"id", "dim", "beta", "eps_reg", "lov"});
    ModelConfig m;
    if (j.contains("id")) m.id = as_string(j.at("id"), "model.id");
    if (j.contains("dim")) m.dim = as_int(j.at("dim"), "model.dim");
    if (j.contains("beta")) m.beta = as_double(j.at("beta"), "model.beta");
    if (j.contains("eps_reg")) m.eps_reg = as_double(j.at("eps_reg"), "model.eps_reg");
    if (j.contains("lov")) {
        const json& l = j.at("lov");
        if (!l.is_object()) bad("field 'model.lov' must be an object");
        check_keys(l, "model.lov",
                   {"alpha", "beta", "gamma", "delta", "epsilon", "kappa", "x0"});
        auto grab = [&](const char* key, double& slot) {
            if (l.contains(key)) slot = as_double(l.at(key), std::string("model.lov.") + key);
        };
        grab("alpha", m.lov.alpha);
        grab("beta", m.lov.beta);
        grab("gamma", m.lov.gamma);
        grab("delta", m.lov.delta);
        grab("epsilon", m.lov.epsilon);
        grab("kappa", m.lov.kappa);
        grab("x0", m.lov.x0);
    }
    return m;
}

RunConfig json_to_config(const json& doc) {
    if (!doc.is_object()) bad("document root must be an object");
    check_keys(doc, "",
               {"experiment", "model", "grid", "partition", "family_truncation", "paths", "seed",
                "payoff", "reference", "x0", "stop_radius", "exit_radii", "threads",
                "sample_paths", "bootstrap_resamples", "max_excluded_fraction", "output_dir",
                "gnuplot", "check"});

    RunConfig c;
    if (doc.contains("experiment")) c.experiment = as_string(doc.at("experiment"), "experiment");
    if (doc.contains("model")) c.model = parse_model(doc.at("model"));
    if (doc.contains("grid")) {
        const json& g = doc.at("grid");
        if (!g.is_object()) bad("field 'grid' must be an object");
        check_keys(g, "grid", {"horizon", "steps"});
        if (g.contains("horizon")) c.horizon = as_double(g.at("horizon"), "grid.horizon");
        if (g.contains("steps")) c.steps = as_int(g.at("steps"), "grid.steps");
    }
    if (doc.contains("partition")) {
        const json& p = doc.at("partition");
        if (!p.is_object()) bad("field 'partition' must be an object");
        check_keys(p, "partition", {"radius", "bins"});
        if (p.contains("radius")) c.radius = as_double(p.at("radius"), "partition.radius");
        if (p.contains("bins")) c.bins = as_int_list(p.at("bins"), "partition.bins");
    }
    if (doc.contains("family_truncation"))
        c.family_truncation = as_int(doc.at("family_truncation"), "family_truncation");
    if (doc.contains("paths")) c.paths = as_long(doc.at("paths"), "paths");
    if (doc.contains("seed")) c.seed = as_seed(doc.at("seed"), "seed");
    if (doc.contains("payoff")) c.payoff = as_string(doc.at("payoff"), "payoff");
    if (doc.contains("reference")) {
        const json& r = doc.at("reference");
        if (!r.is_object()) bad("field 'reference' must be an object");
        check_keys(r, "reference", {"kind", "bins"});
        if (r.contains("kind")) c.reference = as_string(r.at("kind"), "reference.kind");
        if (r.contains("bins")) c.reference_bins = as_int(r.at("bins"), "reference.bins");
    }
    if (doc.contains("x0")) c.x0 = as_double_list(doc.at("x0"), "x0");
    if (doc.contains("stop_radius"))
        c.stop_radius = as_double(doc.at("stop_radius"), "stop_radius");
    if (doc.contains("exit_radii")) c.exit_radii = as_double_list(doc.at("exit_radii"), "exit_radii");
    if (doc.contains("threads")) c.threads = as_int(doc.at("threads"), "threads");
    if (doc.contains("sample_paths")) c.sample_paths = as_long(doc.at("sample_paths"), "sample_paths");
    if (doc.contains("bootstrap_resamples"))
        c.bootstrap_resamples = as_int(doc.at("bootstrap_resamples"), "bootstrap_resamples");
    if (doc.contains("max_excluded_fraction"))
        c.max_excluded_fraction =
            as_double(doc.at("max_excluded_fraction"), "max_excluded_fraction");
    if (doc.contains("output_dir")) c.output_dir = as_string(doc.at("output_dir"), "output_dir");
    if (doc.contains("gnuplot")) c.gnuplot = as_bool(doc.at("gnuplot"), "gnuplot");
    if (doc.contains("check")) {
        const json& k = doc.at("check");
        if (!k.is_object()) bad("field 'check' must be an object");
        check_keys(k, "check", {"slope_min", "slope_max", "columns"});
        if (k.contains("slope_min"))
            c.check_slope_min = as_double(k.at("slope_min"), "check.slope_min");
        if (k.contains("slope_max"))
            c.check_slope_max = as_double(k.at("slope_max"), "check.slope_max");
        if (k.contains("columns")) {
            const json& cols = k.at("columns");
            if (!cols.is_array()) bad("field 'check.columns' must be an array of strings");
            c.check_columns.clear();
            for (const auto& e : cols)
                c.check_columns.push_back(as_string(e, "check.columns[]"));
        }
    }
    return c;
}

void apply_override_on(json& doc, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0)
        bad("override '" + spec + "' must look like key.path=value");
    const std::string path = spec.substr(0, eq);
    const std::string value = spec.substr(eq + 1);

    json parsed = json::parse(value, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) parsed = value; // bare words are string values

    json* cur = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key =
            path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) bad("override '" + spec + "' has an empty path segment");
        if (cur->is_null()) *cur = json::object();
        if (!cur->is_object()) bad("override '" + spec + "' descends into a non-object");
        if (dot == std::string::npos) {
            (*cur)[key] = parsed;
            return;
        }
        cur = &(*cur)[key];
        start = dot + 1;
    }
}

} // namespace

std::unique_ptr<OsdeModel> ModelConfig::build() const {
    if (id == "cranston-le-jan") {
        if (dim != 1) bad("model.dim must be 1 for cranston-le-jan");
        return cranston_le_jan(beta);
    }
    if (id == "raimond") return raimond(beta, eps_reg, dim);
    if (id == "lov") {
        if (dim != 1) bad("model.dim must be 1 for lov");
        return occusim::lov(lov);
    }
    bad("unknown model.id '" + id + "'");
}

std::vector<double> RunConfig::start_state() const {
    if (!x0.empty()) return x0;
    if (model.id == "lov") return {model.lov.x0};
    return std::vector<double>(std::size_t(std::max(1, model.dim)), 0.0);
}

RunConfig config_from_json(const std::string& text, std::span<const std::string> overrides) {
    json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) bad("document is not valid JSON");
    for (const std::string& spec : overrides) apply_override_on(doc, spec);
    RunConfig c = json_to_config(doc);
    validate_config(c);
    return c;
}

std::vector<std::string> preset_names() {
    return {"cranston-fig5", "raimond-fig8", "lov-fig12", "asian-fig13"};
}

std::string preset_json(const std::string& name) {
    if (name == "cranston-fig5")
        return R"({
  "experiment": "converge",
  "model": {"id": "cranston-le-jan", "beta": 5.0},
  "grid": {"horizon": 1.0, "steps": 512},
  "partition": {"radius": 2.0, "bins": [4, 8, 16, 32, 64]},
  "family_truncation": 64,
  "paths": 8192,
  "seed": 20240901,
  "reference": {"kind": "exact-oracle"},
  "x0": [0.0],
  "output_dir": "out-cranston-fig5",
  "check": {"slope_min": -1.3, "slope_max": -0.7, "columns": ["state", "occupation"]}
})";
    if (name == "raimond-fig8")
        return R"({
  "experiment": "converge",
  "model": {"id": "raimond", "dim": 2, "beta": 5.0, "eps_reg": 0.01},
  "grid": {"horizon": 1.0, "steps": 512},
  "partition": {"radius": 2.0, "bins": [5, 10, 20, 40]},
  "family_truncation": 64,
  "paths": 2048,
  "seed": 20240902,
  "reference": {"kind": "high-k", "bins": 75},
  "x0": [0.0, 0.0],
  "output_dir": "out-raimond-fig8",
  "check": {"slope_min": -1.3, "slope_max": -0.6, "columns": ["state"]}
})";
    if (name == "lov-fig12")
        return R"({
  "experiment": "converge",
  "model": {"id": "lov",
            "lov": {"alpha": 1.0, "beta": -0.1, "gamma": 0.01, "delta": 0.00375,
                    "epsilon": 0.1, "kappa": 0.0, "x0": 100.0}},
  "grid": {"horizon": 1.0, "steps": 512},
  "partition": {"radius": 200.0, "bins": [5, 10, 20, 40, 60]},
  "family_truncation": 64,
  "paths": 4096,
  "seed": 20240903,
  "reference": {"kind": "high-k", "bins": 100},
  "x0": [100.0],
  "output_dir": "out-lov-fig12",
  "check": {"slope_min": -1.4, "slope_max": -0.6, "columns": ["state"]}
})";
    if (name == "asian-fig13")
        return R"({
  "experiment": "price",
  "model": {"id": "lov",
            "lov": {"alpha": 1.0, "beta": -0.1, "gamma": 0.01, "delta": 0.00375,
                    "epsilon": 0.1, "kappa": 0.0, "x0": 100.0}},
  "grid": {"horizon": 1.0, "steps": 512},
  "partition": {"radius": 200.0, "bins": [5, 10, 20, 40, 60]},
  "paths": 16384,
  "seed": 20240904,
  "payoff": "asian-floating",
  "reference": {"kind": "high-k", "bins": 100},
  "x0": [100.0],
  "output_dir": "out-asian-fig13",
  "check": {"slope_min": -1.4, "slope_max": -0.6, "columns": ["weak"]}
})";
    bad("unknown preset '" + name + "'");
}

void apply_fast_mode(RunConfig& config) {
    config.paths = std::max<long>(256, config.paths / 4);
    config.check_slope_min -= 0.1;
    config.check_slope_max += 0.1;
}

void validate_config(const RunConfig& c) {
    if (c.experiment != "simulate" && c.experiment != "converge" && c.experiment != "price")
        bad("experiment must be one of simulate|converge|price, got '" + c.experiment + "'");

    std::unique_ptr<OsdeModel> model;
    try {
        model = c.model.build();
    } catch (const std::invalid_argument& e) {
        bad(std::string("model: ") + e.what());
    }

    if (!(c.horizon > 0.0) || !std::isfinite(c.horizon)) bad("grid.horizon must be positive");
    if (c.steps < 1) bad("grid.steps must be >= 1");
    if (!(c.radius > 0.0) || !std::isfinite(c.radius)) bad("partition.radius must be positive");

    if (c.bins.empty()) bad("partition.bins must not be empty");
    for (std::size_t i = 0; i < c.bins.size(); ++i) {
        if (c.bins[i] < 1) bad("partition.bins entries must be >= 1");
        if (i > 0 && c.bins[i] <= c.bins[i - 1]) bad("partition.bins must be strictly ascending");
    }
    if (c.experiment != "simulate" && c.bins.size() < 3)
        bad("experiment '" + c.experiment + "' needs at least 3 partition.bins levels");

    if (c.family_truncation < 1 || c.family_truncation > 255)
        bad("family_truncation must be in [1, 255]");
    if (c.paths < 1) bad("paths must be >= 1");

    if (c.reference != "exact-oracle" && c.reference != "high-k")
        bad("reference.kind must be exact-oracle or high-k, got '" + c.reference + "'");
    if (c.reference == "exact-oracle" && !model->has_exact_solution())
        bad("reference.kind exact-oracle requires a model with a closed-form solution");
    if (c.experiment == "price" && c.reference != "high-k")
        bad("experiment price requires reference.kind high-k");
    if (c.reference == "high-k" && c.experiment != "simulate" &&
        c.reference_bins <= c.bins.back())
        bad("reference.bins must exceed the largest partition.bins entry");

    if (!c.x0.empty() && int(c.x0.size()) != model->dim())
        bad("x0 must have " + std::to_string(model->dim()) + " components for this model");
    for (double v : c.x0)
        if (!std::isfinite(v)) bad("x0 components must be finite");

    if (c.experiment == "price") {
        if (c.payoff != "asian-floating") bad("unknown payoff '" + c.payoff + "'");
        if (model->dim() != 1) bad("payoff asian-floating requires a one-dimensional model");
    }

    if (c.stop_radius < 0.0 || !std::isfinite(c.stop_radius))
        bad("stop_radius must be >= 0 and finite");
    for (double r : c.exit_radii)
        if (!(r > 0.0) || !std::isfinite(r)) bad("exit_radii entries must be positive");
    if (c.threads < 0) bad("threads must be >= 0");
    if (c.sample_paths < 0) bad("sample_paths must be >= 0");
    if (c.bootstrap_resamples < 2) bad("bootstrap_resamples must be >= 2");
    if (!(c.max_excluded_fraction >= 0.0) || c.max_excluded_fraction >= 1.0)
        bad("max_excluded_fraction must be in [0, 1)");
    if (c.output_dir.empty()) bad("output_dir must not be empty");

    if (!(c.check_slope_min <= c.check_slope_max))
        bad("check.slope_min must not exceed check.slope_max");
    for (const std::string& col : c.check_columns)
        if (col != "state" && col != "occupation" && col != "state_terminal" &&
            col != "occupation_terminal" && col != "weak")
            bad("check.columns entry '" + col +
                "' must be one of state|occupation|state_terminal|occupation_terminal|weak");
}

std::string config_to_json(const RunConfig& c) {
    std::string s;
    auto kv = [&](const char* key, const std::string& val, bool last = false) {
        s += "    \"";
        s += key;
        s += "\": ";
        s += val;
        s += last ? "\n" : ",\n";
    };
    auto str = [](const std::string& v) { return "\"" + json_escape(v) + "\""; };
    auto num = [](double v) { return format_double(v); };
    auto int_list = [](std::span<const int> v) {
        std::string out = "[";
        for (std::size_t i = 0; i < v.size(); ++i)
            out += (i ? ", " : "") + std::to_string(v[i]);
        return out + "]";
    };
    auto num_list = [&](std::span<const double> v) {
        std::string out = "[";
        for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + num(v[i]);
        return out + "]";
    };

    s += "{\n";
    kv("experiment", str(c.experiment));
    s += "    \"model\": {\n";
    s += "        \"id\": " + str(c.model.id) + ",\n";
    s += "        \"dim\": " + std::to_string(c.model.dim) + ",\n";
    s += "        \"beta\": " + num(c.model.beta) + ",\n";
    s += "        \"eps_reg\": " + num(c.model.eps_reg) + ",\n";
    s += "        \"lov\": {\"alpha\": " + num(c.model.lov.alpha) +
         ", \"beta\": " + num(c.model.lov.beta) + ", \"gamma\": " + num(c.model.lov.gamma) +
         ", \"delta\": " + num(c.model.lov.delta) + ", \"epsilon\": " + num(c.model.lov.epsilon) +
         ", \"kappa\": " + num(c.model.lov.kappa) + ", \"x0\": " + num(c.model.lov.x0) + "}\n";
    s += "    },\n";
    kv("grid", "{\"horizon\": " + num(c.horizon) + ", \"steps\": " + std::to_string(c.steps) + "}");
    kv("partition",
       "{\"radius\": " + num(c.radius) + ", \"bins\": " + int_list(c.bins) + "}");
    kv("family_truncation", std::to_string(c.family_truncation));
    kv("paths", std::to_string(c.paths));
    kv("seed", std::to_string(c.seed));
    kv("payoff", str(c.payoff));
    kv("reference",
       "{\"kind\": " + str(c.reference) + ", \"bins\": " + std::to_string(c.reference_bins) + "}");
    kv("x0", num_list(c.x0));
    kv("stop_radius", num(c.stop_radius));
    kv("exit_radii", num_list(c.exit_radii));
    kv("threads", std::to_string(c.threads));
    kv("sample_paths", std::to_string(c.sample_paths));
    kv("bootstrap_resamples", std::to_string(c.bootstrap_resamples));
    kv("max_excluded_fraction", num(c.max_excluded_fraction));
    kv("output_dir", str(c.output_dir));
    kv("gnuplot", c.gnuplot ? "true" : "false");
    std::string cols = "[";
    for (std::size_t i = 0; i < c.check_columns.size(); ++i)
        cols += (i ? ", " : "") + str(c.check_columns[i]);
    cols += "]";
    kv("check",
       "{\"slope_min\": " + num(c.check_slope_min) + ", \"slope_max\": " +
           num(c.check_slope_max) + ", \"columns\": " + cols + "}",
       /*last=*/true);
    s += "}";
    return s;
}

} // namespace occusim
