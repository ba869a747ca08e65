#include "fpmlab/config.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace fpmlab {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw config_error("unknown config key \"" + it.key() + "\" in " + where);
}

double num(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number())
        throw config_error("config key \"" + key + "\" must be a number");
    return j[key].get<double>();
}

long integer(const json& j, const std::string& key, long fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer())
        throw config_error("config key \"" + key + "\" must be an integer");
    return j[key].get<long>();
}

std::string str(const json& j, const std::string& key, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_string())
        throw config_error("config key \"" + key + "\" must be a string");
    return j[key].get<std::string>();
}

std::vector<double> num_list(const json& j, const std::string& key) {
    std::vector<double> out;
    if (!j.contains(key)) return out;
    if (!j[key].is_array())
        throw config_error("config key \"" + key + "\" must be an array");
    for (const auto& v : j[key]) {
        if (!v.is_number())
            throw config_error("config key \"" + key + "\" must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

std::vector<long> int_list(const json& j, const std::string& key) {
    std::vector<long> out;
    for (double v : num_list(j, key)) {
        if (v != std::floor(v))
            throw config_error("config key \"" + key + "\" must hold integers");
        out.push_back(long(v));
    }
    return out;
}

void validate(const ExperimentConfig& c) {
    if (c.grid.n < 8 || c.grid.n % 2 != 0)
        throw config_error("grid.n must be even and at least 8");
    if (!(c.grid.L > 0.0)) throw config_error("grid.L must be positive");
    c.params.validate();
    if (!(c.m_pow >= 1.0))
        throw config_error("nonlinearity.power must be >= 1 (f' bounded near 0)");
    if (c.initial_kind != "gaussian" && c.initial_kind != "double-bump" &&
        c.initial_kind != "plateau")
        throw config_error(
            "initial.kind must be one of gaussian, double-bump, plateau");
    if (!(c.initial_width > 0.0)) throw config_error("initial.width must be positive");
    if (!(c.initial_ramp > 0.0)) throw config_error("initial.ramp must be positive");
    if (!(c.initial_radius > 0.0)) throw config_error("initial.radius must be positive");
    if (!(c.initial_sep > 0.0))
        throw config_error("initial.separation must be positive");
    if (!(c.horizon > 0.0)) throw config_error("horizon must be positive");
    if (!(c.dt > 0.0) || c.dt > c.horizon)
        throw config_error("dt must satisfy 0 < dt <= horizon");
    if (c.replicas < 1) throw config_error("replicas must be >= 1");
    if (c.equation != "macro" && c.equation != "intermediate")
        throw config_error("equation must be macro or intermediate");
    for (double t : c.snapshot_times)
        if (t < 0.0 || t > c.horizon)
            throw config_error("snapshot_times must lie in [0, horizon]");
    for (double b : c.sweep.betas)
        if (!(b > 0.0)) throw config_error("sweep.betas must be positive");
    for (double z : c.sweep.zetas)
        if (!(z > 0.0)) throw config_error("sweep.zetas must be positive");
    for (long n : c.sweep.n_values)
        if (n < 2) throw config_error("sweep.n_values must be >= 2");
    for (double s : c.sweep.sigmas)
        if (!(s > 0.0)) throw config_error("sweep.sigmas must be positive");
}

} // namespace

ExperimentConfig default_config() {
    ExperimentConfig c;
    c.params.d = 2;
    c.params.s = 0.5;
    c.params.sigma = 0.1;
    c.params.beta = 0.25;
    c.params.zeta = 0.25;
    c.params.n_particles = 1024;
    c.text = render_config(c);
    return c;
}

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw config_error(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw config_error("config root must be a JSON object");
    check_keys(j,
               {"grid", "problem", "nonlinearity", "initial", "horizon", "dt", "seed",
                "replicas", "equation", "snapshot_times", "out", "sweep"},
               "the top level");

    ExperimentConfig c = default_config();
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        check_keys(g, {"n", "L"}, "grid");
        c.grid.n = int(integer(g, "n", c.grid.n));
        c.grid.L = num(g, "L", c.grid.L);
    }
    if (j.contains("problem")) {
        const auto& p = j["problem"];
        check_keys(p, {"d", "s", "sigma", "beta", "zeta", "n_particles"}, "problem");
        c.params.d = int(integer(p, "d", c.params.d));
        c.params.s = num(p, "s", c.params.s);
        c.params.sigma = num(p, "sigma", c.params.sigma);
        c.params.beta = num(p, "beta", c.params.beta);
        c.params.zeta = num(p, "zeta", c.params.zeta);
        c.params.n_particles = integer(p, "n_particles", c.params.n_particles);
    }
    if (j.contains("nonlinearity")) {
        const auto& f = j["nonlinearity"];
        check_keys(f, {"power", "table"}, "nonlinearity");
        if (f.contains("power") && f.contains("table"))
            throw config_error("nonlinearity takes either power or table, not both");
        c.m_pow = num(f, "power", c.m_pow);
        c.f_table_path = str(f, "table", c.f_table_path);
    }
    if (j.contains("initial")) {
        const auto& s = j["initial"];
        check_keys(s, {"kind", "width", "radius", "ramp", "separation"}, "initial");
        c.initial_kind = str(s, "kind", c.initial_kind);
        c.initial_width = num(s, "width", c.initial_width);
        c.initial_radius = num(s, "radius", c.initial_radius);
        c.initial_ramp = num(s, "ramp", c.initial_ramp);
        c.initial_sep = num(s, "separation", c.initial_sep);
    }
    c.horizon = num(j, "horizon", c.horizon);
    c.dt = num(j, "dt", c.dt);
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer())
            throw config_error("config key \"seed\" must be an integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    c.replicas = int(integer(j, "replicas", c.replicas));
    c.equation = str(j, "equation", c.equation);
    if (j.contains("snapshot_times")) c.snapshot_times = num_list(j, "snapshot_times");
    c.out_dir = str(j, "out", c.out_dir);
    if (j.contains("sweep")) {
        const auto& s = j["sweep"];
        check_keys(s,
                   {"betas", "zeta_fixed", "zetas", "beta_fixed", "n_values", "anchor_n",
                    "anchor_beta", "anchor_zeta", "sigmas"},
                   "sweep");
        c.sweep.betas = num_list(s, "betas");
        c.sweep.zeta_fixed = num(s, "zeta_fixed", c.sweep.zeta_fixed);
        c.sweep.zetas = num_list(s, "zetas");
        c.sweep.beta_fixed = num(s, "beta_fixed", c.sweep.beta_fixed);
        c.sweep.n_values = int_list(s, "n_values");
        c.sweep.anchor_n = integer(s, "anchor_n", c.sweep.anchor_n);
        c.sweep.anchor_beta = num(s, "anchor_beta", c.sweep.anchor_beta);
        c.sweep.anchor_zeta = num(s, "anchor_zeta", c.sweep.anchor_zeta);
        c.sweep.sigmas = num_list(s, "sigmas");
    }
    validate(c);
    c.text = render_config(c);
    return c;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw config_error("cannot read config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string render_config(const ExperimentConfig& c) {
    json j;
    j["grid"] = {{"n", c.grid.n}, {"L", c.grid.L}};
    j["problem"] = {{"d", c.params.d},
                    {"s", c.params.s},
                    {"sigma", c.params.sigma},
                    {"beta", c.params.beta},
                    {"zeta", c.params.zeta},
                    {"n_particles", c.params.n_particles}};
    if (c.f_table_path.empty())
        j["nonlinearity"] = {{"power", c.m_pow}};
    else
        j["nonlinearity"] = {{"table", c.f_table_path}};
    j["initial"] = {{"kind", c.initial_kind},
                    {"width", c.initial_width},
                    {"radius", c.initial_radius},
                    {"ramp", c.initial_ramp},
                    {"separation", c.initial_sep}};
    j["horizon"] = c.horizon;
    j["dt"] = c.dt;
    j["seed"] = c.seed;
    j["replicas"] = c.replicas;
    j["equation"] = c.equation;
    if (!c.snapshot_times.empty()) j["snapshot_times"] = c.snapshot_times;
    if (!c.out_dir.empty()) j["out"] = c.out_dir;
    json sw;
    if (!c.sweep.betas.empty()) sw["betas"] = c.sweep.betas;
    if (!c.sweep.zetas.empty()) sw["zetas"] = c.sweep.zetas;
    if (!c.sweep.n_values.empty()) sw["n_values"] = c.sweep.n_values;
    if (!c.sweep.sigmas.empty()) sw["sigmas"] = c.sweep.sigmas;
    sw["zeta_fixed"] = c.sweep.zeta_fixed;
    sw["beta_fixed"] = c.sweep.beta_fixed;
    sw["anchor_n"] = c.sweep.anchor_n;
    sw["anchor_beta"] = c.sweep.anchor_beta;
    sw["anchor_zeta"] = c.sweep.anchor_zeta;
    j["sweep"] = sw;
    return j.dump(2) + "\n";
}

Field build_initial(const ExperimentConfig& cfg) {
    const Grid& g = cfg.grid;
    Field f(g);
    const double w2 = cfg.initial_width * cfg.initial_width;
    for (int i = 0; i < g.n; ++i) {
        const double x = g.coord(i);
        for (int j = 0; j < g.n; ++j) {
            const double y = g.coord(j);
            double v = 0.0;
            if (cfg.initial_kind == "gaussian") {
                v = std::exp(-(x * x + y * y) / (2.0 * w2));
            } else if (cfg.initial_kind == "double-bump") {
                const double cx = 0.5 * cfg.initial_sep;
                v = std::exp(-((x - cx) * (x - cx) + y * y) / (2.0 * w2)) +
                    std::exp(-((x + cx) * (x + cx) + y * y) / (2.0 * w2));
            } else { // plateau
                const double r = std::hypot(x, y);
                const double t = (r - cfg.initial_radius) / cfg.initial_ramp;
                if (t <= 0.0)
                    v = 1.0;
                else if (t >= 1.0)
                    v = 0.0;
                else
                    v = 1.0 - bump_cdf(2.0 * t - 1.0);
            }
            f.at(i, j) = v;
        }
    }
    double mass = 0.0;
    for (double v : f.a) mass += v;
    mass *= g.h() * g.h();
    if (!(mass > 0.0)) throw config_error("initial datum has no mass on this grid");
    for (double& v : f.a) v /= mass;
    return f;
}

} // namespace fpmlab
