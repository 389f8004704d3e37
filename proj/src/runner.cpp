#include "shubin/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "shubin/cache.hpp"
#include "shubin/control_lab.hpp"
#include "shubin/decay_lab.hpp"
#include "shubin/parallel.hpp"
#include "shubin/rng.hpp"
#include "shubin/weyl_calc.hpp"

namespace shubin {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* version = "0.1.0";

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("'" + key + "' is not a number: " + v);
    }
}

std::string trim(std::string s) {
    auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && ws(s.back())) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && ws(s[i])) ++i;
    return s.substr(i);
}

}  // namespace

std::string Config::text(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

std::string Config::text(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw ConfigError("missing required key '" + key + "'");
    return it->second;
}

double Config::number(const std::string& key, double fallback) const {
    return has(key) ? parse_double(key, text(key)) : fallback;
}

double Config::number(const std::string& key) const { return parse_double(key, text(key)); }

long long Config::integer(const std::string& key, long long fallback) const {
    if (!has(key)) return fallback;
    double d = number(key);
    if (d != std::floor(d) || std::abs(d) > 9e15) throw ConfigError("'" + key + "' must be an integer");
    return (long long)d;
}

std::vector<double> Config::list(const std::string& key, const std::vector<double>& fallback) const {
    if (!has(key)) return fallback;
    std::vector<double> out;
    std::stringstream ss(text(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_double(key, item));
    }
    if (out.empty()) throw ConfigError("'" + key + "' is an empty list");
    return out;
}

Config parse_config_text(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    Config cfg;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("key '" + section + "' outside any section");
        for (const auto& [key, value] : body) cfg.values[section + "." + key] = trim(value.data());
    }
    if (cfg.values.empty()) throw ConfigError("empty configuration");
    return cfg;
}

Config parse_config(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open config " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{
        "spectrum",      "weyl-law", "agmon",      "smoothing",    "seminorms", "coefficients", "thickset", "spectral-constant",
        "dissipation",   "control",  "cost-sweep", "lr-control",   "commutator", "garding",     "antiwick"};
    return names;
}

namespace {

struct Csv {
    std::string units;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add(std::vector<double> r) { rows.push_back(std::move(r)); }

    std::string render() const {
        std::string out = "# " + units + "\n";
        for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
        out += "\n";
        char buf[40];
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                std::snprintf(buf, sizeof buf, "%.17g", r[i]);
                out += (i ? "," : "");
                out += buf;
            }
            out += "\n";
        }
        return out;
    }
};

// nlohmann writes non-finite doubles as null; keep them readable
json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

json line_json(const LineFit& f) {
    return {{"slope", num(f.slope)},
            {"intercept", num(f.intercept)},
            {"r_squared", num(f.r_squared)},
            {"slope_stderr", num(f.slope_stderr)},
            {"samples", f.samples}};
}

json decay_json(const DecayFit& f) {
    return {{"exponent", num(f.exponent)}, {"rate", num(f.rate)},   {"r_squared", num(f.r_squared)},
            {"r_min", num(f.r_min)},       {"r_max", num(f.r_max)}, {"samples", f.samples}};
}

void write_atomic(const fs::path& file, const std::string& content) {
    fs::path tmp = file;
    tmp += ".tmp";
    {
        std::ofstream o(tmp, std::ios::binary | std::ios::trunc);
        o << content;
        if (!o) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, file);
}

struct Context {
    const Config& cfg;
    std::string command;
    OperatorSpec spec;
    Grid grid;
    std::uint64_t seed = 0;
    fs::path out;
    EigenCache cache;
    bool computing = false;
    std::string current_stage;
    std::vector<std::pair<std::string, double>> stages;
    std::optional<CachedEigenSystem> eig;
    Csv csv;
    json summary = json::object();
    std::map<std::string, std::string> extra_files;

    std::string key(const std::string& k) const { return command + "." + k; }
    double num(const std::string& k, double fallback) const { return cfg.number(key(k), fallback); }
    int integer(const std::string& k, long long fallback) const { return int(cfg.integer(key(k), fallback)); }
    std::vector<double> list(const std::string& k, const std::vector<double>& fallback) const {
        return cfg.list(key(k), fallback);
    }

    void require(bool ok, const std::string& msg) const {
        if (!ok) throw ConfigError(command + ": " + msg);
    }

    template <class F>
    void stage(const std::string& name, F&& f) {
        computing = true;
        current_stage = name;
        auto t0 = std::chrono::steady_clock::now();
        f();
        stages.emplace_back(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }

    const EigenSystem& eigen(int count) {
        if (!eig) stage("eigensystem", [&] { eig = cache.get(spec, grid, count); });
        return eig->es;
    }
};

std::vector<int> as_ints(const Context& c, const std::string& k, const std::vector<double>& v) {
    std::vector<int> out;
    for (double d : v) {
        c.require(d == std::floor(d) && d >= 0, "'" + k + "' must hold nonnegative integers");
        out.push_back(int(d));
    }
    return out;
}

ThickSet thick_from_config(Context& c) {
    const Config& cfg = c.cfg;
    std::string kind = cfg.text("thickset.kind", "periodic");
    double gamma = cfg.number("thickset.gamma", 0.3);
    try {
        if (kind == "periodic") return make_thick_periodic(c.grid, gamma, cfg.number("thickset.scale", 1.0));
        if (kind == "density")
            return make_thick_density(c.grid, gamma, cfg.number("thickset.delta", 0.5), cfg.number("thickset.R", 1.0),
                                      cfg.number("thickset.c_floor", 0.5));
        if (kind == "interval" || kind == "full") {
            double lo = kind == "full" ? -c.grid.L : cfg.number("thickset.lo", -0.5);
            double hi = kind == "full" ? c.grid.L : cfg.number("thickset.hi", 0.5);
            c.require(lo < hi, "thickset interval must have lo < hi");
            RVec ind = RVec::Zero(Eigen::Index(c.grid.size()));
            for (std::size_t i = 0; i < c.grid.size(); ++i) {
                auto p = c.grid.point(i);
                bool in = p[0] >= lo && p[0] <= hi && (c.grid.n == 1 || (p[1] >= lo && p[1] <= hi));
                ind[Eigen::Index(i)] = in ? 1.0 : 0.0;
            }
            return make_arbitrary(c.grid, ind);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("thickset: ") + e.what());
    }
    throw ConfigError("thickset.kind must be periodic, density, interval or full");
}

SampledFunction modes_sum(const EigenSystem& es, const std::vector<int>& js) {
    SampledFunction f(es.grid);
    for (int j : js) {
        if (j >= es.count()) throw std::runtime_error("requested mode " + std::to_string(j) + " was not retained");
        f.values += es.mode(j).values;
    }
    return f;
}

// ---------------------------------------------------------------- subcommands

void cmd_spectrum(Context& c) {
    int count = c.integer("count", 30);
    c.require(count >= 10, "count must be at least 10");
    const EigenSystem& es = c.eigen(count);
    bool harmonic = c.spec.k == 1 && c.spec.m == 1;
    c.stage("tabulate", [&] {
        c.csv.units = "j: mode index; lambda: eigenvalue; tails: outer-shell L2 mass fractions";
        c.csv.columns = {"j", "lambda", "spatial_tail", "frequency_tail"};
        if (harmonic) c.csv.columns.push_back("reference");
        double worst = 0.0;
        for (int j = 0; j < es.count(); ++j) {
            std::vector<double> r{double(j), es.eigenvalues[j], es.spatial_mass[j], es.frequency_mass[j]};
            if (harmonic) {
                // multi-index count: eigenvalue 2|alpha| + n
                double ref = c.spec.n == 1 ? 2.0 * j + 1.0 : std::nan("");
                r.push_back(ref);
                if (c.spec.n == 1) worst = std::max(worst, std::abs(es.eigenvalues[j] - ref));
            }
            c.csv.add(r);
        }
        c.summary["requested"] = count;
        c.summary["retained"] = es.count();
        c.summary["max_residual"] = num(es.max_residual);
        c.summary["max_orthogonality_error"] = num(es.max_orthogonality_error);
        if (harmonic && c.spec.n == 1) c.summary["max_abs_error_vs_2j_plus_1"] = num(worst);
    });
}

void cmd_weyl(Context& c) {
    int count = c.integer("count", 260);
    int lo = c.integer("j_lo", 40), hi = c.integer("j_hi", 240);
    c.require(lo >= 1 && hi - lo + 1 >= 20, "need j_lo >= 1 and at least 20 modes");
    c.require(count > hi, "count must exceed j_hi");
    const EigenSystem& es = c.eigen(count);
    c.stage("fit", [&] {
        c.require(es.count() > hi, "only " + std::to_string(es.count()) + " modes retained; enlarge the box");
        LineFit f = weyl_fit(es, lo, hi);
        double predicted = derived_exponents(c.spec).weyl;
        c.csv.units = "j: mode index; lambda: eigenvalue";
        c.csv.columns = {"j", "lambda"};
        for (int j = 0; j < es.count(); ++j) c.csv.add({double(j), es.eigenvalues[j]});
        c.summary["fit"] = line_json(f);
        c.summary["predicted_slope"] = predicted;
        c.summary["relative_error"] = num(std::abs(f.slope - predicted) / predicted);
        c.summary["retained"] = es.count();
    });
}

void cmd_agmon(Context& c) {
    auto modes = as_ints(c, "modes", c.list("modes", {0, 1, 2, 3}));
    double sigma = c.num("sigma", 1.0), t = c.num("t", 0.05);
    int lo = c.integer("j_lo", 5), hi = c.integer("j_hi", 25);
    c.require(sigma >= 0.0 && sigma <= 1.0, "sigma must lie in [0, 1]");
    c.require(t > 0.0, "t must be positive");
    c.require(lo >= 0 && hi - lo >= 4, "scaling range needs at least 5 modes");
    int top = std::max(hi, *std::max_element(modes.begin(), modes.end()));
    const EigenSystem& es = c.eigen(c.integer("count", top + 20));
    c.stage("fit", [&] {
        auto d = derived_exponents(c.spec);
        auto fits = agmon_exponent_check(es, modes);
        c.csv.units = "j: mode index; exponents are dimensionless decay powers p in |u| ~ exp(-c r^p)";
        c.csv.columns = {"j", "spatial_exponent", "spatial_r2", "frequency_exponent", "frequency_r2"};
        json rows = json::array();
        for (const auto& f : fits) {
            c.csv.add({double(f.j), f.spatial.exponent, f.spatial.r_squared, f.frequency.exponent,
                       f.frequency.r_squared});
            rows.push_back({{"j", f.j}, {"spatial", decay_json(f.spatial)}, {"frequency", decay_json(f.frequency)}});
        }
        c.summary["modes"] = rows;
        c.summary["predicted_spatial"] = d.spatial_agmon;
        c.summary["predicted_frequency"] = d.frequency_agmon;
        LineFit sc = agmon_scaling_fit(es, sigma, t, lo, hi);
        c.summary["scaling"] = line_json(sc);
        c.summary["scaling_power"] = d.eigen_scaling;
    });
}

void cmd_smoothing(Context& c) {
    auto s_values = c.list("s_values", {0.3, 0.75, 1.5});
    auto t_values = c.list("t_values", {5.0, 0.5, 1.0});
    int realizations = c.integer("realizations", 0);
    c.require(s_values.size() == t_values.size(), "s_values and t_values must have equal length");
    c.require(realizations >= 0, "realizations must be nonnegative");
    for (double s : s_values) c.require(s > 0.0, "s must be positive");
    for (double t : t_values) c.require(t > 0.0, "t must be positive");
    const EigenSystem& es = c.eigen(c.integer("count", 400));
    c.stage("tail fits", [&] {
        c.csv.units = "s: diffusion index; t: time; exponent: fitted p in |u^(xi)| ~ exp(-c |xi|^p)";
        c.csv.columns = {"s", "t", "target", "exponent", "r2", "samples"};
        std::vector<TailFit> fits(s_values.size());
        parallel_for(fits.size(), [&](std::size_t i) {
            fits[i] = frequency_tail_fit(es, s_values[i], t_values[i], c.seed, realizations);
        });
        json rows = json::array();
        for (const auto& f : fits) {
            c.csv.add({f.s, f.t, f.target, f.fit.exponent, f.fit.r_squared, double(f.fit.samples)});
            rows.push_back({{"s", f.s},
                            {"t", f.t},
                            {"target", f.target},
                            {"fit", decay_json(f.fit)},
                            {"relative_error", num(std::abs(f.fit.exponent - f.target) / f.target)}});
        }
        c.summary["fits"] = rows;
        c.summary["realizations"] = realizations;
    });
}

void cmd_seminorms(Context& c) {
    double t = c.num("t", 0.1);
    int amax = c.integer("alpha_max", 4), bmax = c.integer("beta_max", 4);
    c.require(t > 0.0, "t must be positive");
    c.require(amax >= 0 && bmax >= 0 && amax <= 8 && bmax <= 8, "alpha_max, beta_max must lie in [0, 8]");
    c.require(c.grid.n == 1, "seminorm tables are one-dimensional");
    const EigenSystem& es = c.eigen(c.integer("count", 120));
    c.stage("probe", [&] {
        SampledFunction g = real_noise(c.grid, c.seed, 1);
        SampledFunction u = semigroup_apply(es, c.spec.s, t, g);
        WeightReport w = smoothing_probe(es, c.spec.s, t, g);
        Table measured = seminorm_table(u, amax, bmax);
        Table bound = seminorm_bounds_from_weights(w, amax, bmax);
        c.csv.units = "alpha: power of x; beta: derivative order; sup norms of x^alpha d^beta u";
        c.csv.columns = {"alpha", "beta", "measured", "bound"};
        bool dominated = true;
        for (int a = 0; a <= amax; ++a)
            for (int b = 0; b <= bmax; ++b) {
                double m = measured[std::size_t(a)][std::size_t(b)], B = bound[std::size_t(a)][std::size_t(b)];
                c.csv.add({double(a), double(b), m, B});
                dominated = dominated && m <= B;
            }
        c.summary["lambda1"] = num(w.lambda1);
        c.summary["lambda2"] = num(w.lambda2);
        c.summary["lambda3"] = num(w.lambda3);
        c.summary["nu"] = w.nu;
        c.summary["mu"] = w.mu;
        c.summary["space_overflow"] = w.space_overflow;
        c.summary["frequency_overflow"] = w.frequency_overflow;
        c.summary["bound_dominates"] = dominated;
    });
}

void cmd_coefficients(Context& c) {
    double t = c.num("t", 0.1), a = c.num("a", 1.0);
    c.require(t > 0.0 && a > 0.0, "t and a must be positive");
    const EigenSystem& es = c.eigen(c.integer("count", 120));
    c.stage("fit", [&] {
        SampledFunction g = semigroup_apply(es, c.spec.s, t, real_noise(c.grid, c.seed, 2));
        CVec coef = es.coefficients(g);
        c.csv.units = "j: mode index; magnitude: |<g, psi_j>|";
        c.csv.columns = {"j", "magnitude"};
        for (int j = 0; j < es.count(); ++j) c.csv.add({double(j), std::abs(coef[j])});
        CoefficientFit f = coefficient_decay_fit(es, g, a);
        c.summary["fit"] = line_json(f.line);
        c.summary["usable"] = f.usable;
        c.summary["a"] = a;
    });
}

void cmd_thickset(Context& c) {
    ThickSet ts = thick_from_config(c);
    c.stage("measure", [&] {
        c.csv.units = "x: position; indicator: 1 on the control set";
        c.csv.columns = c.grid.n == 1 ? std::vector<std::string>{"x", "indicator"}
                                      : std::vector<std::string>{"x", "y", "indicator"};
        for (std::size_t i = 0; i < c.grid.size(); ++i) {
            auto p = c.grid.point(i);
            if (c.grid.n == 1)
                c.csv.add({p[0], ts.indicator[Eigen::Index(i)]});
            else
                c.csv.add({p[0], p[1], ts.indicator[Eigen::Index(i)]});
        }
        c.summary["kind"] = kind_name(ts.kind);
        c.summary["gamma"] = ts.gamma;
        c.summary["measured_gamma"] = num(ts.measured_gamma);
        c.summary["measure"] = ts.measure();
        if (ts.kind == ThickSet::Kind::periodic) c.summary["thickness"] = num(thickness_check(ts, ts.scale));
        if (ts.kind == ThickSet::Kind::density) c.summary["density_thickness"] = num(density_thickness_check(ts));
    });
}

Family family_of(const Context& c) {
    std::string f = c.cfg.text(c.key("family"), "eigenmode");
    if (f == "eigenmode") return Family::eigenmode;
    if (f == "frequency") return Family::frequency;
    throw ConfigError(c.command + ": family must be eigenmode or frequency");
}

void cmd_spectral_constant(Context& c) {
    Family fam = family_of(c);
    auto orders = as_ints(c, "orders", c.list("orders", {4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24}));
    ThickSet ts = thick_from_config(c);
    const EigenSystem& es = c.eigen(c.integer("count", 60));
    c.stage("svd", [&] {
        auto curve = spectral_constant_estimate(es, fam, ts, orders);
        c.csv.units = "N: order (dual-lattice steps or mode count); sigma_min: smallest singular value; constant: 1/sigma_min";
        c.csv.columns = {"N", "sigma_min", "constant"};
        for (std::size_t i = 0; i < curve.orders.size(); ++i)
            c.csv.add({double(curve.orders[i]), curve.sigma_min[i], curve.constants[i]});
        c.summary["family"] = fam == Family::frequency ? "frequency" : "eigenmode";
        c.summary["growth"] = line_json(curve.growth);
        c.summary["finite"] = curve.finite;
    });
}

void cmd_dissipation(Context& c) {
    Family fam = family_of(c);
    auto orders = as_ints(c, "orders", c.list("orders", {2, 4, 6, 8, 10, 12}));
    double t = c.num("t", 0.1);
    std::string input = c.cfg.text(c.key("input"), "noise");
    c.require(t > 0.0, "t must be positive");
    c.require(input == "noise" || input.rfind("mode:", 0) == 0, "input must be noise or mode:<j>");
    const EigenSystem& es = c.eigen(c.integer("count", 60));
    c.stage("dissipation", [&] {
        SampledFunction g = input == "noise" ? real_noise(c.grid, c.seed, 3)
                                             : es.mode(int(parse_double(c.key("input"), input.substr(5))));
        c.csv.units = "N: projection order; measured and bound: L2 norms of the high-mode remainder";
        c.csv.columns = {"N", "measured", "bound"};
        double worst = 0.0;
        for (int N : orders) {
            auto r = dissipation_check(es, c.spec.s, fam, N, t, g);
            c.csv.add({double(N), r.measured, r.bound});
            if (std::isfinite(r.bound) && r.bound > 0) worst = std::max(worst, r.measured / r.bound);
        }
        c.summary["max_measured_over_bound"] = num(worst);
    });
}

struct ControlParams {
    double T, epsilon;
    int Q;
    std::vector<int> f0_modes;
};

ControlParams control_params(Context& c, double T_default) {
    ControlParams p{c.num("T", T_default), c.num("epsilon", 1e-8), c.integer("Q", 32),
                    as_ints(c, "f0_modes", c.list("f0_modes", {0, 3}))};
    c.require(p.T > 0.0, "T must be positive");
    c.require(p.epsilon > 0.0, "epsilon must be positive");
    c.require(p.Q >= 4 && p.Q <= 256, "Q must lie in [4, 256]");
    return p;
}

void cmd_control(Context& c) {
    ControlParams p = control_params(c, 0.3);
    ThickSet ts = thick_from_config(c);
    const EigenSystem& es = c.eigen(c.integer("count", 60));
    c.stage("hum", [&] {
        SampledFunction f0 = modes_sum(es, p.f0_modes);
        auto sol = hum_solve(es, c.spec.s, ts, p.T, f0, p.epsilon, p.Q);
        c.csv.units = "t: time; control_norm: L2 norm of h(t); weight: quadrature weight";
        c.csv.columns = {"t", "control_norm", "weight"};
        for (std::size_t q = 0; q < sol.nodes.size(); ++q) c.csv.add({sol.nodes[q], sol.control[q].norm(), sol.weights[q]});
        c.summary["terminal_residual"] = num(sol.terminal_residual);
        c.summary["cost"] = num(sol.cost);
        c.summary["cg_iterations"] = sol.cg_iterations;
        c.summary["duality_error"] = num(sol.duality_error);
        c.summary["penalization_bound"] = num(sol.penalization_bound);
        c.summary["f0_tail_mass"] = num(sol.f0_tail_mass);
    });
}

void cmd_cost_sweep(Context& c) {
    ControlParams p = control_params(c, 0.3);
    auto T_list = c.list("T_values", {0.05, 0.1, 0.2, 0.3, 0.4});
    ThickSet ts = thick_from_config(c);
    const EigenSystem& es = c.eigen(c.integer("count", 60));
    c.stage("sweep", [&] {
        auto sw = cost_sweep(es, c.spec.s, ts, T_list, p.epsilon, modes_sum(es, p.f0_modes), p.Q);
        c.csv.units = "T: control horizon; cost: L2(0,T;L2) control norm; residual: ||f(T)||/||f0||";
        c.csv.columns = {"T", "cost", "residual", "cg_iterations"};
        for (const auto& q : sw.points) c.csv.add({q.T, q.cost, q.residual, double(q.cg_iterations)});
        c.summary["beta"] = num(sw.beta);
        c.summary["fixed"] = line_json(sw.fixed);
        c.summary["free_beta"] = num(sw.free_beta);
        c.summary["free"] = line_json(sw.free);
        c.summary["nonincreasing"] = sw.nonincreasing;
    });
}

void cmd_lr(Context& c) {
    ControlParams p = control_params(c, 0.4);
    LrOptions opt;
    opt.epsilon = p.epsilon;
    opt.Q = p.Q;
    opt.theta = c.num("theta", 0.0);
    opt.n0 = c.num("n0", 1.0);
    c.require(opt.n0 >= 1.0, "n0 must be at least 1");
    ThickSet ts = thick_from_config(c);
    const EigenSystem& es = c.eigen(c.integer("count", 60));
    c.stage("lebeau-robbiano", [&] {
        auto r = lebeau_robbiano_solve(es, c.spec.s, ts, p.T, modes_sum(es, p.f0_modes), opt);
        c.csv.units = "stage j on [t0, t1]; modes steered; before/after: L2 norms of the state";
        c.csv.columns = {"j", "modes", "t0", "t1", "before", "after", "ratio", "cg_iterations"};
        for (const auto& s : r.stages)
            c.csv.add({double(s.j), double(s.modes), s.t0, s.t1, s.before, s.after, s.ratio, double(s.cg_iterations)});
        c.summary["a"] = num(r.a);
        c.summary["b"] = num(r.b);
        c.summary["theta"] = num(r.theta);
        c.summary["hypotheses_hold"] = r.hypotheses_hold;
        c.summary["final_residual"] = num(r.final_residual);
        c.summary["cost"] = num(r.cost);
        c.summary["converged"] = r.converged;
        c.summary["diagnostic"] = r.diagnostic;
    });
}

SampledFunction test_profile(const Grid& g) {
    return sample([](double x) { return cplx(std::exp(-0.5 * (x - 0.3) * (x - 0.3)) * (1.0 + 0.2 * std::sin(x))); }, g);
}

void cmd_commutator(Context& c) {
    double sigma = c.num("sigma", 1.0);
    auto eps = c.list("epsilons", {1.0, 0.5, 0.25, 0.1});
    auto ts = c.list("t_values", {0.1, 0.3});
    double xi_max = c.num("xi_max", 32.0);
    int xi_samples = c.integer("xi_samples", 641);
    c.require(c.grid.n == 1, "symbol calculus is one-dimensional");
    c.require(c.spec.m <= 3, "m must be at most 3");
    c.require(sigma >= 0.0 && sigma <= 1.0, "sigma must lie in [0, 1]");
    for (double e : eps) c.require(e > 0.0 && e <= 1.0, "epsilons must lie in (0, 1]");
    const int m = c.spec.m, order = 4 * m + 4;
    c.stage("tower", [&] {
        AgmonWeight w = make_weight(sigma, c.spec.k, m);
        SampledFunction v = test_profile(c.grid);
        json per = json::array();
        for (double e : eps) {
            XField phi = XField::from_weight(c.grid, w, make_cutoff(e), order);
            auto tower = commutator_tower(phi, m);
            double moyal = tower_moyal_discrepancy(phi, tower);
            SampledFunction ph(c.grid, phi.values());
            double op_err = 0.0;
            for (int j = 0; j <= 2 * m; ++j) {
                auto lhs = apply_standard(weyl_to_standard(tower[std::size_t(j)]), v);
                auto rhs = ad_apply(ph, m, j, v);
                double scale = std::max(rhs.norm(), 1e-300);
                op_err = std::max(op_err, (lhs.values - rhs.values).norm() * std::sqrt(c.grid.cell()) / scale);
            }
            json conj = json::array();
            for (double t : ts) {
                auto r = conjugation_check(ph, m, t, v);
                conj.push_back({{"t", t}, {"rel_error", num(r.rel_error)}, {"overflow", r.overflow}});
            }
            per.push_back({{"epsilon", e},
                           {"moyal_discrepancy", num(moyal)},
                           {"operator_discrepancy", num(op_err)},
                           {"conjugation", conj}});
        }
        c.summary["per_epsilon"] = per;
    });
    c.stage("symbol classes", [&] {
        auto rep = symbol_class_report(c.grid, sigma, c.spec.k, m, eps, xi_max, xi_samples);
        c.csv.units = "j: tower level; alpha, beta: x and xi derivative orders; ratio: weighted sup";
        c.csv.columns = {"j", "epsilon", "alpha", "beta", "ratio"};
        for (const auto& e : rep.entries)
            c.csv.add({double(e.j), e.epsilon, double(e.alpha), double(e.beta), e.ratio});
        c.summary["uniformity"] = num(rep.uniformity);
    });
}

void cmd_garding(Context& c) {
    double sigma = c.num("sigma", 1.0), eps = c.num("epsilon", 1.0), t = c.num("t", 0.5);
    int size = c.integer("family_size", 500);
    c.require(c.grid.n == 1, "Garding probe is one-dimensional");
    c.require(sigma >= 0.0 && sigma <= 1.0, "sigma must lie in [0, 1]");
    c.require(eps > 0.0 && eps <= 1.0, "epsilon must lie in (0, 1]");
    c.require(t >= 0.0 && t <= 1.0, "t must lie in [0, 1]");
    c.require(size >= 1, "family_size must be positive");
    c.stage("probe", [&] {
        auto r = garding_probe(c.grid, sigma, c.spec.k, c.spec.m, eps, t, size, c.seed);
        c.csv.units = "member: family index; ratio: -Q(v) / (||v||^2 + t ||<x>^{sigma k} v||^2)";
        c.csv.columns = {"member", "ratio"};
        for (std::size_t i = 0; i < r.ratios.size(); ++i) c.csv.add({double(i), r.ratios[i]});
        c.summary["c0_required"] = num(r.c0_required);
        c.summary["worst"] = r.worst;
        c.summary["worst_description"] = r.worst_description;
        c.summary["overflowed"] = r.overflowed;
        c.summary["family_size"] = r.family_size;
    });
}

void cmd_antiwick(Context& c) {
    int samples = c.integer("samples", 200);
    c.require(c.grid.n == 1, "anti-Wick quantization is one-dimensional");
    c.require(c.grid.N <= 1024, "anti-Wick fields need N <= 1024");
    c.require(samples >= 1, "samples must be positive");
    c.stage("anti-wick", [&] {
        const Grid& g = c.grid;
        SampledFunction u = test_profile(g);
        PhaseField one = PhaseField::Ones(g.N, g.N);
        double id_err = (anti_wick_apply(one, u).values - u.values).norm() * std::sqrt(g.cell()) / u.norm();

        PhaseField xi2(g.N, g.N);
        for (int r = 0; r < g.N; ++r)
            for (int q = 0; q < g.N; ++q) xi2(r, q) = g.dual(q) * g.dual(q);
        SampledFunction a = anti_wick_apply(xi2, u);
        SampledFunction ref = spectral_derivative(u, 2);
        ref.values = -ref.values + 0.5 * u.values;
        double xi2_err = (a.values - ref.values).norm() * std::sqrt(g.cell()) / ref.norm();

        Rng rng(c.seed, 4);
        double worst = 0.0;
        for (int s = 0; s < samples; ++s) {
            PhaseField sym(g.N, g.N);
            for (int r = 0; r < g.N; ++r)
                for (int q = 0; q < g.N; ++q) sym(r, q) = rng.uniform();
            SampledFunction w = noise(g, c.seed, 100 + std::uint64_t(s));
            double qf = inner(anti_wick_apply(sym, w), w).real() / std::pow(w.norm(), 2);
            worst = s == 0 ? qf : std::min(worst, qf);
        }

        PhaseSymbol p2;
        p2.poly[{0, 2}] = 1.0;
        Eigen::MatrixXd b = anti_wick_weyl_symbol(g, p2);
        double sym_err = 0.0;
        for (int q = 0; q < g.N; ++q) sym_err = std::max(sym_err, std::abs(b(0, q) - (g.dual(q) * g.dual(q) + 0.5)));

        c.csv.units = "x: position; real parts of u, A_{xi^2} u and (-d^2 + 1/2) u";
        c.csv.columns = {"x", "u", "antiwick_xi2_u", "reference"};
        for (int i = 0; i < g.N; ++i) c.csv.add({g.node(i), u.values[i].real(), a.values[i].real(), ref.values[i].real()});
        c.summary["identity_error"] = num(id_err);
        c.summary["xi2_operator_error"] = num(xi2_err);
        c.summary["xi2_symbol_error"] = num(sym_err);
        c.summary["min_normalized_quadratic_form"] = num(worst);
        c.summary["samples"] = samples;
    });
}

const std::map<std::string, std::function<void(Context&)>>& handlers() {
    static const std::map<std::string, std::function<void(Context&)>> h{
        {"spectrum", cmd_spectrum},       {"weyl-law", cmd_weyl},
        {"agmon", cmd_agmon},             {"smoothing", cmd_smoothing},
        {"seminorms", cmd_seminorms},     {"coefficients", cmd_coefficients},
        {"thickset", cmd_thickset},       {"spectral-constant", cmd_spectral_constant},
        {"dissipation", cmd_dissipation}, {"control", cmd_control},
        {"cost-sweep", cmd_cost_sweep},   {"lr-control", cmd_lr},
        {"commutator", cmd_commutator},   {"garding", cmd_garding},
        {"antiwick", cmd_antiwick}};
    return h;
}

}  // namespace

int run(const RunRequest& req, std::ostream& log) {
    auto t_start = std::chrono::steady_clock::now();
    auto hit = handlers().find(req.command);
    if (hit == handlers().end()) {
        log << "unknown subcommand '" << req.command << "'\n";
        return exit_config;
    }

    std::optional<Config> cfg;
    std::optional<Context> ctx;
    try {
        cfg = parse_config(req.config);
        OperatorSpec spec{int(cfg->integer("operator.k", 1)), int(cfg->integer("operator.m", 1)),
                          cfg->number("operator.s", 1.0), int(cfg->integer("operator.n", 1))};
        spec.validate();
        Grid grid = make_grid(spec.n, int(cfg->integer("grid.N", 512)), cfg->number("grid.L", 12.0));
        if (grid.size() > dense_limit) throw ConfigError("grid exceeds the dense eigensolver limit");
        std::uint64_t seed = req.seed ? *req.seed : std::uint64_t(cfg->integer("run.seed", 0));
        fs::path cache_dir = cfg->text("run.cache", (req.out / "cache").string());
        ctx.emplace(Context{*cfg, req.command, spec, grid, seed, req.out, EigenCache(cache_dir)});
        set_thread_count(req.threads);
        fs::create_directories(req.out);
    } catch (const std::exception& e) {
        log << "config error: " << e.what() << "\n";
        return exit_config;
    }

    Context& c = *ctx;
    std::string failure;
    int status = exit_ok;
    try {
        hit->second(c);
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        if (!c.computing) {
            log << "config error: " << e.what() << "\n";
            return exit_config;
        }
        failure = e.what();
        status = exit_compute;
        log << "compute error in stage '" << c.current_stage << "': " << failure << "\n";
    }

    json manifest;
    manifest["artifact"] = "shubin_lab";
    manifest["version"] = version;
    manifest["command"] = req.command;
    manifest["config"] = cfg->values;
    manifest["seed"] = c.seed;
    manifest["threads"] = thread_count();
    json files = json::array();
    try {
        if (status == exit_ok) {
            const std::string csv_name = req.command + ".csv", sum_name = req.command + ".summary.json";
            write_atomic(req.out / csv_name, c.csv.render());
            write_atomic(req.out / sum_name, c.summary.dump(2) + "\n");
            for (const auto& name : {csv_name, sum_name})
                files.push_back({{"name", name}, {"sha256", sha256_file(req.out / name)}});
        }
        json st = json::array();
        for (const auto& [name, sec] : c.stages) st.push_back({{"name", name}, {"seconds", sec}});
        manifest["stages"] = st;
        if (c.eig) {
            const auto& es = c.eig->es;
            manifest["eigensystem"] = {{"cached", c.eig->cached},
                                       {"key", c.eig->key},
                                       {"requested", es.requested},
                                       {"retained", es.count()},
                                       {"max_spatial_tail", num(es.spatial_mass.maxCoeff())},
                                       {"max_frequency_tail", num(es.frequency_mass.maxCoeff())},
                                       {"warning", c.eig->warning}};
            if (!c.eig->warning.empty()) log << "warning: " << c.eig->warning << "\n";
        }
        manifest["files"] = files;
        manifest["status"] = status == exit_ok ? "ok" : "compute_error";
        if (status != exit_ok) manifest["error"] = {{"stage", c.current_stage}, {"message", failure}};
        manifest["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        write_atomic(req.out / "manifest.json", manifest.dump(2) + "\n");
    } catch (const std::exception& e) {
        log << "output error: " << e.what() << "\n";
        return exit_compute;
    }
    return status;
}

}  // namespace shubin
