#include "shubin/decay_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>

#include "shubin/rng.hpp"

namespace shubin {

namespace {

constexpr double log_overflow = 709.0;

struct LinearLs {
    double a = 0, c = 0, sse = 0, sst = 0;
};

// y = a - c X
LinearLs ls_offset_rate(const std::vector<double>& X, const std::vector<double>& y) {
    auto f = fit_line(X, y);
    LinearLs out;
    out.a = f.intercept;
    out.c = -f.slope;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / double(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        double e = y[i] - f.intercept - f.slope * X[i];
        out.sse += e * e;
        out.sst += (y[i] - my) * (y[i] - my);
    }
    return out;
}

DecayFit envelope_fit(const std::vector<double>& r, const std::vector<double>& a, double edge,
                      const FitOptions& opt) {
    std::vector<std::size_t> order(r.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return r[i] < r[j]; });
    const double amax = *std::max_element(a.begin(), a.end());
    std::vector<double> env(r.size());
    double run = 0.0;
    for (std::size_t k = order.size(); k-- > 0;) {
        run = std::max(run, a[order[k]]);
        env[k] = run;
    }
    std::vector<double> rr, yy;
    const double rcap = (1.0 - opt.outer_fraction) * edge;
    for (std::size_t k = 0; k < order.size(); ++k) {
        double rad = r[order[k]];
        if (rad > rcap) break;
        if (opt.log_prefactor && rad <= 0.0) continue;
        if (env[k] < opt.floor * amax || env[k] > opt.ceiling * amax) continue;
        rr.push_back(rad);
        yy.push_back(std::log(env[k]));
    }
    if (int(rr.size()) < opt.min_samples) throw std::runtime_error("decay fit: too few samples in window");
    if (rr.front() == rr.back()) throw std::runtime_error("decay fit: degenerate window");

    std::vector<double> X(rr.size());
    // log env = a - c r^p + b log r: an algebraic prefactor no longer leaks into p
    auto with_prefactor = [&](double p) {
        const Eigen::Index n = Eigen::Index(rr.size());
        Eigen::MatrixXd A(n, 3);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            A(i, 0) = 1.0;
            A(i, 1) = -std::pow(rr[std::size_t(i)], p);
            A(i, 2) = std::log(rr[std::size_t(i)]);
            y[i] = yy[std::size_t(i)];
        }
        Eigen::Vector3d c = A.colPivHouseholderQr().solve(y);
        LinearLs out;
        out.a = c[0];
        out.c = c[1];
        out.sse = (A * c - y).squaredNorm();
        out.sst = (y.array() - y.mean()).square().sum();
        return out;
    };
    auto solve = [&](double p) {
        if (opt.log_prefactor) return with_prefactor(p);
        for (std::size_t i = 0; i < rr.size(); ++i) X[i] = std::pow(rr[i], p);
        return ls_offset_rate(X, yy);
    };
    auto sse = [&](double p) { return solve(p).sse; };
    // coarse scan then Brent polish: the residual can have shallow secondary minima
    double best_p = 0.1, best = std::numeric_limits<double>::infinity();
    for (double p = 0.1; p <= 8.0 + 1e-9; p += 0.05) {
        double v = sse(p);
        if (v < best) {
            best = v;
            best_p = p;
        }
    }
    auto res = boost::math::tools::brent_find_minima(sse, std::max(0.05, best_p - 0.05), best_p + 0.05, 50);
    double p = res.first;
    auto ls = solve(p);
    DecayFit f;
    f.exponent = p;
    f.rate = ls.c;
    f.offset = ls.a;
    f.r_squared = ls.sst > 0 ? 1.0 - ls.sse / ls.sst : 1.0;
    f.r_min = rr.front();
    f.r_max = rr.back();
    f.samples = int(rr.size());
    return f;
}

}  // namespace

DecayFit profile_fit(const std::vector<double>& r, const std::vector<double>& a, double edge, const FitOptions& opt) {
    if (r.size() != a.size() || r.empty()) throw std::invalid_argument("decay fit: bad profile");
    const double amax = *std::max_element(a.begin(), a.end());
    if (!(amax > 0.0)) throw std::runtime_error("decay fit: zero profile");
    if (opt.mode == FitMode::envelope) return envelope_fit(r, a, edge, opt);

    const double rcap = (1.0 - opt.outer_fraction) * edge;
    std::vector<double> xs, ys, rs;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] > rcap || a[i] < opt.floor * amax) continue;
        if (opt.mode == FitMode::double_log) {
            double q = a[i] / amax;
            if (r[i] <= 0.0 || q >= 1.0) continue;
            xs.push_back(std::log(r[i]));
            ys.push_back(std::log(-std::log(q)));
        } else {
            xs.push_back(std::pow(r[i], opt.p));
            ys.push_back(std::log(a[i]));
        }
        rs.push_back(r[i]);
    }
    if (int(xs.size()) < opt.min_samples) throw std::runtime_error("decay fit: too few samples in window");
    auto line = fit_line(xs, ys);
    DecayFit f;
    if (opt.mode == FitMode::double_log) {
        f.exponent = line.slope;
        f.rate = std::exp(line.intercept);
        f.offset = std::log(amax);
    } else {
        f.exponent = opt.p;
        f.rate = -line.slope;
        f.offset = line.intercept;
    }
    f.r_squared = line.r_squared;
    f.r_min = *std::min_element(rs.begin(), rs.end());
    f.r_max = *std::max_element(rs.begin(), rs.end());
    f.samples = int(xs.size());
    return f;
}

DecayFit radial_decay_fit(const SampledFunction& u, const FitOptions& opt) {
    const Grid& g = u.grid;
    std::vector<double> r(g.size()), a(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        r[i] = g.radius(i);
        a[i] = std::abs(u.values[Eigen::Index(i)]);
    }
    return profile_fit(r, a, g.L, opt);
}

DecayFit frequency_decay_fit(const SampledFunction& u, const FitOptions& opt) {
    const Grid& g = u.grid;
    auto uh = forward_transform(u);
    std::vector<double> r(g.size()), a(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        r[i] = g.dual_radius(i);
        a[i] = std::abs(uh.values[Eigen::Index(i)]);
    }
    return profile_fit(r, a, (g.N / 2) * g.dual_step(), opt);
}

std::vector<AgmonFit> agmon_exponent_check(const EigenSystem& es, const std::vector<int>& js, const FitOptions& opt) {
    std::vector<AgmonFit> out;
    for (int j : js) {
        auto psi = es.mode(j);
        out.push_back({j, radial_decay_fit(psi, opt), frequency_decay_fit(psi, opt)});
    }
    return out;
}

namespace {

struct LogMass {
    double log_total = -std::numeric_limits<double>::infinity();  // log sum w_i |u_i|^2 e^{2 l_i}
    double outer_share = 0.0;
    double floor_share = 0.0;  // share carried by samples below 1e-13 max|v|
};

// log of sum |v_i|^2 e^{2 rate <r_i>^exponent}, tracking the share beyond outer_edge
LogMass weighted_log_mass(const CVec& v, const RVec& radii, double rate, double exponent, double outer_edge) {
    const Eigen::Index M = v.size();
    std::vector<double> l(std::size_t(M), -std::numeric_limits<double>::infinity());
    double lmax = -std::numeric_limits<double>::infinity();
    const double vfloor = 1e-13 * v.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < M; ++i) {
        double a = std::abs(v[i]);
        if (a == 0.0) continue;
        double br = std::sqrt(1.0 + radii[i] * radii[i]);
        l[std::size_t(i)] = 2.0 * (std::log(a) + rate * std::pow(br, exponent));
        lmax = std::max(lmax, l[std::size_t(i)]);
    }
    LogMass out;
    if (!std::isfinite(lmax)) return out;
    double tot = 0.0, outer = 0.0, low = 0.0;
    for (Eigen::Index i = 0; i < M; ++i) {
        double e = std::exp(l[std::size_t(i)] - lmax);
        tot += e;
        if (radii[i] > outer_edge) outer += e;
        if (std::abs(v[i]) < vfloor) low += e;
    }
    out.log_total = lmax + std::log(tot);
    out.outer_share = outer / tot;
    out.floor_share = low / tot;
    return out;
}

double outer_edge(const Grid& g, Side side, double outer_fraction = 0.15) {
    double edge = side == Side::space ? g.L : (g.N / 2) * g.dual_step();
    return (1.0 - outer_fraction) * edge;
}

WeightedNorm from_log(double log_value, const LogMass& lm) {
    WeightedNorm w;
    w.log_value = log_value;
    w.noise_dominated = lm.floor_share > 1e-6;
    w.overflow = log_value > log_overflow;
    w.value = w.overflow ? std::numeric_limits<double>::infinity() : std::exp(log_value);
    return w;
}

}  // namespace

WeightedNorm exp_weighted_norm(const SampledFunction& u, double rate, double exponent, Side side) {
    if (rate < 0.0) throw std::invalid_argument("weight rate must be nonnegative");
    const Grid& g = u.grid;
    if (side == Side::space) {
        auto lm = weighted_log_mass(u.values, g.radii(), rate, exponent, outer_edge(g, side));
        return from_log(0.5 * (std::log(g.cell()) + lm.log_total), lm);
    }
    auto uh = forward_transform(u);
    auto lm = weighted_log_mass(uh.values, g.dual_radii(), rate, exponent, outer_edge(g, side));
    return from_log(0.5 * (std::log(g.dual_cell()) + lm.log_total) - 0.5 * g.n * std::log(2.0 * std::numbers::pi), lm);
}

WeightedNorm weighted_norm(const SampledFunction& u, double sigma, double t, Side side, const OperatorSpec& spec) {
    if (sigma < 0.0 || sigma > 1.0) throw std::invalid_argument("sigma must lie in [0, 1]");
    if (t < 0.0) throw std::invalid_argument("t must be nonnegative");
    auto e = derived_exponents(spec);
    double exponent = sigma * (side == Side::space ? e.spatial_agmon : e.frequency_agmon);
    return exp_weighted_norm(u, t, exponent, side);
}

LineFit agmon_scaling_fit(const EigenSystem& es, double sigma, double t, int j_lo, int j_hi) {
    if (j_lo < 0 || j_hi >= es.count() || j_hi - j_lo + 1 < 15)
        throw std::invalid_argument("agmon scaling fit needs at least 15 resolved modes");
    auto e = derived_exponents(es.spec);
    std::vector<double> x, y;
    for (int j = j_lo; j <= j_hi; ++j) {
        x.push_back(std::pow(es.eigenvalues[j], sigma * e.eigen_scaling));
        auto w = weighted_norm(es.mode(j), sigma, t, Side::space, es.spec);
        if (w.noise_dominated)
            throw std::runtime_error("weighted norm of mode " + std::to_string(j) +
                                     " is dominated by the noise floor; shrink the box or t");
        y.push_back(w.log_value);
    }
    // sigma = 0 collapses the abscissae; the slope is zero by construction
    if (sigma == 0.0) {
        LineFit f;
        f.intercept = y.front();
        f.r_squared = 1.0;
        f.samples = int(x.size());
        return f;
    }
    return fit_line(x, y);
}

LineFit weyl_fit(const EigenSystem& es, int j_lo, int j_hi) {
    if (j_lo < 1 || j_hi >= es.count()) throw std::invalid_argument("weyl window outside the resolved modes");
    if (j_hi - j_lo + 1 < 20) throw std::invalid_argument("weyl window needs at least 20 modes");
    std::vector<double> x, y;
    for (int j = j_lo; j <= j_hi; ++j) {
        x.push_back(std::log(double(j)));
        y.push_back(std::log(es.eigenvalues[j]));
    }
    return fit_line(x, y);
}

namespace {

// largest a with ||e^{a<.>^p} u|| <= bound; 40 bisection steps
double scan_rate(const SampledFunction& u, double exponent, Side side, double log_bound, bool& overflow) {
    auto ok = [&](double a) {
        auto w = exp_weighted_norm(u, a, exponent, side);
        overflow = overflow || w.overflow;
        return w.log_value <= log_bound;
    };
    if (!ok(0.0)) return 0.0;
    double lo = 0.0, hi = 1.0;
    while (ok(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) return lo;
    }
    for (int it = 0; it < 40; ++it) {
        double mid = 0.5 * (lo + hi);
        (ok(mid) ? lo : hi) = mid;
    }
    return lo;
}

}  // namespace

WeightReport smoothing_probe(const EigenSystem& es, double s, double t, const SampledFunction& g) {
    if (!(t > 0.0)) throw std::invalid_argument("smoothing probe needs t > 0");
    OperatorSpec spec = es.spec;
    spec.s = s;
    auto e = derived_exponents(spec);
    auto u = semigroup_apply(es, s, t, g);
    WeightReport w;
    w.t = t;
    w.nu = e.nu;
    w.mu = e.mu;
    w.bound = 10.0 * norm(g) * std::pow(t, -e.prefactor_power);
    const double lb = std::log(w.bound);
    double l1 = scan_rate(u, 1.0 / e.nu, Side::space, lb, w.space_overflow);
    double l2 = scan_rate(u, 1.0 / e.mu, Side::frequency, lb, w.frequency_overflow);
    // the seminorm lemma wants rates strictly inside (0, 1); shrinking a rate only lowers the norm
    constexpr double cap = 0.999;
    w.lambda1 = std::min(l1, cap);
    w.lambda2 = std::min(l2, cap);
    w.lambda3 = exp_weighted_norm(u, w.lambda1, 1.0 / e.nu, Side::space).value +
                exp_weighted_norm(u, w.lambda2, 1.0 / e.mu, Side::frequency).value;
    return w;
}

TailFit frequency_tail_fit(const EigenSystem& es, double s, double t, std::uint64_t seed, int realizations,
                           const FitOptions& opt) {
    if (!(t > 0.0)) throw std::invalid_argument("tail fit needs t > 0");
    const Grid& g = es.grid;
    OperatorSpec spec = es.spec;
    spec.s = s;
    TailFit out;
    out.s = s;
    out.t = t;
    out.target = 1.0 / derived_exponents(spec).mu;

    RVec power = RVec::Zero(Eigen::Index(g.size()));
    if (realizations <= 0) {
        // E|u_t^|^2 for unit-variance complex nodal noise: 2 h^n sum_j e^{-2t lambda_j^s} |psi_j^|^2
        RVec damp = (-2.0 * t * es.eigenvalues.array().pow(s)).exp();
        for (int j = 0; j < es.count(); ++j)
            power += 2.0 * g.cell() * damp[j] * forward_transform(es.mode(j)).values.cwiseAbs2();
    } else {
        for (int r = 0; r < realizations; ++r) {
            auto u = semigroup_apply(es, s, t, noise(g, seed, std::uint64_t(r)));
            power += forward_transform(u).values.cwiseAbs2();
        }
        power /= double(realizations);
    }
    std::vector<double> rad(g.size()), amp(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        rad[i] = g.dual_radius(i);
        amp[i] = std::sqrt(power[Eigen::Index(i)]);
    }
    out.fit = profile_fit(rad, amp, (g.N / 2) * g.dual_step(), opt);
    return out;
}

Table seminorm_table(const SampledFunction& u, int alpha_max, int beta_max) {
    if (alpha_max < 0 || beta_max < 0 || alpha_max > 8 || beta_max > 8)
        throw std::invalid_argument("seminorm orders capped at 8");
    if (u.grid.n != 1) throw std::invalid_argument("seminorm table is one-dimensional");
    const RVec x = RVec::NullaryExpr(Eigen::Index(u.grid.size()), [&](Eigen::Index i) { return u.grid.node(int(i)); });
    Table t(std::size_t(alpha_max + 1), std::vector<double>(std::size_t(beta_max + 1)));
    for (int b = 0; b <= beta_max; ++b) {
        auto d = spectral_derivative(u, b);
        CVec xa = d.values;
        for (int a = 0; a <= alpha_max; ++a) {
            t[std::size_t(a)][std::size_t(b)] = norm(SampledFunction(u.grid, xa));
            xa.array() *= x.array();
        }
    }
    return t;
}

SeminormConstants seminorm_constants(double nu, double mu, int n) {
    SeminormConstants c;
    c.c_space = 2.0 * std::pow(2.0 * std::max(1.0, nu * n), nu);
    c.c_freq = std::sqrt(2.0) * std::pow(2.0 * std::max(1.0, mu * n), mu);
    c.c = std::max(c.c_space, c.c_freq);
    return c;
}

Table seminorm_bounds_from_weights(const WeightReport& w, int alpha_max, int beta_max, int n) {
    if (!(w.lambda1 > 0.0 && w.lambda1 < 1.0 && w.lambda2 > 0.0 && w.lambda2 < 1.0))
        throw std::invalid_argument("seminorm bounds need weights in (0, 1)");
    auto c = seminorm_constants(w.nu, w.mu, n);
    Table t(std::size_t(alpha_max + 1), std::vector<double>(std::size_t(beta_max + 1)));
    for (int a = 0; a <= alpha_max; ++a)
        for (int b = 0; b <= beta_max; ++b) {
            double lg = (a + b) * std::log(c.c) - w.nu * a * std::log(w.lambda1) - w.mu * b * std::log(w.lambda2) +
                        w.nu * std::lgamma(a + 1.0) + w.mu * std::lgamma(b + 1.0);
            t[std::size_t(a)][std::size_t(b)] = std::exp(lg) * w.lambda3;
        }
    return t;
}

CoefficientFit coefficient_decay_fit(const RVec& magnitudes, double a, int n, double floor) {
    if (!(a >= 1.0)) throw std::invalid_argument("ratio parameter a must be >= 1");
    const double cmax = magnitudes.cwiseAbs().maxCoeff();
    std::vector<double> x, y;
    for (Eigen::Index j = 0; j < magnitudes.size(); ++j) {
        double c = std::abs(magnitudes[j]);
        if (c == 0.0 || c < floor * cmax) continue;
        x.push_back(std::pow(double(j), 1.0 / (a * n)));
        y.push_back(std::log(c));
    }
    if (x.size() < 20)
        throw std::runtime_error("coefficient fit degenerate: " + std::to_string(x.size()) +
                                 " coefficients above the noise floor, need 20");
    CoefficientFit f;
    f.line = fit_line(x, y);
    f.usable = int(x.size());
    return f;
}

CoefficientFit coefficient_decay_fit(const EigenSystem& es, const SampledFunction& g, double a) {
    return coefficient_decay_fit(RVec(es.coefficients(g).cwiseAbs()), a, es.grid.n);
}

FunctionalTrace weighted_functional_evolution(const EigenSystem& es, const SampledFunction& g, double c1,
                                              double sigma, const std::vector<double>& t_grid, double s) {
    if (!(c1 > 0.0)) throw std::invalid_argument("c1 must be positive");
    if (sigma < 0.0 || sigma > 1.0) throw std::invalid_argument("sigma must lie in [0, 1]");
    const Grid& grid = es.grid;
    const double exponent = sigma * derived_exponents(es.spec).spatial_agmon;
    const RVec radii = grid.radii();
    FunctionalTrace tr;
    tr.norm_g_squared = std::pow(norm(g), 2);
    double logF0 = 0.0;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        double t = t_grid[i];
        auto u = semigroup_apply(es, s, t, g);
        auto lm = weighted_log_mass(u.values, radii, c1 * t, exponent, outer_edge(grid, Side::space));
        FunctionalSample smp;
        smp.t = t;
        smp.log_F = std::log(grid.cell()) + lm.log_total;
        smp.overflow = smp.log_F > log_overflow;
        smp.F = smp.overflow ? std::numeric_limits<double>::infinity() : std::exp(smp.log_F);
        smp.outer_share = lm.outer_share;
        if (i == 0) logF0 = smp.log_F;
        tr.sup_ratio = std::max(tr.sup_ratio, std::exp(std::min(smp.log_F - logF0, log_overflow)));
        // mass piling up against the box edge means the continuum norm is not finite
        tr.blowup = tr.blowup || smp.overflow || smp.outer_share > 1e-6;
        tr.samples.push_back(smp);
    }
    return tr;
}

PrefactorProbe prefactor_probe(const EigenSystem& es, double s, double c1, const std::vector<double>& t_grid) {
    const Grid& g = es.grid;
    OperatorSpec spec = es.spec;
    spec.s = s;
    auto e = derived_exponents(spec);
    const int r = es.count();
    const Eigen::Index M = Eigen::Index(g.size());

    // samples below 1e-13 max per mode are rounding noise; the weights would amplify them past the signal
    Eigen::MatrixXd V = es.vectors;
    Eigen::MatrixXcd FV(M, r);
    for (int j = 0; j < r; ++j) {
        FV.col(j) = forward_transform(es.mode(j)).values;
        double vf = 1e-13 * V.col(j).cwiseAbs().maxCoeff(), qf = 1e-13 * FV.col(j).cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < M; ++i) {
            if (std::abs(V(i, j)) < vf) V(i, j) = 0.0;
            if (std::abs(FV(i, j)) < qf) FV(i, j) = 0.0;
        }
    }
    const RVec xr = g.radii(), qr = g.dual_radii();
    const double fscale = std::sqrt(g.dual_cell() / std::pow(2.0 * std::numbers::pi, g.n));

    PrefactorProbe out;
    out.predicted_exponent = e.prefactor_power;
    std::vector<double> lx, ly;
    for (double t : t_grid) {
        RVec damp = (-t * es.eigenvalues.array().pow(s)).exp();
        RVec wx = (c1 * t * (1.0 + xr.array().square()).pow(0.5 / e.nu)).min(log_overflow).exp();
        RVec wq = (c1 * t * (1.0 + qr.array().square()).pow(0.5 / e.mu)).min(log_overflow).exp();
        Eigen::MatrixXd Ax = std::sqrt(g.cell()) * wx.asDiagonal() * V * damp.asDiagonal();
        Eigen::MatrixXcd Aq = fscale * wq.asDiagonal() * FV * damp.asDiagonal();
        double nx = Eigen::BDCSVD<Eigen::MatrixXd>(Ax).singularValues()[0];
        double nq = Eigen::BDCSVD<Eigen::MatrixXcd>(Aq).singularValues()[0];
        out.t.push_back(t);
        out.space_norm.push_back(nx);
        out.frequency_norm.push_back(nq);
        lx.push_back(std::log(t));
        ly.push_back(std::log(nx + nq));
    }
    out.fit = fit_line(lx, ly);
    out.empirical_exponent = -out.fit.slope;
    return out;
}

}  // namespace shubin
