#include "shubin/weyl_calc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "shubin/parallel.hpp"
#include "shubin/rng.hpp"

namespace shubin {

namespace {

constexpr cplx I(0.0, 1.0);
// exp(-1/t) is below 1e-304 for t < 1/700
constexpr double bump_floor = 1.0 / 700.0;

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

cplx minus_i_pow(int l) {
    static const cplx table[4] = {1.0, -I, -1.0, I};
    return table[l & 3];
}

double bump(double t) { return t < bump_floor ? 0.0 : std::exp(-1.0 / t); }

Jet bump(const Jet& t) {
    if (t[0] < bump_floor) return Jet(t.order());
    return (t.reciprocal() * -1.0).exp();
}

double step(double a) {
    if (a <= 1.0) return 1.0;
    if (a >= 2.0) return 0.0;
    double A = bump(2.0 - a), B = bump(a - 1.0);
    return A / (A + B);
}

Jet step(const Jet& a) {
    if (a[0] <= 1.0) return Jet(a.order(), 1.0);
    if (a[0] >= 2.0) return Jet(a.order());
    Jet A = bump(-a + 2.0), B = bump(a + -1.0);
    return A / (A + B);
}

Jet chi(const Jet& y) {
    if (y[0] < 0.0) return -chi(-y);
    return y * step(y);
}

double japanese(double x) { return std::sqrt(1.0 + x * x); }

void require_1d(const Grid& g) {
    if (g.n != 1) throw std::invalid_argument("symbol calculus is implemented in one dimension");
}

}  // namespace

double CutoffFamily::base(double y) const { return y * step(std::abs(y)); }

double CutoffFamily::operator()(double y) const { return base(epsilon * y) / epsilon; }

Jet CutoffFamily::operator()(const Jet& y) const { return chi(y * epsilon) * (1.0 / epsilon); }

double CutoffFamily::base_slope_bound() {
    double best = 0.0;
    for (int i = 0; i <= 4000; ++i) best = std::max(best, std::abs(chi(Jet::variable(1, i * 5e-4)).derivative(1)));
    return best;
}

CutoffFamily make_cutoff(double epsilon) {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("cutoff epsilon must lie in (0, 1]");
    return CutoffFamily{epsilon};
}

double AgmonWeight::operator()(double x) const { return std::pow(1.0 + x * x, 0.5 * exponent()); }

Jet AgmonWeight::operator()(const Jet& x) const { return (x * x + 1.0).pow(0.5 * exponent()); }

AgmonWeight make_weight(double sigma, int k, int m) {
    if (!(sigma >= 0.0 && sigma <= 1.0)) throw std::invalid_argument("weight sigma must lie in [0, 1]");
    if (k < 1 || m < 1) throw std::invalid_argument("weight needs k, m >= 1");
    return AgmonWeight{sigma, k, m};
}

std::vector<double> weight_derivative_bounds(const AgmonWeight& w, const Grid& g, int max_order) {
    std::vector<double> out(std::size_t(max_order + 1), 0.0);
    for (int i = 0; i < g.N; ++i) {
        double x = g.node(i);
        Jet j = w(Jet::variable(max_order, x));
        for (int r = 0; r <= max_order; ++r)
            out[std::size_t(r)] =
                std::max(out[std::size_t(r)], std::abs(j.derivative(r)) / std::pow(japanese(x), w.exponent() - r));
    }
    return out;
}

// ---- XField ----

XField XField::constant(const Grid& g, cplx c, int order) {
    XField f{g, std::vector<CVec>(std::size_t(order + 1), CVec::Zero(g.N))};
    f.d[0].setConstant(c);
    return f;
}

XField XField::from_samples(const SampledFunction& a, int order) {
    require_1d(a.grid);
    XField f{a.grid, {}};
    for (int l = 0; l <= order; ++l) f.d.push_back(spectral_derivative(a, l).values);
    return f;
}

XField XField::from_weight(const Grid& g, const AgmonWeight& w, const CutoffFamily& c, int order) {
    require_1d(g);
    XField f = constant(g, 0.0, order);
    for (int i = 0; i < g.N; ++i) {
        Jet j = c(w(Jet::variable(order, g.node(i))));
        for (int l = 0; l <= order; ++l) f.d[std::size_t(l)][i] = j.derivative(l);
    }
    return f;
}

XField XField::derivative(int l) const {
    if (l > order()) throw std::domain_error("derivative order exceeds the carried jet");
    return XField{grid, std::vector<CVec>(d.begin() + l, d.end())};
}

XField XField::operator+(const XField& o) const {
    int r = std::min(order(), o.order());
    XField f{grid, {}};
    for (int l = 0; l <= r; ++l) f.d.push_back(d[std::size_t(l)] + o.d[std::size_t(l)]);
    return f;
}

XField XField::operator-(const XField& o) const { return *this + o * cplx(-1.0); }

XField XField::operator*(const XField& o) const {
    int r = std::min(order(), o.order());
    XField f = constant(grid, 0.0, r);
    for (int l = 0; l <= r; ++l)
        for (int i = 0; i <= l; ++i)
            f.d[std::size_t(l)].array() +=
                binomial(l, i) * d[std::size_t(i)].array() * o.d[std::size_t(l - i)].array();
    return f;
}

XField XField::operator*(cplx s) const {
    XField f = *this;
    for (auto& v : f.d) v *= s;
    return f;
}

// ---- PolySymbol ----

PolySymbol PolySymbol::xi_derivative(int beta) const {
    int deg = degree();
    PolySymbol r{grid, {}};
    if (beta > deg) {
        r.coeffs.push_back(XField::constant(grid, 0.0, coeffs[0].order()));
        return r;
    }
    for (int q = 0; q <= deg - beta; ++q)
        r.coeffs.push_back(coeffs[std::size_t(q + beta)] * cplx(factorial(q + beta) / factorial(q)));
    return r;
}

cplx PolySymbol::evaluate(int node, double xi, int alpha, int beta) const {
    cplx acc = 0.0;
    for (int p = degree(); p >= beta; --p) {
        const XField& c = coeffs[std::size_t(p)];
        if (alpha > c.order()) throw std::domain_error("derivative order exceeds the carried jet");
        acc = acc * xi + c.d[std::size_t(alpha)][node] * (factorial(p) / factorial(p - beta));
    }
    return acc;
}

PolySymbol PolySymbol::operator+(const PolySymbol& o) const {
    const PolySymbol& big = degree() >= o.degree() ? *this : o;
    const PolySymbol& small = degree() >= o.degree() ? o : *this;
    PolySymbol r = big;
    for (int p = 0; p <= small.degree(); ++p)
        r.coeffs[std::size_t(p)] = r.coeffs[std::size_t(p)] + small.coeffs[std::size_t(p)];
    return r;
}

PolySymbol PolySymbol::operator-(const PolySymbol& o) const {
    PolySymbol neg = o;
    for (auto& c : neg.coeffs) c = c * cplx(-1.0);
    return *this + neg;
}

PolySymbol xi_power(const Grid& g, int p, int order) {
    require_1d(g);
    PolySymbol r{g, std::vector<XField>(std::size_t(p + 1), XField::constant(g, 0.0, order))};
    r.coeffs[std::size_t(p)] = XField::constant(g, 1.0, order);
    return r;
}

PolySymbol times(const XField& a, const PolySymbol& P) {
    PolySymbol r{P.grid, {}};
    for (const auto& c : P.coeffs) r.coeffs.push_back(a * c);
    return r;
}

namespace {

PolySymbol moyal(const XField& a, const PolySymbol& P, bool a_left) {
    int deg = P.degree();
    if (deg > max_symbol_degree) throw std::domain_error("symbol degree exceeds the supported range");
    if (a.order() < deg) throw std::domain_error("x-symbol carries too few derivatives for the expansion");
    PolySymbol r = times(a, P);
    for (int b = 1; b <= deg; ++b) {
        double sign = (a_left && (b & 1)) ? -1.0 : 1.0;
        cplx c = sign / (std::pow(2.0, b) * factorial(b)) * minus_i_pow(b);
        r = r + times(a.derivative(b) * c, P.xi_derivative(b));
    }
    return r;
}

}  // namespace

PolySymbol moyal_mul_x_poly(const XField& a, const PolySymbol& P) { return moyal(a, P, true); }

PolySymbol moyal_mul_poly_x(const PolySymbol& P, const XField& a) { return moyal(a, P, false); }

std::vector<PolySymbol> commutator_tower(const XField& phi, int m) {
    if (m < 1 || m > 3) throw std::invalid_argument("commutator tower supports m = 1..3");
    if (phi.order() < 2 * m) throw std::domain_error("weight carries too few derivatives for the tower");
    std::vector<PolySymbol> tower{xi_power(phi.grid, 2 * m, phi.order())};
    for (int j = 0; j < 2 * m; ++j) {
        const PolySymbol& s = tower.back();
        PolySymbol next{phi.grid, {}};
        for (int l = 1; l <= 2 * m - j; l += 2) {
            cplx c = -std::pow(2.0, -(l - 1)) / factorial(l) * minus_i_pow(l);
            PolySymbol term = times(phi.derivative(l) * c, s.xi_derivative(l));
            next = next.coeffs.empty() ? term : next + term;
        }
        next.coeffs.resize(std::size_t(2 * m - j));  // top coefficient of degree 2m-j-1
        tower.push_back(std::move(next));
    }
    return tower;
}

double tower_moyal_discrepancy(const XField& phi, const std::vector<PolySymbol>& tower) {
    double worst = 0.0;
    for (std::size_t j = 0; j + 1 < tower.size(); ++j) {
        PolySymbol br = moyal_mul_x_poly(phi, tower[j]) - moyal_mul_poly_x(tower[j], phi);
        const PolySymbol& s = tower[j + 1];
        double scale = 0.0;
        for (const auto& c : s.coeffs) scale = std::max(scale, c.values().cwiseAbs().maxCoeff());
        if (scale == 0.0) scale = 1.0;
        for (int p = 0; p <= br.degree(); ++p) {
            CVec ref = p <= s.degree() ? s.coeffs[std::size_t(p)].values() : CVec::Zero(phi.grid.N);
            worst = std::max(worst, (br.coeffs[std::size_t(p)].values() - ref).cwiseAbs().maxCoeff() / scale);
        }
    }
    return worst;
}

double SymbolClassReport::ratio(int j, double eps, int alpha, int beta) const {
    for (const auto& e : entries)
        if (e.j == j && e.epsilon == eps && e.alpha == alpha && e.beta == beta) return e.ratio;
    throw std::out_of_range("no such symbol class entry");
}

SymbolClassReport symbol_class_report(const Grid& g, double sigma, int k, int m, const std::vector<double>& epsilons,
                                      double xi_max, int xi_samples) {
    require_1d(g);
    if (epsilons.empty()) throw std::invalid_argument("empty epsilon list");
    if (xi_samples < 2 || !(xi_max > 0.0)) throw std::invalid_argument("bad xi sample");
    SymbolClassReport rep{sigma, k, m, epsilons, xi_max, xi_samples, {}, 0.0};
    AgmonWeight w = make_weight(sigma, k, m);
    const int order = 4 * m + 4;
    std::vector<double> xis(static_cast<std::size_t>(xi_samples));
    for (int i = 0; i < xi_samples; ++i) xis[std::size_t(i)] = xi_max * i / (xi_samples - 1);

    for (double eps : epsilons) {
        auto tower = commutator_tower(XField::from_weight(g, w, make_cutoff(eps), order), m);
        for (int j = 1; j <= 2 * m; ++j)
            for (int alpha = 0; alpha <= 2; ++alpha)
                for (int beta = 0; alpha + beta <= 2; ++beta) {
                    std::vector<double> node_sup(std::size_t(g.N), 0.0);
                    parallel_for(std::size_t(g.N), [&](std::size_t i) {
                        double xw = std::pow(japanese(g.node(int(i))), sigma * k * j / double(m));
                        double best = 0.0;
                        for (double xi : xis) {
                            double v = std::abs(tower[std::size_t(j)].evaluate(int(i), xi, alpha, beta));
                            best = std::max(best, v / (xw * std::pow(japanese(xi), 2 * m - j - beta)));
                        }
                        node_sup[i] = best;
                    });
                    rep.entries.push_back({j, eps, alpha, beta, *std::max_element(node_sup.begin(), node_sup.end())});
                }
    }
    // uniformity relative to eps = 1 (or the largest eps supplied)
    double ref_eps = *std::max_element(epsilons.begin(), epsilons.end());
    for (const auto& e : rep.entries) {
        double ref = rep.ratio(e.j, ref_eps, e.alpha, e.beta);
        if (ref == 0.0 && e.ratio == 0.0) continue;
        if (ref == 0.0) {
            // identically zero at the reference but not here: only rounding-level values are tolerated
            if (e.ratio > 1e-12) rep.uniformity = std::numeric_limits<double>::infinity();
            continue;
        }
        rep.uniformity = std::max(rep.uniformity, e.ratio / ref);
    }
    return rep;
}

std::vector<CVec> weyl_to_standard(const PolySymbol& P) {
    int deg = P.degree();
    std::vector<CVec> out(std::size_t(deg + 1), CVec::Zero(P.grid.N));
    for (int a = 0; a <= deg; ++a) {
        PolySymbol Q = P.xi_derivative(a);
        cplx c = std::pow(0.5, a) / factorial(a) * minus_i_pow(a);
        for (int p = 0; p <= deg - a; ++p) {
            const XField& f = Q.coeffs[std::size_t(p)];
            if (a > f.order()) throw std::domain_error("symbol carries too few x-derivatives");
            out[std::size_t(p)] += c * f.d[std::size_t(a)];
        }
    }
    return out;
}

SampledFunction apply_standard(const std::vector<CVec>& coeffs, const SampledFunction& v) {
    require_1d(v.grid);
    SampledFunction r(v.grid);
    for (std::size_t p = 0; p < coeffs.size(); ++p) {
        if (coeffs[p].cwiseAbs().maxCoeff() == 0.0) continue;
        r.values.array() += coeffs[p].array() * (minus_i_pow(int(p)) * spectral_derivative(v, int(p)).values).array();
    }
    return r;
}

SampledFunction laplacian_power(const SampledFunction& v, int m) {
    const Grid& g = v.grid;
    CVec mult(Eigen::Index(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i) mult[Eigen::Index(i)] = std::pow(g.dual_radius(i), 2 * m);
    return fourier_multiply(v, mult);
}

namespace {

SampledFunction ad_recursion(const SampledFunction& phi, int m, int j, const SampledFunction& v) {
    if (j == 0) return laplacian_power(v, m);
    SampledFunction pv(v.grid, (phi.values.array() * v.values.array()).matrix());
    SampledFunction a = ad_recursion(phi, m, j - 1, v);
    SampledFunction b = ad_recursion(phi, m, j - 1, pv);
    return SampledFunction(v.grid, (phi.values.array() * a.values.array() - b.values.array()).matrix());
}

// ad_{phi + c} = ad_phi; centring the range of phi keeps the cancelling terms small
SampledFunction centred(const SampledFunction& phi) {
    const RVec re = phi.values.real();
    SampledFunction out = phi;
    out.values.array() -= 0.5 * (re.maxCoeff() + re.minCoeff());
    return out;
}

}  // namespace

SampledFunction ad_apply(const SampledFunction& phi, int m, int j, const SampledFunction& v) {
    if (j < 0) throw std::invalid_argument("negative commutator order");
    return ad_recursion(centred(phi), m, j, v);
}

ConjugationResult conjugation_check(const SampledFunction& phi, int m, double t, const SampledFunction& v) {
    ConjugationResult r;
    double top = t * phi.values.cwiseAbs().maxCoeff();
    if (top > 700.0) {
        r.overflow = true;
        r.rel_error = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    // e^{t(phi - c)} A e^{-t(phi - c)} is the same operator
    const SampledFunction pc = centred(phi);
    CVec up = (t * pc.values.array()).exp().matrix();
    CVec down = (-t * pc.values.array()).exp().matrix();
    SampledFunction w(v.grid, (down.array() * v.values.array()).matrix());
    SampledFunction lw = laplacian_power(w, m);
    r.lhs = SampledFunction(v.grid, (up.array() * lw.values.array()).matrix());
    r.rhs = SampledFunction(v.grid);
    double c = 1.0;
    for (int j = 0; j <= 2 * m; ++j) {
        if (j > 0) c *= t / j;
        r.rhs.values += c * ad_recursion(pc, m, j, v).values;
    }
    double den = r.lhs.norm();
    double diff = (r.lhs.values - r.rhs.values).norm() * std::sqrt(v.grid.cell());
    r.rel_error = den > 0.0 ? diff / den : diff;
    return r;
}

std::vector<std::pair<std::string, std::function<cplx(double)>>> garding_family(const Grid& g, int family_size,
                                                                                 std::uint64_t seed) {
    if (family_size < 1) throw std::invalid_argument("empty Garding family");
    std::vector<std::pair<std::string, std::function<cplx(double)>>> fam;
    Rng rng(seed, 0x6761726469ULL);
    const double K = garding_band;
    for (int i = 0; i < family_size; ++i) {
        double c = (rng.uniform() - 0.5) * g.L;
        double w = 0.3 + 2.7 * rng.uniform();
        std::ostringstream name;
        name.precision(4);
        if (i % 4 != 3) {
            double kappa = 0.5 * K * rng.uniform();
            name << "gauss c=" << c << " w=" << w << " k=" << kappa;
            fam.emplace_back(name.str(), [=](double x) {
                double y = (x - c) / w;
                return std::exp(-0.5 * y * y) * std::exp(I * kappa * x);
            });
        } else {
            std::vector<cplx> a;
            for (int q = -16; q <= 16; ++q) a.emplace_back(rng.normal(), rng.normal());
            name << "trig c=" << c << " w=" << w;
            fam.emplace_back(name.str(), [=](double x) {
                cplx acc = 0.0;
                for (int q = -16; q <= 16; ++q) acc += a[std::size_t(q + 16)] * std::exp(I * (q * K / 16.0) * x);
                double y = (x - c) / w;
                return acc * std::exp(-0.5 * y * y);
            });
        }
    }
    return fam;
}

GardingResult garding_probe(const Grid& g, double sigma, int k, int m, double epsilon, double t, int family_size,
                            std::uint64_t seed) {
    require_1d(g);
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("Garding probe needs t in [0, 1]");
    AgmonWeight w = make_weight(sigma, k, m);
    CutoffFamily cut = make_cutoff(epsilon);
    RVec phi(g.N), xw(g.N);
    for (int i = 0; i < g.N; ++i) {
        double x = g.node(i);
        phi[i] = cut(w(x));
        xw[i] = std::pow(japanese(x), sigma * k);
    }
    auto fam = garding_family(g, family_size, seed);
    GardingResult res;
    res.family_size = family_size;
    res.ratios.assign(std::size_t(family_size), 0.0);
    std::vector<char> over(std::size_t(family_size), 0);
    bool overflow = t * phi.cwiseAbs().maxCoeff() > 700.0;
    parallel_for(std::size_t(family_size), [&](std::size_t i) {
        if (overflow) {
            over[i] = 1;
            res.ratios[i] = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        SampledFunction v = sample(fam[i].second, g);
        SampledFunction e(g, ((-t * phi.array()).exp().cast<cplx>() * v.values.array()).matrix());
        SampledFunction lw = laplacian_power(e, m);
        SampledFunction lhs(g, ((t * phi.array()).exp().cast<cplx>() * lw.values.array()).matrix());
        double Q = inner(lhs, v).real();
        SampledFunction wv(g, (xw.cast<cplx>().array() * v.values.array()).matrix());
        double nv = v.norm(), nw = wv.norm();
        res.ratios[i] = -Q / (nv * nv + t * nw * nw);
    });
    for (int i = 0; i < family_size; ++i) {
        if (over[std::size_t(i)]) {
            ++res.overflowed;
            continue;
        }
        double r = res.ratios[std::size_t(i)];
        if (res.worst < 0 || r > res.ratios[std::size_t(res.worst)]) res.worst = i;
    }
    if (res.worst >= 0) {
        res.c0_required = std::max(0.0, res.ratios[std::size_t(res.worst)]);
        res.worst_description = fam[std::size_t(res.worst)].first;
    }
    return res;
}

// ---- anti-Wick ----

namespace {

double window(double d) { return std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * d * d); }

double wrap(double d, double L) {
    d = std::fmod(d + L, 2.0 * L);
    if (d < 0.0) d += 2.0 * L;
    return d - L;
}

}  // namespace

PhaseField stft(const SampledFunction& u) {
    const Grid& g = u.grid;
    require_1d(g);
    PhaseField F(g.N, g.N);
    parallel_for(std::size_t(g.N), [&](std::size_t a) {
        double y = g.node(int(a));
        SampledFunction w(g);
        for (int i = 0; i < g.N; ++i) w.values[i] = u.values[i] * window(wrap(g.node(i) - y, g.L));
        F.row(Eigen::Index(a)) = forward_transform(w).values.transpose();
    });
    return F;
}

SampledFunction stft_adjoint(const Grid& g, const PhaseField& F) {
    require_1d(g);
    if (F.rows() != g.N || F.cols() != g.N) throw std::invalid_argument("phase field does not match the grid");
    std::vector<CVec> parts(std::size_t(g.N));
    parallel_for(std::size_t(g.N), [&](std::size_t a) {
        double y = g.node(int(a));
        SampledFunction row(g, F.row(Eigen::Index(a)).transpose());
        CVec r = inverse_transform(row).values;
        for (int i = 0; i < g.N; ++i) r[i] *= g.h() * window(wrap(g.node(i) - y, g.L));
        parts[a] = std::move(r);
    });
    SampledFunction out(g);
    for (const auto& p : parts) out.values += p;
    return out;
}

SampledFunction anti_wick_apply(const PhaseField& a, const SampledFunction& u) {
    PhaseField F = stft(u);
    if (a.rows() != F.rows() || a.cols() != F.cols()) throw std::invalid_argument("symbol does not match the grid");
    return stft_adjoint(u.grid, a.cwiseProduct(F));
}

namespace {

void check_poly(const PhaseSymbol& a) {
    for (const auto& [ij, c] : a.poly)
        if (ij.first < 0 || ij.second < 0 || ij.first + ij.second > 4)
            throw std::domain_error("anti-Wick symbol growth beyond degree 4 is unsupported");
}

// E[(z + Z)^i], Z ~ N(0, 1/2)
double gaussian_moment(double z, int i) {
    static const double central[5] = {1.0, 0.0, 0.5, 0.0, 0.75};
    double acc = 0.0;
    for (int r = 0; r <= i; ++r) acc += binomial(i, r) * std::pow(z, i - r) * central[r];
    return acc;
}

}  // namespace

Eigen::MatrixXd sample_phase(const Grid& g, const PhaseSymbol& a) {
    require_1d(g);
    check_poly(a);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g.N, g.N);
    for (const auto& [ij, c] : a.poly)
        for (int r = 0; r < g.N; ++r)
            for (int q = 0; q < g.N; ++q) out(r, q) += c * std::pow(g.node(r), ij.first) * std::pow(g.dual(q), ij.second);
    if (a.sampled) {
        if (a.sampled->rows() != g.N || a.sampled->cols() != g.N)
            throw std::invalid_argument("sampled symbol does not match the grid");
        out += *a.sampled;
    }
    return out;
}

Eigen::MatrixXd anti_wick_weyl_symbol(const Grid& g, const PhaseSymbol& a) {
    require_1d(g);
    check_poly(a);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g.N, g.N);
    for (const auto& [ij, c] : a.poly)
        for (int r = 0; r < g.N; ++r)
            for (int q = 0; q < g.N; ++q)
                out(r, q) += c * gaussian_moment(g.node(r), ij.first) * gaussian_moment(g.dual(q), ij.second);
    if (a.sampled) {
        if (a.sampled->rows() != g.N || a.sampled->cols() != g.N)
            throw std::invalid_argument("sampled symbol does not match the grid");
        const double norm = 1.0 / std::sqrt(std::numbers::pi);
        Eigen::MatrixXd Kx(g.N, g.N), Kxi(g.N, g.N);
        for (int r = 0; r < g.N; ++r)
            for (int s = 0; s < g.N; ++s) {
                double dx = g.node(r) - g.node(s), dq = g.dual(r) - g.dual(s);
                Kx(r, s) = g.h() * norm * std::exp(-dx * dx);
                Kxi(r, s) = g.dual_step() * norm * std::exp(-dq * dq);
            }
        out += Kx * (*a.sampled) * Kxi.transpose();
    }
    return out;
}

}  // namespace shubin
