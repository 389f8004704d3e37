#include <doctest.h>

#include <cmath>

#include "shubin/rng.hpp"
#include "shubin/weyl_calc.hpp"

using namespace shubin;

namespace {

constexpr cplx I(0.0, 1.0);

const Grid& fine() {
    static const Grid g = make_grid(1, 1024, 8.0);
    return g;
}

SampledFunction bump_profile(const Grid& g, double c = 0.3, double w = 1.0) {
    return sample([=](double x) { return cplx(std::exp(-0.5 * (x - c) * (x - c) / (w * w)) * (1.0 + 0.2 * std::sin(x))); }, g);
}

double rel(const CVec& a, const CVec& b) { return (a - b).norm() / b.norm(); }

// the cutoff has large high derivatives; operator-side commutators need h ~ 0.004 to reach 1e-8
const Grid& resolved() {
    static const Grid g = make_grid(1, 4096, 8.0);
    return g;
}

XField weight_field(double sigma, int k, int m, double eps, const Grid& g = fine()) {
    return XField::from_weight(g, make_weight(sigma, k, m), make_cutoff(eps), 4 * m + 4);
}

}  // namespace

TEST_CASE("jet arithmetic reproduces closed-form derivatives") {
    const double x = 0.7;
    Jet X = Jet::variable(4, x);
    Jet f = (X * X + 1.0).pow(1.5);
    double r = 1 + x * x;
    CHECK(f.derivative(0) == doctest::Approx(std::pow(r, 1.5)));
    CHECK(f.derivative(1) == doctest::Approx(3 * x * std::sqrt(r)));
    CHECK(f.derivative(2) == doctest::Approx(3 * std::sqrt(r) + 3 * x * x / std::sqrt(r)));
    Jet e = X.log().exp();
    CHECK(e[0] == doctest::Approx(x));
    CHECK(e[1] == doctest::Approx(1.0));
    CHECK(std::abs(e[2]) < 1e-14);
    Jet q = X / (X + 1.0);  // x/(1+x): second derivative -2/(1+x)^3
    CHECK(q.derivative(2) == doctest::Approx(-2 / std::pow(1 + x, 3)));
}

TEST_CASE("cutoff family") {
    CHECK(make_cutoff(1.0)(0.5) == doctest::Approx(0.5));
    CHECK(make_cutoff(0.5)(1.5) == doctest::Approx(1.5));
    for (double eps : {1.0, 0.5, 0.1}) {
        auto c = make_cutoff(eps);
        CHECK(c(2.0 / eps) == 0.0);
        CHECK(c(3.0 / eps) == 0.0);
        CHECK(c(-0.7 / eps) == doctest::Approx(-0.7 / eps));
        CHECK(c(-1.4 / eps) == doctest::Approx(-c(1.4 / eps)));
    }
    CHECK_THROWS_AS(make_cutoff(0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_cutoff(1.5), std::invalid_argument);

    // the base cutoff is nonnegative on [0, inf) and below the identity
    auto c = make_cutoff(1.0);
    for (int i = 0; i <= 300; ++i) {
        double y = 0.01 * i;
        CHECK(c.base(y) >= 0.0);
        CHECK(c.base(y) <= y + 1e-15);
    }
}

TEST_CASE("cutoff jets agree with finite differences") {
    auto c = make_cutoff(0.5);
    for (double y : {2.2, 2.9, 3.5}) {
        double d = 1e-5;
        double fd = (c(y + d) - c(y - d)) / (2 * d);
        CHECK(c(Jet::variable(2, y)).derivative(1) == doctest::Approx(fd).epsilon(1e-7));
    }
    double s = CutoffFamily::base_slope_bound();
    CHECK(s >= 1.0);
    // chi_eps'(y) = chi'(eps y), so the slope bound is eps-independent
    for (double eps : {0.5, 0.1})
        for (int i = 0; i <= 400; ++i)
            CHECK(std::abs(make_cutoff(eps)(Jet::variable(1, i * 0.05 / eps)).derivative(1)) <= s + 1e-12);
}

TEST_CASE("Agmon weight and its cutoff") {
    auto w = make_weight(1.0, 1, 1);
    CHECK(w(0.0) == 1.0);
    CHECK(w(2.0) == doctest::Approx(5.0));
    auto bounds = weight_derivative_bounds(make_weight(1.0, 2, 1), fine(), 4);
    for (double b : bounds) CHECK(std::isfinite(b));
    // phi_eps <= phi
    for (double eps : {1.0, 0.25})
        for (int i = 0; i < fine().N; i += 7) {
            double x = fine().node(i);
            CHECK(make_cutoff(eps)(w(x)) <= w(x) + 1e-12);
        }
    auto phi = weight_field(1.0, 1, 1, 0.25);
    for (int i : {100, 400, 600}) {
        double x = fine().node(i), d = 1e-5;
        auto f = [&](double y) { return make_cutoff(0.25)(w(y)); };
        CHECK(phi.d[1][i].real() == doctest::Approx((f(x + d) - f(x - d)) / (2 * d)).epsilon(1e-6));
    }
}

TEST_CASE("Moyal products with xi^2") {
    const Grid& g = fine();
    auto cs = sample([](double x) { return cplx(std::exp(-x * x)); }, g);
    XField c = XField::from_samples(cs, 4);
    auto P = xi_power(g, 2, 4);
    auto left = moyal_mul_x_poly(c, P);
    auto right = moyal_mul_poly_x(P, c);
    REQUIRE(left.degree() == 2);
    CVec c1(g.N), c2(g.N), c0(g.N);
    for (int i = 0; i < g.N; ++i) {
        double x = g.node(i), e = std::exp(-x * x);
        c0[i] = e;
        c1[i] = -2 * x * e;
        c2[i] = (4 * x * x - 2) * e;
    }
    // c # xi^2 = c xi^2 + i c' xi - c''/4
    CHECK((left.coeffs[2].values() - c0).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((left.coeffs[1].values() - I * c1).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((left.coeffs[0].values() + 0.25 * c2).cwiseAbs().maxCoeff() < 1e-10);
    // (c # xi^2) - (xi^2 # c) = 2 i c' xi
    auto br = left - right;
    CHECK(br.coeffs[2].values().cwiseAbs().maxCoeff() < 1e-15);
    CHECK((br.coeffs[1].values() - 2.0 * I * c1).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(br.coeffs[0].values().cwiseAbs().maxCoeff() < 1e-15);

    auto k = XField::constant(g, 3.0, 4);
    auto prod = moyal_mul_x_poly(k, P);
    CHECK((prod.coeffs[2].values().array() - 3.0).abs().maxCoeff() == 0.0);
    CHECK(prod.coeffs[1].values().cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(moyal_mul_x_poly(XField::from_samples(cs, 1), P), std::domain_error);
    CHECK_THROWS_AS(moyal_mul_x_poly(c, xi_power(g, max_symbol_degree + 1, 4)), std::domain_error);
}

TEST_CASE("commutator tower for m = 1 matches the hand formulas") {
    for (double eps : {1.0, 0.25}) {
        auto phi = weight_field(1.0, 1, 1, eps);
        auto tower = commutator_tower(phi, 1);
        REQUIRE(tower.size() == 3);
        const CVec& d1 = phi.d[1];
        CHECK(tower[1].degree() == 1);
        CHECK((tower[1].coeffs[1].values() - 2.0 * I * d1).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(tower[1].coeffs[0].values().cwiseAbs().maxCoeff() < 1e-10);
        CHECK(tower[2].degree() == 0);
        CHECK((tower[2].coeffs[0].values() + 2.0 * d1.cwiseAbs2()).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("tower degrees and Moyal consistency") {
    for (int m = 1; m <= 3; ++m) {
        auto phi = weight_field(1.0, 1, m, 0.5);
        auto tower = commutator_tower(phi, m);
        REQUIRE(int(tower.size()) == 2 * m + 1);
        for (int j = 0; j <= 2 * m; ++j) CHECK(tower[std::size_t(j)].degree() == 2 * m - j);
        CHECK(tower_moyal_discrepancy(phi, tower) < 1e-10);
    }
    CHECK_THROWS_AS(commutator_tower(weight_field(1.0, 1, 1, 1.0), 4), std::invalid_argument);
}

TEST_CASE("Weyl to standard quantization") {
    const Grid& g = fine();
    auto v = bump_profile(g);
    // xi^2 -> -v''
    auto a = apply_standard(weyl_to_standard(xi_power(g, 2, 4)), v);
    CHECK(rel(a.values, (-spectral_derivative(v, 2).values).eval()) < 1e-12);

    // 2 i c' xi -> 2 c' v' + c'' v
    auto cs = sample([](double x) { return cplx(std::exp(-x * x)); }, g);
    XField c = XField::from_samples(cs, 4);
    PolySymbol P{g, {XField::constant(g, 0.0, 3), c.derivative(1) * (2.0 * I)}};
    auto b = apply_standard(weyl_to_standard(P), v);
    CVec ref = 2.0 * c.d[1].cwiseProduct(spectral_derivative(v, 1).values) + c.d[2].cwiseProduct(v.values);
    CHECK(rel(b.values, ref) < 1e-10);

    // real even symbol c(x) xi^2 + c(x): symmetric action
    PolySymbol R{g, {c, XField::constant(g, 0.0, 4), c}};
    auto coeffs = weyl_to_standard(R);
    auto u = bump_profile(g, -0.5, 0.8), w = bump_profile(g, 0.7, 1.3);
    cplx l = inner(apply_standard(coeffs, u), w), r = inner(u, apply_standard(coeffs, w));
    CHECK(std::abs(l - r) < 1e-10 * std::abs(l));
}

TEST_CASE("operator-level commutators") {
    const Grid& g = resolved();
    auto v = bump_profile(g);
    auto phi = weight_field(1.0, 1, 1, 1.0, g);
    SampledFunction ph(g, phi.values());
    CHECK(ad_apply(ph, 1, 0, v).values == laplacian_power(v, 1).values);
    // m = 1, j = 2: -2 phi'^2 v
    auto a2 = ad_apply(ph, 1, 2, v);
    CVec ref = -2.0 * phi.d[1].cwiseAbs2().cast<cplx>().cwiseProduct(v.values);
    CHECK(rel(a2.values, ref) < 1e-8);
    // exact zero in the continuum; the discrete residue is resolution-limited
    for (double eps : {1.0, 0.25}) {
        SampledFunction pm(g, weight_field(1.0, 1, 1, eps, g).values());
        CHECK(ad_apply(pm, 1, 3, v).norm() < 1e-7 * laplacian_power(v, 1).norm());
    }
}

TEST_CASE("symbol quantization matches the operator recursion") {
    const Grid& g = resolved();
    for (int m : {1}) {
        for (double eps : {1.0, 0.25}) {
            auto phi = weight_field(1.0, 1, m, eps, g);
            auto tower = commutator_tower(phi, m);
            SampledFunction ph(g, phi.values());
            for (double c : {-1.0, 0.4}) {
                auto v = bump_profile(g, c, 0.9);
                for (int j = 1; j <= 2 * m; ++j) {
                    auto lhs = apply_standard(weyl_to_standard(tower[std::size_t(j)]), v);
                    auto rhs = ad_apply(ph, m, j, v);
                    CHECK(rel(lhs.values, rhs.values) < 1e-8);
                }
            }
        }
    }
}

TEST_CASE("m = 2 operator recursion converges to the symbol under refinement") {
    auto err = [](int N) {
        Grid g = make_grid(1, N, 8.0);
        auto phi = weight_field(1.0, 1, 2, 1.0, g);
        auto tower = commutator_tower(phi, 2);
        SampledFunction ph(g, phi.values());
        auto v = bump_profile(g);
        double e = 0;
        for (int j = 1; j <= 4; ++j)
            e = std::max(e, rel(apply_standard(weyl_to_standard(tower[std::size_t(j)]), v).values, ad_apply(ph, 2, j, v).values));
        return e;
    };
    double e1 = err(512), e2 = err(1024), e3 = err(2048);
    MESSAGE("m = 2 symbol/operator gap: " << e1 << " " << e2 << " " << e3);
    CHECK(e2 < 0.1 * e1);
    CHECK(e3 < 0.1 * e2);
}

TEST_CASE("conjugation identity") {
    const Grid& g = resolved();
    auto v = bump_profile(g);
    auto phi = weight_field(1.0, 1, 1, 1.0, g);
    SampledFunction ph(g, phi.values());
    auto r0 = conjugation_check(ph, 1, 0.0, v);
    CHECK(r0.lhs.values == laplacian_power(v, 1).values);
    CHECK(r0.rel_error < 1e-14);

    // m = 1 by hand: -v'' + 2t phi' v' + t phi'' v - t^2 phi'^2 v
    const double t = 0.3;
    auto r = conjugation_check(ph, 1, t, v);
    CVec hand = -spectral_derivative(v, 2).values + 2 * t * phi.d[1].cwiseProduct(spectral_derivative(v, 1).values) +
                t * phi.d[2].cwiseProduct(v.values) - t * t * phi.d[1].cwiseAbs2().cast<cplx>().cwiseProduct(v.values);
    CHECK(rel(r.lhs.values, hand) < 1e-8);
    CHECK(r.rel_error < 1e-8);

    Grid g2 = make_grid(1, 1024, 10.0);
    auto p2 = weight_field(1.0, 1, 2, 1.0, g2);
    CHECK(conjugation_check(SampledFunction(g2, p2.values()), 2, 0.1, bump_profile(g2)).rel_error < 1e-7);

    SampledFunction huge(g, CVec::Constant(g.N, 1e4));
    CHECK(conjugation_check(huge, 1, 0.1, v).overflow);
}

TEST_CASE("symbol class report bookkeeping") {
    Grid g = make_grid(1, 256, 8.0);
    auto rep = symbol_class_report(g, 1.0, 1, 1, {1.0, 0.5}, 32.0, 321);
    // j = 2 has xi-degree 0: any xi-derivative vanishes
    CHECK(rep.ratio(2, 1.0, 0, 1) == 0.0);
    CHECK(rep.ratio(2, 0.5, 1, 1) == 0.0);
    CHECK(rep.ratio(1, 1.0, 0, 2) == 0.0);
    for (const auto& e : rep.entries) CHECK(std::isfinite(e.ratio));
    CHECK(std::isfinite(rep.uniformity));

    auto dense = symbol_class_report(g, 1.0, 1, 1, {1.0, 0.5}, 32.0, 641);
    for (std::size_t i = 0; i < rep.entries.size(); ++i) {
        double a = rep.entries[i].ratio, b = dense.entries[i].ratio;
        if (b > 0) CHECK(std::abs(a - b) <= 0.01 * b);
    }
}

TEST_CASE("Garding probe") {
    Grid g = make_grid(1, 512, 8.0);
    auto r0 = garding_probe(g, 1.0, 1, 1, 1.0, 0.0, 100, 3);
    CHECK(r0.c0_required == 0.0);
    auto small = garding_probe(g, 1.0, 1, 1, 1.0, 0.5, 100, 3);
    auto large = garding_probe(g, 1.0, 1, 1, 1.0, 0.5, 300, 3);
    CHECK(std::isfinite(small.c0_required));
    CHECK(large.c0_required >= small.c0_required);
    CHECK(large.overflowed == 0);
    auto fam = garding_family(g, 8, 3);
    CHECK(fam.size() == 8);
    CHECK(fam[3].first.rfind("trig", 0) == 0);
    CHECK_THROWS(garding_probe(g, 1.0, 1, 1, 1.0, 1.5, 10, 3));
}

TEST_CASE("anti-Wick quantization") {
    Grid g = make_grid(1, 256, 8.0);
    auto u = bump_profile(g);
    PhaseField one = PhaseField::Ones(g.N, g.N);
    CHECK(rel(anti_wick_apply(one, u).values, u.values) < 1e-8);

    PhaseField xi2(g.N, g.N);
    for (int r = 0; r < g.N; ++r)
        for (int q = 0; q < g.N; ++q) xi2(r, q) = g.dual(q) * g.dual(q);
    CVec ref = -spectral_derivative(u, 2).values + 0.5 * u.values;
    CHECK(rel(anti_wick_apply(xi2, u).values, ref) < 1e-6);

    Rng rng(5, 0);
    double worst = 1.0;
    for (int s = 0; s < 20; ++s) {
        PhaseField a(g.N, g.N);
        for (int r = 0; r < g.N; ++r)
            for (int q = 0; q < g.N; ++q) a(r, q) = rng.uniform();
        auto w = noise(g, 5, std::uint64_t(s + 1));
        worst = std::min(worst, inner(anti_wick_apply(a, w), w).real());
    }
    CHECK(worst >= -1e-10);
}

TEST_CASE("anti-Wick Weyl symbols") {
    Grid g = make_grid(1, 128, 8.0);
    PhaseSymbol one;
    one.poly[{0, 0}] = 1.0;
    CHECK((anti_wick_weyl_symbol(g, one).array() - 1.0).abs().maxCoeff() < 1e-15);

    PhaseSymbol h;
    h.poly[{2, 0}] = 1.0;
    h.poly[{0, 2}] = 1.0;
    auto b = anti_wick_weyl_symbol(g, h);
    auto a = sample_phase(g, h);
    CHECK((b - a).array().abs().maxCoeff() == doctest::Approx(1.0));
    CHECK((b - a).array().abs().minCoeff() == doctest::Approx(1.0));

    // Gaussian e^{-x^2 - xi^2} smooths to (1/2) e^{-(x^2 + xi^2)/2}
    PhaseSymbol gs;
    Eigen::MatrixXd s(g.N, g.N);
    for (int r = 0; r < g.N; ++r)
        for (int q = 0; q < g.N; ++q) s(r, q) = std::exp(-g.node(r) * g.node(r) - g.dual(q) * g.dual(q));
    gs.sampled = s;
    auto bg = anti_wick_weyl_symbol(g, gs);
    double err = 0;
    for (int r = 0; r < g.N; ++r)
        for (int q = 0; q < g.N; ++q)
            err = std::max(err, std::abs(bg(r, q) - 0.5 * std::exp(-0.5 * (g.node(r) * g.node(r) + g.dual(q) * g.dual(q)))));
    CHECK(err < 1e-6);

    PhaseSymbol bad;
    bad.poly[{5, 0}] = 1.0;
    CHECK_THROWS_AS(anti_wick_weyl_symbol(g, bad), std::domain_error);
}
