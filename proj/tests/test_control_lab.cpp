#include <doctest.h>

#include <cmath>

#include "shubin/control_lab.hpp"
#include "shubin/rng.hpp"

using namespace shubin;

namespace {

const EigenSystem& harmonic() {
    static const EigenSystem es = eigensystem(assemble({1, 1, 1.0, 1}, make_grid(1, 512, 12.0)), 40);
    return es;
}

ThickSet full_box(const Grid& g) { return make_arbitrary(g, RVec::Ones(Eigen::Index(g.size()))); }

}  // namespace

TEST_CASE("Gauss-Legendre integrates polynomials of degree 2Q-1 exactly") {
    std::vector<double> x, w;
    gauss_legendre(4, 0.0, 2.0, x, w);
    double s5 = 0, s7 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        s5 += w[i] * std::pow(x[i], 5);
        s7 += w[i] * std::pow(x[i], 7);
    }
    CHECK(s5 == doctest::Approx(64.0 / 6).epsilon(1e-14));
    CHECK(s7 == doctest::Approx(256.0 / 8).epsilon(1e-14));
}

TEST_CASE("periodic thick set") {
    Grid g = make_grid(1, 512, 12.0);
    auto ts = make_thick_periodic(g, 0.3, 1.0);
    CHECK(std::abs(ts.measured_gamma - 0.3) <= g.h());
    CHECK(thickness_check(ts, 1.0) >= 0.3 - g.h() - 1e-12);
    CHECK(ts.measure() == doctest::Approx(0.3 * 24).epsilon(0.05));
    CHECK_THROWS_AS(make_thick_periodic(g, 0.3, 2 * g.h()), std::invalid_argument);
    CHECK_THROWS_AS(make_thick_periodic(g, 1.5, 1.0), std::invalid_argument);

    Grid g2 = make_grid(2, 64, 8.0);
    auto t2 = make_thick_periodic(g2, 0.25, 4.0);
    CHECK(thickness_check(t2, 4.0) >= 0.2);
}

TEST_CASE("density thick set") {
    Grid g = make_grid(1, 1024, 30.0);
    auto ts = make_thick_density(g, 0.4, 0.5, 1.0, 0.5);
    CHECK(density_thickness_check(ts) >= 0.3);
    CHECK_THROWS(make_arbitrary(g, RVec::Zero(1024)));
}

TEST_CASE("eigenmode spectral constant on the full box is one") {
    const auto& es = harmonic();
    auto curve = spectral_constant_estimate(es, Family::eigenmode, full_box(es.grid), {2, 5, 10});
    for (double c : curve.constants) CHECK(c == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("frequency spectral constant on the full box is one") {
    const auto& es = harmonic();
    auto curve = spectral_constant_estimate(es, Family::frequency, full_box(es.grid), {3, 8});
    for (double c : curve.constants) CHECK(c == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("dissipation equality case") {
    const auto& es = harmonic();
    for (int N : {0, 3, 7}) {
        auto r = dissipation_check(es, 1.0, Family::eigenmode, N, 0.2, es.mode(N + 1));
        CHECK(std::abs(r.measured - r.bound) < 1e-12);
        CHECK(r.bound == doctest::Approx(std::exp(-0.2 * (2 * (N + 1) + 1))).epsilon(1e-10));
    }
    auto g = es.project(real_noise(es.grid, 4, 0));
    auto r = dissipation_check(es, 0.5, Family::eigenmode, 5, 0.3, g);
    CHECK(r.measured <= r.bound);
}

TEST_CASE("Gramian is symmetric and positive") {
    const auto& es = harmonic();
    auto ts = make_thick_periodic(es.grid, 0.3, 1.0);
    auto u = es.project(real_noise(es.grid, 1, 0)), v = es.project(real_noise(es.grid, 2, 0));
    auto Lu = gramian_apply(es, 1.0, ts, 0.3, 32, u), Lv = gramian_apply(es, 1.0, ts, 0.3, 32, v);
    cplx a = inner(Lu, v), b = inner(u, Lv);
    CHECK(std::abs(a - b) <= 1e-10 * std::abs(a));
    CHECK(inner(Lu, u).real() > 0.0);
}

TEST_CASE("full-box Gramian acts diagonally") {
    // Lambda_T psi_j = (1 - e^{-2T lambda_j}) / (2 lambda_j) psi_j
    const auto& es = harmonic();
    auto Lp = gramian_apply(es, 1.0, full_box(es.grid), 0.3, 32, es.mode(2));
    double lam = es.eigenvalues[2];
    double ref = (1 - std::exp(-0.6 * lam)) / (2 * lam);
    CHECK((Lp.values - ref * es.mode(2).values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("HUM with the full box as control set") {
    const auto& es = harmonic();
    auto f0 = es.mode(0);
    f0.values += es.mode(3).values;
    auto sol = hum_solve(es, 1.0, full_box(es.grid), 0.3, f0, 1e-8);
    CHECK(sol.terminal_residual <= 1e-6);
    CHECK(sol.terminal_residual <= sol.penalization_bound * (1 + 1e-6));
    CHECK(sol.duality_error < 1e-8);
    CHECK(sol.f0_tail_mass < 1e-10);
}

TEST_CASE("cost sweep validates its horizon list") {
    const auto& es = harmonic();
    auto ts = make_thick_periodic(es.grid, 0.3, 1.0);
    CHECK_THROWS(cost_sweep(es, 1.0, ts, {0.1, 0.2, 0.3}, 1e-8, es.mode(0)));
    CHECK_THROWS(cost_sweep(es, 1.0, ts, {0.01, 0.1, 0.2, 0.3}, 1e-8, es.mode(0)));
}
