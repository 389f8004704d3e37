#include <doctest.h>

#include <cmath>

#include "shubin/rng.hpp"
#include "shubin/shubin_op.hpp"

using namespace shubin;

TEST_CASE("derived exponents follow the published formulas") {
    auto e = derived_exponents({2, 1, 1.0, 1});
    CHECK(e.nu == doctest::Approx(1.0 / 3));   // max(1/4, 1/3)
    CHECK(e.mu == doctest::Approx(2.0 / 3));   // max(1/2, 2/3)
    CHECK(e.s_cr == doctest::Approx(0.75));
    CHECK(e.beta == doctest::Approx(2.0));     // max(1/(2-1), 2)
    CHECK(e.weyl == doctest::Approx(4.0 / 3));
    CHECK(e.spatial_agmon == doctest::Approx(3.0));
    CHECK(e.frequency_agmon == doctest::Approx(1.5));

    auto h = derived_exponents({1, 1, 0.3, 1});
    CHECK(h.mu == doctest::Approx(1.0 / 0.6));
    CHECK(1.0 / h.mu == doctest::Approx(0.6));
    CHECK(std::isnan(h.beta));
    CHECK_FALSE(h.beta_defined());
    CHECK(derived_exponents({1, 1, 1.5, 1}).nu == doctest::Approx(0.5));
    CHECK(derived_exponents({1, 2, 1.0, 1}).weyl == doctest::Approx(4.0 / 3));
}

TEST_CASE("spec validation") {
    CHECK_THROWS_AS(OperatorSpec({0, 1, 1.0, 1}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(OperatorSpec({1, 7, 1.0, 1}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(OperatorSpec({1, 1, 0.0, 1}).validate(), std::invalid_argument);
    CHECK_NOTHROW(OperatorSpec({6, 6, 2.0, 2}).validate());
}

TEST_CASE("Gaussian is the harmonic ground state") {
    // (-d^2 + x^2) e^{-x^2/2} = e^{-x^2/2}
    Grid g = make_grid(1, 256, 12.0);
    auto op = assemble({1, 1, 1.0, 1}, g);
    auto u = sample([](double x) { return cplx(std::exp(-0.5 * x * x)); }, g);
    auto Hu = op.apply(u);
    CHECK((Hu.values - u.values).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("dense matrix is symmetric and agrees with the matrix-free action") {
    for (OperatorSpec spec : {OperatorSpec{1, 1, 1.0, 1}, OperatorSpec{2, 1, 1.0, 1}, OperatorSpec{1, 2, 1.0, 1}}) {
        Grid g = make_grid(1, 128, 6.0);
        auto op = assemble(spec, g);
        const auto& H = op.matrix();
        CHECK((H - H.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * H.cwiseAbs().maxCoeff());
        auto u = real_noise(g, 3, 0);
        CVec dense = H.cast<cplx>() * u.values;
        auto free = op.apply(u);
        CHECK((dense - free.values).cwiseAbs().maxCoeff() < 1e-9 * dense.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("quartic kinetic term on a plane wave") {
    // (-Delta)^2 e^{i 3 x pi / L} = (3 pi / L)^4 e^{...}
    Grid g = make_grid(1, 64, 2.0);
    auto op = assemble({1, 2, 1.0, 1}, g, false);
    const double xi = 3 * std::acos(-1.0) / g.L;
    auto u = sample([&](double x) { return std::exp(cplx(0, xi * x)); }, g);
    auto k = op.apply_kinetic(u);
    // rounding in the other modes is amplified by up to |xi_max|^4
    const double xi_max = (g.N / 2) * g.dual_step();
    CHECK((k.values - std::pow(xi, 4) * u.values).cwiseAbs().maxCoeff() < 1e-14 * std::pow(xi_max, 4));
}

TEST_CASE("dimension mismatch and overflow are rejected") {
    CHECK_THROWS(assemble({1, 1, 1.0, 2}, make_grid(1, 64, 4.0)));
    CHECK_THROWS_AS(assemble({6, 1, 1.0, 1}, make_grid(1, 64, 1e26), false), std::overflow_error);
}
