#include <doctest.h>

#include <cmath>
#include <numbers>

#include "shubin/lattice.hpp"
#include "shubin/rng.hpp"

using namespace shubin;

namespace {
const double pi = std::numbers::pi;
}

TEST_CASE("grid geometry") {
    Grid g = make_grid(1, 64, 4.0);
    CHECK(g.h() == doctest::Approx(0.125));
    CHECK(g.node(0) == -4.0);
    CHECK(g.node(32) == doctest::Approx(0.0));
    CHECK(g.dual(32) == 0.0);
    CHECK(g.dual(33) == doctest::Approx(pi / 4.0));
    CHECK_THROWS_AS(make_grid(1, 48, 4.0), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1, 8, 4.0), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1, 64, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(3, 64, 4.0), std::invalid_argument);
}

TEST_CASE("Gaussian transform matches the closed form") {
    // int e^{-x^2/2} e^{-i x xi} dx = sqrt(2 pi) e^{-xi^2/2}
    Grid g = make_grid(1, 256, 16.0);
    auto u = sample([](double x) { return cplx(std::exp(-0.5 * x * x)); }, g);
    auto uh = forward_transform(u);
    double worst = 0.0;
    for (int q = 0; q < g.N; ++q) {
        double xi = g.dual(q);
        worst = std::max(worst, std::abs(uh.values[q] - std::sqrt(2 * pi) * std::exp(-0.5 * xi * xi)));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("shifted Gaussian picks up the phase e^{-i c xi}") {
    Grid g = make_grid(1, 256, 16.0);
    const double c = 1.5;
    auto u = sample([&](double x) { return cplx(std::exp(-0.5 * (x - c) * (x - c))); }, g);
    auto uh = forward_transform(u);
    double worst = 0.0;
    for (int q = 0; q < g.N; ++q) {
        double xi = g.dual(q);
        cplx ref = std::sqrt(2 * pi) * std::exp(-0.5 * xi * xi) * std::exp(cplx(0, -c * xi));
        worst = std::max(worst, std::abs(uh.values[q] - ref));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("Plancherel and round trip on noise") {
    for (int n : {1, 2}) {
        Grid g = make_grid(n, 64, 5.0);
        auto u = noise(g, 7, 1);
        auto uh = forward_transform(u);
        // ||u||^2 = (2 pi)^{-n} ||u^||^2
        double lhs = u.norm() * u.norm();
        double rhs = dual_norm(uh) * dual_norm(uh) / std::pow(2 * pi, n);
        CHECK(std::abs(lhs - rhs) < 1e-12 * lhs);
        auto back = inverse_transform(uh);
        CHECK((back.values - u.values).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("2D separable Gaussian") {
    Grid g = make_grid(2, 64, 10.0);
    auto u = sample([](double x, double y) { return cplx(std::exp(-0.5 * (x * x + 2 * y * y))); }, g);
    auto uh = forward_transform(u);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto p = g.dual_point(i);
        cplx ref = std::sqrt(2 * pi) * std::exp(-0.5 * p[0] * p[0]) * std::sqrt(pi) * std::exp(-0.25 * p[1] * p[1]);
        worst = std::max(worst, std::abs(uh.values[Eigen::Index(i)] - ref));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("spectral derivatives") {
    Grid g = make_grid(1, 128, pi);
    auto u = sample([](double x) { return cplx(std::sin(3 * x)); }, g);
    auto d1 = spectral_derivative(u, 1);
    auto d2 = spectral_derivative(u, 2);
    double e1 = 0, e2 = 0;
    for (int i = 0; i < g.N; ++i) {
        double x = g.node(i);
        e1 = std::max(e1, std::abs(d1.values[i] - 3 * std::cos(3 * x)));
        e2 = std::max(e2, std::abs(d2.values[i] + 9 * std::sin(3 * x)));
    }
    CHECK(e1 < 1e-12);
    CHECK(e2 < 1e-11);

    Grid g2 = make_grid(2, 64, pi);
    auto v = sample([](double x, double y) { return cplx(std::sin(x) * std::cos(2 * y)); }, g2);
    auto dxy = spectral_derivative(v, MultiIndex{1, 1});
    double e3 = 0;
    for (std::size_t i = 0; i < g2.size(); ++i) {
        auto p = g2.point(i);
        e3 = std::max(e3, std::abs(dxy.values[Eigen::Index(i)] + 2 * std::cos(p[0]) * std::sin(2 * p[1])));
    }
    CHECK(e3 < 1e-11);
}

TEST_CASE("non-finite samples are rejected") {
    Grid g = make_grid(1, 32, 1.0);
    CHECK_THROWS_AS(sample([](double) { return cplx(std::nan("")); }, g), std::domain_error);
}

TEST_CASE("seeded noise is reproducible and normalized") {
    Grid g = make_grid(1, 64, 3.0);
    auto a = noise(g, 11, 2), b = noise(g, 11, 2), c = noise(g, 11, 3);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(real_noise(g, 5, 0).values.imag().cwiseAbs().maxCoeff() == 0.0);
}
