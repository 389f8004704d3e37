#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>

#include <Eigen/Dense>

namespace shubin {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

// Uniform lattice on [-L, L)^n. Values are stored row-major, axis 0 slowest.
// Dual index q in [0, N) corresponds to xi = (q - N/2) * pi / L.
struct Grid {
    int n = 1;
    int N = 0;
    double L = 0.0;

    double h() const { return 2.0 * L / N; }
    double dual_step() const;
    std::size_t size() const { return n == 1 ? std::size_t(N) : std::size_t(N) * N; }
    // h^n and (pi/L)^n: quadrature weights in x and xi
    double cell() const;
    double dual_cell() const;

    double node(int j) const { return -L + j * h(); }
    double dual(int q) const { return (q - N / 2) * dual_step(); }
    // coordinates of flat index i
    std::array<double, 2> point(std::size_t i) const;
    std::array<double, 2> dual_point(std::size_t i) const;
    double radius(std::size_t i) const;
    double dual_radius(std::size_t i) const;

    RVec radii() const;
    RVec dual_radii() const;

    bool operator==(const Grid&) const = default;
};

Grid make_grid(int n, int N, double L);

struct SampledFunction {
    Grid grid;
    CVec values;

    SampledFunction() = default;
    SampledFunction(const Grid& g) : grid(g), values(CVec::Zero(Eigen::Index(g.size()))) {}
    SampledFunction(const Grid& g, CVec v);

    double norm() const;
};

// <u, v> = h^n sum u_j conj(v_j)
cplx inner(const SampledFunction& u, const SampledFunction& v);
double norm(const SampledFunction& u);
// norm of a dual-side sample with weight (pi/L)^n
double dual_norm(const SampledFunction& uhat);

// u^(xi) = int e^{-ix.xi} u(x) dx, on the dual lattice
SampledFunction forward_transform(const SampledFunction& u);
SampledFunction inverse_transform(const SampledFunction& uhat);

SampledFunction sample(const std::function<cplx(double)>& f, const Grid& g);
SampledFunction sample(const std::function<cplx(double, double)>& f, const Grid& g);

using MultiIndex = std::array<int, 2>;

// d^alpha u via the Fourier multiplier (i xi)^alpha. The Nyquist mode is
// dropped along any axis differentiated an odd number of times.
SampledFunction spectral_derivative(const SampledFunction& u, MultiIndex order);
SampledFunction spectral_derivative(const SampledFunction& u, int order);

// applies an arbitrary dual-lattice multiplier m(q) to u
SampledFunction fourier_multiply(const SampledFunction& u, const CVec& multiplier);

}  // namespace shubin
