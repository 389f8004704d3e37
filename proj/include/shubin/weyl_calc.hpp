#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "shubin/jet.hpp"
#include "shubin/lattice.hpp"

namespace shubin {

// Odd cutoff chi(y) = y psi(|y|), psi a smooth step equal to 1 on [0,1] and 0 on [2,inf),
// built from f(t) = exp(-1/t). chi_eps(y) = chi(eps y) / eps.
struct CutoffFamily {
    double epsilon = 1.0;

    double base(double y) const;
    double operator()(double y) const;  // chi_eps
    Jet operator()(const Jet& y) const;
    // sup |chi'| on a fine sample of [0, 2]
    static double base_slope_bound();
};

CutoffFamily make_cutoff(double epsilon);

// phi(x) = <x>^{sigma (1 + k/m)}
struct AgmonWeight {
    double sigma = 1.0;
    int k = 1;
    int m = 1;

    double exponent() const { return sigma * (1.0 + double(k) / m); }
    double operator()(double x) const;
    Jet operator()(const Jet& x) const;
};

AgmonWeight make_weight(double sigma, int k, int m);

// max over nodes and rho <= max_order of |d^rho phi| / <x>^{p - rho}
std::vector<double> weight_derivative_bounds(const AgmonWeight& w, const Grid& g, int max_order);

// A function of x carried with its derivatives d[l] = d^l a / dx^l, l = 0..order (1D).
struct XField {
    Grid grid;
    std::vector<CVec> d;

    int order() const { return int(d.size()) - 1; }
    const CVec& values() const { return d[0]; }

    static XField constant(const Grid& g, cplx c, int order);
    // derivatives from the Fourier multiplier
    static XField from_samples(const SampledFunction& a, int order);
    // phi_eps = chi_eps o phi with exact derivatives from Taylor jets
    static XField from_weight(const Grid& g, const AgmonWeight& w, const CutoffFamily& c, int order);

    XField derivative(int l) const;
    XField operator+(const XField& o) const;
    XField operator-(const XField& o) const;
    XField operator*(const XField& o) const;  // Leibniz
    XField operator*(cplx s) const;
};

// Sum_p c_p(x) xi^p, 1D
struct PolySymbol {
    Grid grid;
    std::vector<XField> coeffs;

    int degree() const { return int(coeffs.size()) - 1; }
    // d_xi^beta, degree drops by beta
    PolySymbol xi_derivative(int beta) const;
    cplx evaluate(int node, double xi, int alpha = 0, int beta = 0) const;
    PolySymbol operator+(const PolySymbol& o) const;
    PolySymbol operator-(const PolySymbol& o) const;
};

PolySymbol xi_power(const Grid& g, int p, int order);
PolySymbol times(const XField& a, const PolySymbol& P);

constexpr int max_symbol_degree = 12;

// a # P and P # a, exact for xi-polynomial P
PolySymbol moyal_mul_x_poly(const XField& a, const PolySymbol& P);
PolySymbol moyal_mul_poly_x(const PolySymbol& P, const XField& a);

// sigma_0 = xi^{2m}, ..., sigma_{2m}; element j is the Weyl symbol of ad^j_phi (-Delta)^m
std::vector<PolySymbol> commutator_tower(const XField& phi, int m);

// max over j, p, nodes of |sigma_{j+1} - (phi # sigma_j - sigma_j # phi)| / max |sigma_{j+1}|
double tower_moyal_discrepancy(const XField& phi, const std::vector<PolySymbol>& tower);

struct SymbolClassEntry {
    int j = 0;
    double epsilon = 1.0;
    int alpha = 0;
    int beta = 0;
    double ratio = 0.0;
};

struct SymbolClassReport {
    double sigma = 1.0;
    int k = 1;
    int m = 1;
    std::vector<double> epsilons;
    double xi_max = 0.0;
    int xi_samples = 0;
    std::vector<SymbolClassEntry> entries;
    // max over eps of the ratio / ratio at eps = 1, worst over (j, alpha, beta)
    double uniformity = 0.0;

    double ratio(int j, double eps, int alpha, int beta) const;
};

// sup over the spatial grid and xi in [0, xi_max] of |d_x^alpha d_xi^beta sigma_j| / (<x>^{sigma k j/m} <xi>^{2m-j-beta})
SymbolClassReport symbol_class_report(const Grid& g, double sigma, int k, int m, const std::vector<double>& epsilons,
                                      double xi_max = 32.0, int xi_samples = 641);

// standard-quantized coefficients: Op^w(P) = sum_gamma c_gamma(x) D^gamma, D = -i d/dx
std::vector<CVec> weyl_to_standard(const PolySymbol& P);
SampledFunction apply_standard(const std::vector<CVec>& coeffs, const SampledFunction& v);

// (-Delta)^m by Fourier multiplier
SampledFunction laplacian_power(const SampledFunction& v, int m);
// ad^j_phi (-Delta)^m v by the operator recursion
SampledFunction ad_apply(const SampledFunction& phi, int m, int j, const SampledFunction& v);

struct ConjugationResult {
    SampledFunction lhs;
    SampledFunction rhs;
    double rel_error = 0.0;
    bool overflow = false;
};

// e^{t phi} (-Delta)^m e^{-t phi} v against sum_{j <= 2m} t^j/j! ad^j v
ConjugationResult conjugation_check(const SampledFunction& phi, int m, double t, const SampledFunction& v);

struct GardingResult {
    double c0_required = 0.0;
    int worst = -1;
    std::string worst_description;
    int family_size = 0;
    int overflowed = 0;
    std::vector<double> ratios;  // -Q / (||v||^2 + t ||<x>^{sigma k} v||^2) per member
};

// Test family: Gaussians with centre in [-L/2, L/2], width in [0.3, 3], modulation in [0, K/2];
// every fourth member is a random combination of e^{i q K x / 16}, |q| <= 16, under a Gaussian
// envelope. K = garding_band is fixed so the members do not depend on the grid.
constexpr double garding_band = 16.0;
std::vector<std::pair<std::string, std::function<cplx(double)>>> garding_family(const Grid& g, int family_size,
                                                                                 std::uint64_t seed);

GardingResult garding_probe(const Grid& g, double sigma, int k, int m, double epsilon, double t, int family_size = 500,
                            std::uint64_t seed = 0);

// Phase-space fields: rows are x nodes, columns are dual nodes (1D only).
using PhaseField = Eigen::MatrixXcd;

// V u(y, xi) = int u(x) g(x - y) e^{-i x xi} dx, g = pi^{-1/4} e^{-x^2/2}
PhaseField stft(const SampledFunction& u);
// exact discrete adjoint for the phase-space product (2 pi)^{-1} h (pi/L) sum
SampledFunction stft_adjoint(const Grid& g, const PhaseField& F);
// A_a u = V*(a V u)
SampledFunction anti_wick_apply(const PhaseField& a, const SampledFunction& u);

// polynomial part (keys (i, j) for x^i xi^j, total degree <= 4) plus an optional decaying sampled part
struct PhaseSymbol {
    std::map<std::pair<int, int>, double> poly;
    std::optional<Eigen::MatrixXd> sampled;
};

Eigen::MatrixXd sample_phase(const Grid& g, const PhaseSymbol& a);
// b = pi^{-1} int a(y, eta) e^{-(x-y)^2 - (xi-eta)^2} dy deta
Eigen::MatrixXd anti_wick_weyl_symbol(const Grid& g, const PhaseSymbol& a);

}  // namespace shubin
