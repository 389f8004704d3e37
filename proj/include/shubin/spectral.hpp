#pragma once

#include "shubin/shubin_op.hpp"

namespace shubin {

struct EigenOptions {
    // a pair is kept only while its mass beyond 85% of the box stays below this
    double boundary_tol = 1e-10;
    double outer_fraction = 0.15;
    // apply the same test on the dual lattice (aliasing at the Nyquist edge)
    bool frequency_test = true;
};

struct EigenSystem {
    OperatorSpec spec;
    Grid grid;
    RVec eigenvalues;
    // columns satisfy h^n V^T V = I
    Eigen::MatrixXd vectors;
    int requested = 0;
    RVec spatial_mass;
    RVec frequency_mass;
    double max_residual = 0.0;  // max_j |H psi_j - lambda_j psi_j| / lambda_j
    double max_orthogonality_error = 0.0;

    int count() const { return int(eigenvalues.size()); }
    SampledFunction mode(int j) const;
    // <g, psi_j>, j < count
    CVec coefficients(const SampledFunction& g) const;
    SampledFunction synthesize(const CVec& c) const;
    SampledFunction project(const SampledFunction& g) const;
    double tail_mass(const SampledFunction& g) const;
};

// outer-shell masses of a function on both sides of the transform
double spatial_outer_mass(const SampledFunction& u, double outer_fraction = 0.15);
double frequency_outer_mass(const SampledFunction& u, double outer_fraction = 0.15);

EigenSystem eigensystem(const DiscreteOperator& op, int count, const EigenOptions& opts = {});

SampledFunction fractional_apply(const EigenSystem& es, double s, const SampledFunction& g);
SampledFunction semigroup_apply(const EigenSystem& es, double s, double t, const SampledFunction& g);
// onto psi_0..psi_{N-1}
SampledFunction eigen_project(const EigenSystem& es, int N, const SampledFunction& g);
SampledFunction frequency_project(const Grid& grid, double K, const SampledFunction& g);

}  // namespace shubin
