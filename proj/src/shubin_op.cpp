#include "shubin/shubin_op.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace shubin {

void OperatorSpec::validate() const {
    if (k < 1 || k > 6) throw std::invalid_argument("k must be in 1..6");
    if (m < 1 || m > 6) throw std::invalid_argument("m must be in 1..6");
    if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("s must be positive");
    if (n != 1 && n != 2) throw std::invalid_argument("n must be 1 or 2");
}

bool DerivedExponents::beta_defined() const { return std::isfinite(beta); }

DerivedExponents derived_exponents(const OperatorSpec& spec) {
    spec.validate();
    const double k = spec.k, m = spec.m, s = spec.s, n = spec.n;
    DerivedExponents e;
    e.nu = std::max(1.0 / (2 * s * k), m / (k + m));
    e.mu = std::max(1.0 / (2 * s * m), k / (k + m));
    e.s_cr = 1.0 / (2 * k) + 1.0 / (2 * m);
    e.beta = 2 * s * m > 1.0 ? std::max(1.0 / (2 * s * m - 1.0), k / m) : std::numeric_limits<double>::quiet_NaN();
    e.weyl = 2 * k * m / (n * (k + m));
    e.prefactor_power = n * (k + m) / (2 * s * k * m);
    e.spatial_agmon = 1.0 + k / m;
    e.frequency_agmon = 1.0 + m / k;
    e.eigen_scaling = 1.0 / (2 * k) + 1.0 / (2 * m);
    return e;
}

DiscreteOperator::DiscreteOperator(const OperatorSpec& spec, const Grid& grid, bool build_dense)
    : spec_(spec), grid_(grid) {
    spec.validate();
    if (spec.n != grid.n) throw std::invalid_argument("operator and grid dimensions differ");

    const double edge = grid.n == 1 ? grid.L : std::sqrt(2.0) * grid.L;
    const double xi_edge = (grid.N / 2) * grid.dual_step() * (grid.n == 1 ? 1.0 : std::sqrt(2.0));
    if (2 * spec.k * std::log(edge) > 600.0 || 2 * spec.m * std::log(xi_edge) > 600.0)
        throw std::overflow_error("potential or multiplier overflows on this box");

    potential_ = grid.radii().array().pow(2 * spec.k);
    kinetic_ = grid.dual_radii().array().pow(2 * spec.m);

    if (build_dense) {
        if (grid.size() > dense_limit) throw std::invalid_argument("grid too large for dense assembly");
        const std::size_t M = grid.size();
        const int N = grid.N;
        // translation invariant: column of the node-0 delta generates the rest
        SampledFunction delta(grid);
        delta.values[0] = 1.0;
        RVec col = apply_kinetic(delta).values.real();
        Eigen::MatrixXd A(M, M);
        if (grid.n == 1) {
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j) A(i, j) = col[((i - j) % N + N) % N];
        } else {
            for (std::size_t i = 0; i < M; ++i) {
                int i0 = int(i) / N, i1 = int(i) % N;
                for (std::size_t j = 0; j < M; ++j) {
                    int j0 = int(j) / N, j1 = int(j) % N;
                    A(i, j) = col[((i0 - j0 + N) % N) * N + (i1 - j1 + N) % N];
                }
            }
        }
        A.diagonal() += potential_;
        dense_ = 0.5 * (A + A.transpose());
    }
}

const Eigen::MatrixXd& DiscreteOperator::matrix() const {
    if (!dense_) throw std::logic_error("operator was assembled matrix-free");
    return *dense_;
}

SampledFunction DiscreteOperator::apply_kinetic(const SampledFunction& u) const {
    if (!(u.grid == grid_)) throw std::invalid_argument("grid mismatch");
    return fourier_multiply(u, kinetic_.cast<cplx>());
}

SampledFunction DiscreteOperator::apply(const SampledFunction& u) const {
    auto out = apply_kinetic(u);
    out.values.array() += potential_.array() * u.values.array();
    return out;
}

DiscreteOperator assemble(const OperatorSpec& spec, const Grid& grid, bool dense) {
    return DiscreteOperator(spec, grid, dense);
}

SampledFunction apply(const DiscreteOperator& op, const SampledFunction& u) { return op.apply(u); }

}  // namespace shubin
