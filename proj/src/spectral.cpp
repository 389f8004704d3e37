#include "shubin/spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace shubin {

namespace {

bool in_outer_shell(const std::array<double, 2>& p, int n, double edge) {
    return std::abs(p[0]) > edge || (n == 2 && std::abs(p[1]) > edge);
}

}  // namespace

double spatial_outer_mass(const SampledFunction& u, double outer_fraction) {
    const Grid& g = u.grid;
    const double edge = (1.0 - outer_fraction) * g.L;
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (in_outer_shell(g.point(i), g.n, edge)) acc += std::norm(u.values[Eigen::Index(i)]);
    return g.cell() * acc;
}

double frequency_outer_mass(const SampledFunction& u, double outer_fraction) {
    const Grid& g = u.grid;
    auto uh = forward_transform(u);
    const double edge = (1.0 - outer_fraction) * (g.N / 2) * g.dual_step();
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (in_outer_shell(g.dual_point(i), g.n, edge)) acc += std::norm(uh.values[Eigen::Index(i)]);
    return g.dual_cell() * acc / std::pow(2.0 * std::numbers::pi, g.n);
}

SampledFunction EigenSystem::mode(int j) const {
    if (j < 0 || j >= count()) throw std::out_of_range("mode index out of range");
    return SampledFunction(grid, vectors.col(j).cast<cplx>());
}

CVec EigenSystem::coefficients(const SampledFunction& g) const {
    if (!(g.grid == grid)) throw std::invalid_argument("grid mismatch");
    return grid.cell() * (vectors.transpose() * g.values);
}

SampledFunction EigenSystem::synthesize(const CVec& c) const {
    if (c.size() != count()) throw std::invalid_argument("coefficient count mismatch");
    return SampledFunction(grid, vectors * c);
}

SampledFunction EigenSystem::project(const SampledFunction& g) const { return synthesize(coefficients(g)); }

double EigenSystem::tail_mass(const SampledFunction& g) const {
    auto p = project(g);
    p.values = g.values - p.values;
    return norm(p);
}

EigenSystem eigensystem(const DiscreteOperator& op, int count, const EigenOptions& opts) {
    const Grid& grid = op.grid();
    if (count < 1 || std::size_t(count) > grid.size()) throw std::invalid_argument("requested count out of range");
    const auto& H = op.matrix();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(H);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver did not converge");

    const double scale = 1.0 / std::sqrt(grid.cell());
    EigenSystem es;
    es.spec = op.spec();
    es.grid = grid;
    es.requested = count;

    std::vector<int> keep;
    std::vector<double> smass, fmass;
    for (int j = 0; j < count; ++j) {
        Eigen::VectorXd v = solver.eigenvectors().col(j) * scale;
        Eigen::Index imax;
        v.cwiseAbs().maxCoeff(&imax);
        if (v[imax] < 0) v = -v;
        SampledFunction u(grid, v.cast<cplx>());
        double sm = spatial_outer_mass(u, opts.outer_fraction);
        double fm = opts.frequency_test ? frequency_outer_mass(u, opts.outer_fraction) : 0.0;
        if (sm > opts.boundary_tol || fm > opts.boundary_tol) break;
        keep.push_back(j);
        smass.push_back(sm);
        fmass.push_back(fm);
    }
    if (keep.size() < 10) throw std::runtime_error("fewer than 10 eigenpairs pass the boundary-mass test");

    const int r = int(keep.size());
    es.eigenvalues = solver.eigenvalues().head(r);
    es.vectors.resize(Eigen::Index(grid.size()), r);
    for (int j = 0; j < r; ++j) {
        Eigen::VectorXd v = solver.eigenvectors().col(j) * scale;
        Eigen::Index imax;
        v.cwiseAbs().maxCoeff(&imax);
        es.vectors.col(j) = v[imax] < 0 ? Eigen::VectorXd(-v) : v;
    }
    es.spatial_mass = Eigen::Map<RVec>(smass.data(), r);
    es.frequency_mass = Eigen::Map<RVec>(fmass.data(), r);

    // residual is measured in the discrete L2 norm relative to lambda
    Eigen::MatrixXd R = H * es.vectors - es.vectors * es.eigenvalues.asDiagonal();
    for (int j = 0; j < r; ++j)
        es.max_residual = std::max(es.max_residual, std::sqrt(grid.cell()) * R.col(j).norm() / es.eigenvalues[j]);
    Eigen::MatrixXd G = grid.cell() * es.vectors.transpose() * es.vectors;
    es.max_orthogonality_error = (G - Eigen::MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff();
    if (es.max_residual > 1e-8) throw std::runtime_error("eigenpair residual above 1e-8 relative");
    if (es.max_orthogonality_error > 1e-10) throw std::runtime_error("eigenvectors not orthonormal to 1e-10");
    return es;
}

namespace {

SampledFunction spectral_map(const EigenSystem& es, const SampledFunction& g, const RVec& factor) {
    CVec c = es.coefficients(g);
    c.array() *= factor.array();
    return es.synthesize(c);
}

}  // namespace

SampledFunction fractional_apply(const EigenSystem& es, double s, const SampledFunction& g) {
    if (!(s > 0.0)) throw std::invalid_argument("fractional power needs s > 0");
    return spectral_map(es, g, es.eigenvalues.array().pow(s));
}

SampledFunction semigroup_apply(const EigenSystem& es, double s, double t, const SampledFunction& g) {
    if (!(t >= 0.0)) throw std::invalid_argument("semigroup time must be nonnegative");
    if (!(s > 0.0)) throw std::invalid_argument("fractional power needs s > 0");
    return spectral_map(es, g, (-t * es.eigenvalues.array().pow(s)).exp());
}

SampledFunction eigen_project(const EigenSystem& es, int N, const SampledFunction& g) {
    if (N < 0 || N > es.count()) throw std::out_of_range("projection order out of range");
    RVec f = RVec::Zero(es.count());
    f.head(N).setOnes();
    return spectral_map(es, g, f);
}

SampledFunction frequency_project(const Grid& grid, double K, const SampledFunction& g) {
    if (!(g.grid == grid)) throw std::invalid_argument("grid mismatch");
    auto gh = forward_transform(g);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto p = grid.dual_point(i);
        if (std::abs(p[0]) > K || (grid.n == 2 && std::abs(p[1]) > K)) gh.values[Eigen::Index(i)] = 0.0;
    }
    return inverse_transform(gh);
}

}  // namespace shubin
