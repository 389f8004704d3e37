#include "shubin/control_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "shubin/parallel.hpp"

namespace shubin {

double ThickSet::measure() const { return grid.cell() * indicator.sum(); }

std::string kind_name(ThickSet::Kind k) {
    switch (k) {
        case ThickSet::Kind::periodic: return "periodic";
        case ThickSet::Kind::density: return "density";
        case ThickSet::Kind::arbitrary: return "arbitrary";
    }
    return "arbitrary";
}

namespace {

int window_nodes(const Grid& g, double scale) { return std::max(1, int(std::lround(scale / g.h()))); }

}  // namespace

double thickness_check(const ThickSet& ts, double scale) {
    const Grid& g = ts.grid;
    const int N = g.N;
    const int w = window_nodes(g, scale);
    if (w > N) throw std::invalid_argument("window larger than the box");
    if (g.n == 1) {
        std::vector<double> pre(std::size_t(N) + 1, 0.0);
        for (int i = 0; i < N; ++i) pre[std::size_t(i) + 1] = pre[std::size_t(i)] + ts.indicator[i];
        double best = 1.0;
        for (int j = 0; j + w <= N; ++j) best = std::min(best, (pre[std::size_t(j + w)] - pre[std::size_t(j)]) / w);
        return best;
    }
    // summed-area table
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(N + 1, N + 1);
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b)
            S(a + 1, b + 1) = ts.indicator[Eigen::Index(a) * N + b] + S(a, b + 1) + S(a + 1, b) - S(a, b);
    double best = 1.0;
    for (int a = 0; a + w <= N; ++a)
        for (int b = 0; b + w <= N; ++b) {
            double c = S(a + w, b + w) - S(a, b + w) - S(a + w, b) + S(a, b);
            best = std::min(best, c / (double(w) * w));
        }
    return best;
}

ThickSet make_thick_periodic(const Grid& grid, double gamma, double scale) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
    if (!(scale >= 4.0 * grid.h() - 1e-12)) throw std::invalid_argument("scale below 4h: gamma unreachable");
    if (scale > 2.0 * grid.L) throw std::invalid_argument("scale exceeds the box");
    ThickSet ts;
    ts.grid = grid;
    ts.kind = ThickSet::Kind::periodic;
    ts.gamma = gamma;
    ts.scale = scale;
    ts.indicator = RVec::Zero(Eigen::Index(grid.size()));
    const double side = grid.n == 1 ? gamma : std::sqrt(gamma);
    auto inside = [&](double x) {
        double rel = std::fmod(x + grid.L, scale) / scale;
        return rel < side - 1e-12;
    };
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto p = grid.point(i);
        bool in = inside(p[0]) && (grid.n == 1 || inside(p[1]));
        ts.indicator[Eigen::Index(i)] = in ? 1.0 : 0.0;
    }
    if (gamma == 1.0) ts.indicator.setOnes();
    ts.measured_gamma = thickness_check(ts, scale);
    if (ts.measured_gamma < gamma - grid.h() / scale)
        throw std::invalid_argument("grid quantization makes gamma unreachable at this scale");
    return ts;
}

namespace {

double rho_of(double x, double delta, double R, double c_floor) {
    return std::max(c_floor, R * std::pow(1.0 + x * x, 0.5 * delta));
}

}  // namespace

ThickSet make_thick_density(const Grid& grid, double gamma, double delta, double R, double c_floor) {
    if (grid.n != 1) throw std::invalid_argument("density-thick construction is one-dimensional");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
    if (!(delta >= 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in [0, 1)");
    if (!(R > 0.0) || !(c_floor > 0.0)) throw std::invalid_argument("R and c_floor must be positive");
    // 1/2-Lipschitz check on a fine sampling of the box
    double lip = 0.0;
    const int probes = 20000;
    for (int i = 0; i < probes; ++i) {
        double x = -grid.L + 2.0 * grid.L * i / (probes - 1);
        double dx = 1e-5;
        lip = std::max(lip, std::abs(rho_of(x + dx, delta, R, c_floor) - rho_of(x - dx, delta, R, c_floor)) / (2 * dx));
    }
    if (lip > 0.5) throw std::invalid_argument("realized density is not 1/2-Lipschitz");

    ThickSet ts;
    ts.grid = grid;
    ts.kind = ThickSet::Kind::density;
    ts.gamma = gamma;
    ts.delta = delta;
    ts.R = R;
    ts.c_floor = c_floor;
    ts.indicator = RVec::Zero(Eigen::Index(grid.size()));
    std::vector<double> centres{0.0};
    for (double c = 0.0; c <= grid.L;) {
        c += rho_of(c, delta, R, c_floor);
        centres.push_back(c);
        centres.push_back(-c);
    }
    for (int i = 0; i < grid.N; ++i) {
        double x = grid.node(i);
        for (double c : centres)
            if (std::abs(x - c) <= gamma * rho_of(c, delta, R, c_floor)) {
                ts.indicator[i] = 1.0;
                break;
            }
    }
    ts.measured_gamma = density_thickness_check(ts);
    double rho_min = rho_of(0.0, delta, R, c_floor);
    if (ts.measured_gamma < gamma - grid.h() / rho_min)
        throw std::runtime_error("density-thickness verification failed");
    return ts;
}

ThickSet make_arbitrary(const Grid& grid, RVec indicator) {
    if (std::size_t(indicator.size()) != grid.size()) throw std::invalid_argument("indicator length mismatch");
    for (double v : indicator)
        if (v != 0.0 && v != 1.0) throw std::invalid_argument("indicator values must be 0 or 1");
    ThickSet ts;
    ts.grid = grid;
    ts.kind = ThickSet::Kind::arbitrary;
    ts.indicator = std::move(indicator);
    if (!(ts.measure() > 0.0)) throw std::invalid_argument("control set has zero measure");
    return ts;
}

double density_thickness_check(const ThickSet& ts, int samples) {
    const Grid& g = ts.grid;
    if (g.n != 1) throw std::invalid_argument("density thickness check is one-dimensional");
    std::vector<double> pre(std::size_t(g.N) + 1, 0.0);
    for (int i = 0; i < g.N; ++i) pre[std::size_t(i) + 1] = pre[std::size_t(i)] + ts.indicator[i];
    // centres whose ball stays inside the box
    std::vector<double> xs;
    const double lo = -g.L, hi = g.L - g.h();
    for (int i = 0; i < 4 * samples && int(xs.size()) < samples; ++i) {
        double x = lo + (hi - lo) * (i + 0.5) / (4.0 * samples);
        double r = rho_of(x, ts.delta, ts.R, ts.c_floor);
        if (x - r >= lo && x + r <= hi) xs.push_back(x);
    }
    if (xs.empty()) throw std::runtime_error("no density window fits inside the box");
    // thin out to the requested sample count
    std::vector<double> centres;
    for (int i = 0; i < samples; ++i) centres.push_back(xs[std::size_t(i) * xs.size() / std::size_t(samples)]);
    double best = 1.0;
    for (double x : centres) {
        double r = rho_of(x, ts.delta, ts.R, ts.c_floor);
        int a = int(std::ceil((x - r + g.L) / g.h() - 1e-9));
        int b = int(std::floor((x + r + g.L) / g.h() + 1e-9));
        a = std::clamp(a, 0, g.N - 1);
        b = std::clamp(b, 0, g.N - 1);
        double count = b - a + 1;
        best = std::min(best, (pre[std::size_t(b) + 1] - pre[std::size_t(a)]) / count);
    }
    return best;
}

SpectralConstantCurve spectral_constant_estimate(const EigenSystem& es, Family family, const ThickSet& ts,
                                                 const std::vector<int>& orders) {
    const Grid& g = es.grid;
    if (!(ts.grid == g)) throw std::invalid_argument("thick set lives on a different grid");
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < ts.indicator.size(); ++i)
        if (ts.indicator[i] != 0.0) rows.push_back(i);

    SpectralConstantCurve curve;
    curve.family = family;
    curve.orders = orders;
    curve.sigma_min.resize(orders.size());
    curve.constants.resize(orders.size());

    auto sigma_min_of = [&](int N) -> double {
        const double w = std::sqrt(g.cell());
        if (family == Family::eigenmode) {
            if (N < 1 || N > es.count()) throw std::invalid_argument("eigenmode order beyond resolved count");
            Eigen::MatrixXd A(Eigen::Index(rows.size()), N);
            for (std::size_t r = 0; r < rows.size(); ++r) A.row(Eigen::Index(r)) = w * es.vectors.row(rows[r]).head(N);
            auto sv = Eigen::BDCSVD<Eigen::MatrixXd>(A).singularValues();
            return sv.size() < N ? 0.0 : sv[N - 1];
        }
        if (N < 0 || N >= g.N / 2) throw std::invalid_argument("frequency order beyond the dual lattice");
        std::vector<std::array<int, 2>> qs;
        for (int a = -N; a <= N; ++a) {
            if (g.n == 1) {
                qs.push_back({a, 0});
            } else {
                for (int b = -N; b <= N; ++b) qs.push_back({a, b});
            }
        }
        const double norm_c = 1.0 / std::sqrt(std::pow(2.0 * g.L, g.n));
        Eigen::MatrixXcd A(Eigen::Index(rows.size()), Eigen::Index(qs.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            auto p = g.point(std::size_t(rows[r]));
            for (std::size_t c = 0; c < qs.size(); ++c) {
                double ph = (qs[c][0] * p[0] + qs[c][1] * p[1]) * g.dual_step();
                A(Eigen::Index(r), Eigen::Index(c)) = w * norm_c * std::polar(1.0, ph);
            }
        }
        auto sv = Eigen::BDCSVD<Eigen::MatrixXcd>(A).singularValues();
        return sv.size() < Eigen::Index(qs.size()) ? 0.0 : sv[sv.size() - 1];
    };

    parallel_for(orders.size(), [&](std::size_t i) { curve.sigma_min[i] = rows.empty() ? 0.0 : sigma_min_of(orders[i]); });

    std::vector<double> x, y;
    for (std::size_t i = 0; i < orders.size(); ++i) {
        double sm = curve.sigma_min[i];
        curve.constants[i] = sm < 1e-14 ? std::numeric_limits<double>::infinity() : 1.0 / sm;
        if (!std::isfinite(curve.constants[i])) continue;
        ++curve.finite;
        double N = orders[i];
        if (family == Family::frequency) {
            x.push_back(N);
        } else {
            if (N < 2) continue;
            x.push_back(N * std::log(N));
        }
        y.push_back(std::log(curve.constants[i]));
    }
    if (x.size() >= 2) curve.growth = fit_line(x, y);
    return curve;
}

DissipationResult dissipation_check(const EigenSystem& es, double s, Family family, int N, double t,
                                    const SampledFunction& g) {
    DissipationResult r;
    if (family == Family::eigenmode) {
        if (N < 0 || N + 1 >= es.count()) throw std::out_of_range("dissipation order beyond resolved modes");
        CVec c = es.coefficients(g);
        RVec damp = (-t * es.eigenvalues.array().pow(s)).exp();
        c.array() *= damp.array().cast<cplx>();
        c.head(N + 1).setZero();
        r.measured = c.norm();
        r.bound = std::exp(-t * std::pow(es.eigenvalues[N + 1], s)) * norm(g);
        return r;
    }
    auto u = semigroup_apply(es, s, t, g);
    auto low = frequency_project(es.grid, N * es.grid.dual_step(), u);
    u.values -= low.values;
    r.measured = norm(u);
    r.bound = std::numeric_limits<double>::quiet_NaN();
    return r;
}

FrequencyDissipationFit frequency_dissipation_fit(const EigenSystem& es, double s, double t, const SampledFunction& g,
                                                  const std::vector<int>& orders) {
    OperatorSpec spec = es.spec;
    spec.s = s;
    const double mu = derived_exponents(spec).mu;
    FrequencyDissipationFit f;
    std::vector<double> x, y;
    const double ng = norm(g);
    for (int N : orders) {
        double m = dissipation_check(es, s, Family::frequency, N, t, g).measured;
        f.orders.push_back(N);
        f.measured.push_back(m);
        if (m > 1e-14 * ng) {
            x.push_back(std::pow(N * es.grid.dual_step(), 1.0 / mu));
            y.push_back(std::log(m / ng));
        }
    }
    if (x.size() >= 2) f.line = fit_line(x, y);
    return f;
}

void gauss_legendre(int Q, double a, double b, std::vector<double>& nodes, std::vector<double>& weights) {
    if (Q < 1) throw std::invalid_argument("quadrature order must be positive");
    // Golub-Welsch
    RVec diag = RVec::Zero(Q), sub(std::max(Q - 1, 1));
    for (int k = 1; k < Q; ++k) sub[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub.head(Q - 1));
    nodes.resize(std::size_t(Q));
    weights.resize(std::size_t(Q));
    for (int i = 0; i < Q; ++i) {
        double v0 = es.eigenvectors()(0, i);
        nodes[std::size_t(i)] = 0.5 * (b - a) * es.eigenvalues()[i] + 0.5 * (a + b);
        weights[std::size_t(i)] = (b - a) * v0 * v0;
    }
}

namespace {

Eigen::MatrixXd restricted_mass(const EigenSystem& es, const ThickSet& ts) {
    return es.grid.cell() * es.vectors.transpose() * ts.indicator.asDiagonal() * es.vectors;
}

// sum_q w_q D(T - t_q) M D(T - t_q), all modes
Eigen::MatrixXd gramian_matrix(const RVec& lam_s, const Eigen::MatrixXd& M, double T, const std::vector<double>& nodes,
                               const std::vector<double>& weights) {
    const Eigen::Index r = lam_s.size();
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(r, r);
    for (std::size_t q = 0; q < nodes.size(); ++q) {
        RVec d = (-(T - nodes[q]) * lam_s.array()).exp();
        G += weights[q] * (d.asDiagonal() * M * d.asDiagonal());
    }
    return 0.5 * (G + G.transpose());
}

struct CgResult {
    CVec x;
    int iterations = 0;
};

CgResult conjugate_gradient(const Eigen::MatrixXd& A, const CVec& b, const CgOptions& opt) {
    CgResult out;
    out.x = CVec::Zero(b.size());
    const double nb = b.norm();
    if (nb == 0.0) return out;
    CVec r = b, p = r, best_x = out.x;
    double rs = r.squaredNorm();
    double best = std::sqrt(rs);
    int since_best = 0;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        CVec Ap = A * p;
        double alpha = rs / p.dot(Ap).real();
        out.x += alpha * p;
        r -= alpha * Ap;
        double rs_new = r.squaredNorm();
        out.iterations = it;
        double rn = std::sqrt(rs_new);
        if (rn <= opt.tolerance * nb) return out;
        if (rn < 0.999 * best) {
            best = rn;
            best_x = out.x;
            since_best = 0;
        } else if (++since_best >= opt.plateau) {
            // floating-point floor reached; accept only if already tight
            if (best <= 1e-8 * nb) {
                out.x = best_x;
                return out;
            }
            throw std::runtime_error("conjugate gradient stagnated at relative residual " + std::to_string(best / nb));
        }
        p = r + (rs_new / rs) * p;
        rs = rs_new;
    }
    if (best <= 1e-8 * nb) {
        out.x = best_x;
        return out;
    }
    throw std::runtime_error("conjugate gradient hit the iteration cap");
}

}  // namespace

SampledFunction gramian_apply(const EigenSystem& es, double s, const ThickSet& ts, double T, int Q,
                              const SampledFunction& u) {
    std::vector<double> nodes, weights;
    gauss_legendre(Q, 0.0, T, nodes, weights);
    SampledFunction acc(es.grid);
    for (std::size_t q = 0; q < nodes.size(); ++q) {
        auto v = semigroup_apply(es, s, T - nodes[q], u);
        v.values.array() *= ts.indicator.array().cast<cplx>();
        acc.values += weights[q] * semigroup_apply(es, s, T - nodes[q], v).values;
    }
    return acc;
}

ControlSolution hum_solve(const EigenSystem& es, double s, const ThickSet& ts, double T, const SampledFunction& f0,
                          double epsilon, int Q, const CgOptions& cg) {
    if (!(T > 0.0)) throw std::invalid_argument("horizon T must be positive");
    if (!(epsilon > 0.0)) throw std::invalid_argument("penalty epsilon must be positive");
    if (!(ts.grid == es.grid) || !(f0.grid == es.grid)) throw std::invalid_argument("grid mismatch");
    const Grid& g = es.grid;
    const RVec lam_s = es.eigenvalues.array().pow(s);

    ControlSolution sol;
    sol.T = T;
    sol.penalty = epsilon;
    gauss_legendre(Q, 0.0, T, sol.nodes, sol.weights);
    sol.f0_tail_mass = es.tail_mass(f0);

    Eigen::MatrixXd M = restricted_mass(es, ts);
    Eigen::MatrixXd G = gramian_matrix(lam_s, M, T, sol.nodes, sol.weights);
    Eigen::MatrixXd A = G + epsilon * Eigen::MatrixXd::Identity(G.rows(), G.cols());

    CVec c0 = es.coefficients(f0);
    CVec b = -((-T * lam_s.array()).exp().cast<cplx>() * c0.array()).matrix();
    auto res = conjugate_gradient(A, b, cg);
    sol.cg_iterations = res.iterations;
    sol.phi_T = es.synthesize(res.x);

    // forward Duhamel simulation in physical space on the same nodes
    const CVec mask = ts.indicator.cast<cplx>();
    SampledFunction fT = semigroup_apply(es, s, T, f0);
    double cost2 = 0.0;
    cplx pairing = 0.0;
    for (std::size_t q = 0; q < sol.nodes.size(); ++q) {
        double tau = T - sol.nodes[q];
        auto phi_q = semigroup_apply(es, s, tau, sol.phi_T);
        SampledFunction h(g, (mask.array() * phi_q.values.array()).matrix());
        fT.values += sol.weights[q] * semigroup_apply(es, s, tau, h).values;
        cost2 += sol.weights[q] * std::pow(norm(h), 2);
        // h is already masked, so <h, 1_omega phi> = <h, phi>
        pairing += sol.weights[q] * inner(h, phi_q);
        sol.control.push_back(std::move(h));
    }
    sol.terminal = fT;
    sol.cost = std::sqrt(cost2);
    const double nf0 = norm(f0);
    sol.terminal_residual = nf0 > 0.0 ? norm(fT) / nf0 : 0.0;
    sol.penalization_bound = nf0 > 0.0 ? std::sqrt(epsilon) * norm(sol.phi_T) / nf0 : 0.0;

    auto phi0 = semigroup_apply(es, s, T, sol.phi_T);
    cplx lhs = inner(fT, sol.phi_T) - inner(f0, phi0);
    sol.duality_lhs = lhs.real();
    sol.duality_rhs = pairing.real();
    double scale = std::abs(inner(fT, sol.phi_T)) + std::abs(inner(f0, phi0)) + std::abs(pairing);
    sol.duality_error = scale > 0.0 ? std::abs(lhs - pairing) / scale : 0.0;
    return sol;
}

double spectral_growth_order(const EigenSystem& es, const ThickSet& ts) {
    std::vector<int> orders;
    for (int N = 2; N <= es.count(); ++N) orders.push_back(N);
    auto curve = spectral_constant_estimate(es, Family::eigenmode, ts, orders);
    std::vector<double> x, y;
    for (std::size_t i = 0; i < orders.size(); ++i) {
        double c = curve.constants[i];
        if (!std::isfinite(c) || std::log(c) < 0.05) continue;
        x.push_back(std::log(double(orders[i])));
        y.push_back(std::log(std::log(c)));
    }
    if (x.size() < 3) throw std::runtime_error("spectral growth order: too few usable constants");
    return fit_line(x, y).slope;
}

double dissipation_order(const EigenSystem& es, double s) {
    std::vector<double> x, y;
    for (int j = 1; j < es.count(); ++j) {
        x.push_back(std::log(double(j)));
        y.push_back(s * std::log(es.eigenvalues[j]));
    }
    return fit_line(x, y).slope;
}

LrResult lebeau_robbiano_solve(const EigenSystem& es, double s, const ThickSet& ts, double T,
                               const SampledFunction& f0, const LrOptions& opt) {
    if (!(T > 0.0)) throw std::invalid_argument("horizon T must be positive");
    LrResult out;
    out.a = spectral_growth_order(es, ts);
    out.b = dissipation_order(es, s);
    out.hypotheses_hold = out.a < out.b;
    out.theta = opt.theta > 0.0 ? opt.theta : 2.0 / (out.a + out.b);

    const int r = es.count();
    const RVec lam_s = es.eigenvalues.array().pow(s);
    const Eigen::MatrixXd M = restricted_mass(es, ts);
    auto damp = [&](double tau) { return RVec((-tau * lam_s.array()).exp()); };

    CVec c = es.coefficients(f0);
    const double n0 = norm(f0);
    double cost2 = 0.0;
    bool ratios_ok = true;
    double t_end = 0.0;
    for (int j = 0;; ++j) {
        LrStage st;
        st.j = j;
        st.modes = std::min(r, int(std::ceil(opt.n0 * std::pow(2.0, j * out.theta) - 1e-12)));
        st.t0 = T * (1.0 - std::pow(2.0, -j));
        const bool last = st.modes == r;
        st.t1 = last ? T : T * (1.0 - std::pow(2.0, -j - 1));
        const double len = st.t1 - st.t0;
        const double ctrl = last ? len : 0.5 * len;
        st.before = c.norm();

        std::vector<double> nodes, weights;
        gauss_legendre(opt.Q, 0.0, ctrl, nodes, weights);
        const int n = st.modes;
        Eigen::MatrixXd G = gramian_matrix(lam_s.head(n), M.topLeftCorner(n, n), ctrl, nodes, weights);
        G += opt.epsilon * Eigen::MatrixXd::Identity(n, n);
        CVec b = -(damp(ctrl).head(n).cast<cplx>().array() * c.head(n).array()).matrix();
        auto res = conjugate_gradient(G, b, opt.cg);
        st.cg_iterations = res.iterations;
        CVec phi = CVec::Zero(r);
        phi.head(n) = res.x;

        // the control acts on every mode, not only the steered ones
        CVec next = damp(ctrl).cast<cplx>().cwiseProduct(c);
        for (std::size_t q = 0; q < nodes.size(); ++q) {
            RVec d = damp(ctrl - nodes[q]);
            CVec phq = d.cast<cplx>().cwiseProduct(phi);
            CVec hq = M * phq;  // coefficients of 1_omega phi(t), projected
            next += weights[q] * d.cast<cplx>().cwiseProduct(hq);
            cost2 += weights[q] * phq.dot(hq).real();
            out.control_times.push_back(st.t0 + nodes[q]);
            auto h = es.synthesize(phq);
            h.values.array() *= ts.indicator.array().cast<cplx>();
            out.control.push_back(std::move(h));
        }
        c = damp(len - ctrl).cast<cplx>().cwiseProduct(next);
        st.after = c.norm();
        st.ratio = st.before > 0.0 ? st.after / st.before : 0.0;
        ratios_ok = ratios_ok && st.ratio < 1.0;
        out.stages.push_back(st);
        t_end = st.t1;
        if (last) break;
    }
    c = damp(T - t_end).cast<cplx>().cwiseProduct(c);
    out.final_residual = n0 > 0.0 ? c.norm() / n0 : 0.0;
    out.cost = std::sqrt(cost2);
    out.converged = out.hypotheses_hold && ratios_ok;
    if (!out.hypotheses_hold)
        out.diagnostic = "spectral growth a=" + std::to_string(out.a) + " is not below dissipation order b=" +
                         std::to_string(out.b);
    else if (!ratios_ok)
        out.diagnostic = "a stage failed to reduce the residual";
    else
        out.diagnostic = "ok";
    return out;
}

CostSweep cost_sweep(const EigenSystem& es, double s, const ThickSet& ts, const std::vector<double>& T_list,
                     double epsilon, const SampledFunction& f0, int Q) {
    if (T_list.size() < 4) throw std::invalid_argument("cost sweep needs at least four horizons");
    for (double T : T_list)
        if (T < 0.03 || T > 0.5) throw std::invalid_argument("cost sweep horizons must lie in [0.03, 0.5]");
    OperatorSpec spec = es.spec;
    spec.s = s;
    auto e = derived_exponents(spec);
    if (!e.beta_defined()) throw std::invalid_argument("beta undefined for 2sm <= 1");

    CostSweep sw;
    sw.beta = e.beta;
    sw.points.resize(T_list.size());
    parallel_for(T_list.size(), [&](std::size_t i) {
        auto sol = hum_solve(es, s, ts, T_list[i], f0, epsilon, Q);
        sw.points[i] = {T_list[i], sol.cost, sol.terminal_residual, sol.cg_iterations};
    });
    std::sort(sw.points.begin(), sw.points.end(), [](auto& a, auto& b) { return a.T < b.T; });

    auto fit_at = [&](double beta) {
        std::vector<double> x, y;
        for (auto& p : sw.points) {
            x.push_back(std::pow(p.T, -beta));
            y.push_back(std::log(p.cost));
        }
        return fit_line(x, y);
    };
    sw.fixed = fit_at(sw.beta);
    auto sse = [&](double beta) { return 1.0 - fit_at(beta).r_squared; };
    auto best = boost::math::tools::brent_find_minima(sse, 0.05, 4.0, 50);
    sw.free_beta = best.first;
    sw.free = fit_at(sw.free_beta);
    sw.nonincreasing = true;
    for (std::size_t i = 1; i < sw.points.size(); ++i)
        if (sw.points[i].cost > sw.points[i - 1].cost * (1.0 + 1e-6)) sw.nonincreasing = false;
    return sw;
}

}  // namespace shubin
