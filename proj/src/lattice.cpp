#include "shubin/lattice.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <tuple>

#include <fftw3.h>

#include "fft.hpp"

namespace shubin {

namespace detail {

namespace {

struct PlanCache {
    std::mutex mu;
    std::map<std::tuple<int, int, int>, fftw_plan> plans;

    fftw_plan get(int rank, int N, int sign) {
        std::lock_guard lock(mu);
        auto key = std::make_tuple(rank, N, sign);
        if (auto it = plans.find(key); it != plans.end()) return it->second;
        // planning with ESTIMATE never touches the arrays, but it wants real ones
        std::size_t len = rank == 1 ? std::size_t(N) : std::size_t(N) * N;
        auto* a = fftw_alloc_complex(len);
        auto* b = fftw_alloc_complex(len);
        unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fftw_plan p = rank == 1 ? fftw_plan_dft_1d(N, a, b, sign, flags)
                                : fftw_plan_dft_2d(N, N, a, b, sign, flags);
        fftw_free(a);
        fftw_free(b);
        if (!p) throw std::runtime_error("fftw planning failed");
        plans.emplace(key, p);
        return p;
    }
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

}  // namespace

void dft(const std::complex<double>* in, std::complex<double>* out, int rank, int N, int sign) {
    fftw_plan p = cache().get(rank, N, sign);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
}

}  // namespace detail

double Grid::dual_step() const { return std::numbers::pi / L; }

double Grid::cell() const { return n == 1 ? h() : h() * h(); }

double Grid::dual_cell() const {
    double d = dual_step();
    return n == 1 ? d : d * d;
}

std::array<double, 2> Grid::point(std::size_t i) const {
    if (n == 1) return {node(int(i)), 0.0};
    return {node(int(i / N)), node(int(i % N))};
}

std::array<double, 2> Grid::dual_point(std::size_t i) const {
    if (n == 1) return {dual(int(i)), 0.0};
    return {dual(int(i / N)), dual(int(i % N))};
}

double Grid::radius(std::size_t i) const {
    auto p = point(i);
    return std::hypot(p[0], p[1]);
}

double Grid::dual_radius(std::size_t i) const {
    auto p = dual_point(i);
    return std::hypot(p[0], p[1]);
}

RVec Grid::radii() const {
    RVec r(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i) r[Eigen::Index(i)] = radius(i);
    return r;
}

RVec Grid::dual_radii() const {
    RVec r(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i) r[Eigen::Index(i)] = dual_radius(i);
    return r;
}

Grid make_grid(int n, int N, double L) {
    if (n != 1 && n != 2) throw std::invalid_argument("grid dimension must be 1 or 2");
    if (N < 16 || (N & (N - 1)) != 0) throw std::invalid_argument("N must be a power of two >= 16");
    if (!(L > 0.0) || !std::isfinite(L)) throw std::invalid_argument("L must be positive");
    return Grid{n, N, L};
}

SampledFunction::SampledFunction(const Grid& g, CVec v) : grid(g), values(std::move(v)) {
    if (std::size_t(values.size()) != g.size()) throw std::invalid_argument("sample length does not match grid");
}

double SampledFunction::norm() const { return shubin::norm(*this); }

cplx inner(const SampledFunction& u, const SampledFunction& v) {
    if (!(u.grid == v.grid)) throw std::invalid_argument("grid mismatch");
    return u.grid.cell() * v.values.dot(u.values);
}

double norm(const SampledFunction& u) { return std::sqrt(u.grid.cell()) * u.values.norm(); }

double dual_norm(const SampledFunction& uhat) { return std::sqrt(uhat.grid.dual_cell()) * uhat.values.norm(); }

namespace {

// (-1)^p for p = q - N/2
inline double alt(int q, int N) { return ((q - N / 2) & 1) ? -1.0 : 1.0; }

}  // namespace

// Dual sample at centred index q sits at FFT slot (q - N/2) mod N = (q + N/2) mod N.
SampledFunction forward_transform(const SampledFunction& u) {
    const Grid& g = u.grid;
    const int N = g.N;
    CVec raw(u.values.size());
    detail::dft(u.values.data(), raw.data(), g.n, N, FFTW_FORWARD);
    SampledFunction out(g);
    const double w = g.cell();
    if (g.n == 1) {
        for (int q = 0; q < N; ++q) out.values[q] = w * alt(q, N) * raw[(q + N / 2) % N];
    } else {
        for (int a = 0; a < N; ++a)
            for (int b = 0; b < N; ++b)
                out.values[Eigen::Index(a) * N + b] =
                    w * alt(a, N) * alt(b, N) * raw[Eigen::Index((a + N / 2) % N) * N + (b + N / 2) % N];
    }
    return out;
}

SampledFunction inverse_transform(const SampledFunction& uhat) {
    const Grid& g = uhat.grid;
    const int N = g.N;
    CVec shuffled(uhat.values.size());
    if (g.n == 1) {
        for (int q = 0; q < N; ++q) shuffled[(q + N / 2) % N] = alt(q, N) * uhat.values[q];
    } else {
        for (int a = 0; a < N; ++a)
            for (int b = 0; b < N; ++b)
                shuffled[Eigen::Index((a + N / 2) % N) * N + (b + N / 2) % N] =
                    alt(a, N) * alt(b, N) * uhat.values[Eigen::Index(a) * N + b];
    }
    SampledFunction out(g);
    detail::dft(shuffled.data(), out.values.data(), g.n, N, FFTW_BACKWARD);
    // 1/(2L)^n
    out.values /= std::pow(2.0 * g.L, g.n);
    return out;
}

SampledFunction sample(const std::function<cplx(double)>& f, const Grid& g) {
    if (g.n != 1) throw std::invalid_argument("one-variable sampler on a 2D grid");
    return sample([&f](double x, double) { return f(x); }, g);
}

SampledFunction sample(const std::function<cplx(double, double)>& f, const Grid& g) {
    SampledFunction out(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto p = g.point(i);
        cplx v = f(p[0], p[1]);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw std::domain_error("non-finite sample at node " + std::to_string(i));
        out.values[Eigen::Index(i)] = v;
    }
    return out;
}

SampledFunction fourier_multiply(const SampledFunction& u, const CVec& multiplier) {
    auto uh = forward_transform(u);
    uh.values.array() *= multiplier.array();
    return inverse_transform(uh);
}

SampledFunction spectral_derivative(const SampledFunction& u, MultiIndex order) {
    const Grid& g = u.grid;
    if (order[0] < 0 || order[1] < 0) throw std::invalid_argument("negative derivative order");
    if (g.n == 1 && order[1] != 0) throw std::invalid_argument("second axis order on a 1D grid");
    if (order[0] == 0 && order[1] == 0) return u;
    auto factor = [&](int q, int k) -> cplx {
        if (k == 0) return 1.0;
        if ((k & 1) && q == 0) return 0.0;
        cplx r = 1.0, z(0.0, g.dual(q));
        for (int i = 0; i < k; ++i) r *= z;
        return r;
    };
    CVec mult(Eigen::Index(g.size()));
    const int N = g.N;
    if (g.n == 1) {
        for (int q = 0; q < N; ++q) mult[q] = factor(q, order[0]);
    } else {
        for (int a = 0; a < N; ++a)
            for (int b = 0; b < N; ++b) mult[Eigen::Index(a) * N + b] = factor(a, order[0]) * factor(b, order[1]);
    }
    return fourier_multiply(u, mult);
}

SampledFunction spectral_derivative(const SampledFunction& u, int order) { return spectral_derivative(u, {order, 0}); }

}  // namespace shubin
