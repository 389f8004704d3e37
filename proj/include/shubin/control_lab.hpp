#pragma once

#include <string>
#include <vector>

#include "shubin/spectral.hpp"
#include "shubin/stats.hpp"

namespace shubin {

struct ThickSet {
    enum class Kind { periodic, density, arbitrary };

    Grid grid;
    RVec indicator;
    Kind kind = Kind::arbitrary;
    double gamma = 0.0;
    double scale = 0.0;  // periodic
    double delta = 0.0;  // density
    double R = 0.0;
    double c_floor = 0.0;
    double measured_gamma = 0.0;

    double measure() const;
};

std::string kind_name(ThickSet::Kind k);

ThickSet make_thick_periodic(const Grid& grid, double gamma, double scale);
ThickSet make_thick_density(const Grid& grid, double gamma, double delta, double R, double c_floor);
ThickSet make_arbitrary(const Grid& grid, RVec indicator);

// minimum of |omega ∩ (x + [0,scale]^n)| / scale^n over windows lying inside the box
double thickness_check(const ThickSet& ts, double scale);
// minimum of |omega ∩ B(x, rho(x))| / |B(x, rho(x))| over `samples` evenly spread centres
double density_thickness_check(const ThickSet& ts, int samples = 200);

enum class Family { frequency, eigenmode };

struct SpectralConstantCurve {
    Family family = Family::eigenmode;
    std::vector<int> orders;
    std::vector<double> sigma_min;
    std::vector<double> constants;  // +inf where sigma_min < 1e-14
    // frequency: log C_N against N; eigenmode: log C_N against N log N (finite, N >= 2)
    LineFit growth;
    int finite = 0;
};

// frequency orders count dual-lattice steps: the band is |xi| <= N pi / L
SpectralConstantCurve spectral_constant_estimate(const EigenSystem& es, Family family, const ThickSet& ts,
                                                 const std::vector<int>& orders);

struct DissipationResult {
    double measured = 0.0;
    double bound = 0.0;  // eigenmode family only; NaN otherwise
};

// eigenmode: ||(1 - p_N) e^{-tH^s} g|| with p_N onto psi_0..psi_N, bound e^{-t lambda_{N+1}^s} ||g||
// frequency: ||(1 - pi_K) e^{-tH^s} g|| with K = N pi / L
DissipationResult dissipation_check(const EigenSystem& es, double s, Family family, int N, double t,
                                    const SampledFunction& g);

struct FrequencyDissipationFit {
    std::vector<int> orders;
    std::vector<double> measured;
    LineFit line;  // log(measured/||g||) against K^{1/mu}; slope = -c t
};

FrequencyDissipationFit frequency_dissipation_fit(const EigenSystem& es, double s, double t, const SampledFunction& g,
                                                  const std::vector<int>& orders);

struct ControlSolution {
    double T = 0.0;
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<SampledFunction> control;  // h(t_q), vanishes off omega
    SampledFunction phi_T;
    SampledFunction terminal;
    double terminal_residual = 0.0;  // ||f(T)|| / ||f0||
    double cost = 0.0;
    double penalty = 0.0;
    int cg_iterations = 0;
    double f0_tail_mass = 0.0;
    double duality_lhs = 0.0;
    double duality_rhs = 0.0;
    double duality_error = 0.0;       // relative
    double penalization_bound = 0.0;  // sqrt(eps) ||phi_T|| / ||f0||
};

struct CgOptions {
    double tolerance = 1e-14;  // relative residual
    int max_iterations = 20000;
    int plateau = 50;
};

// Gauss-Legendre nodes and weights on [a, b]
void gauss_legendre(int Q, double a, double b, std::vector<double>& nodes, std::vector<double>& weights);

// Lambda_T u = int_0^T e^{-(T-t)H^s} 1_omega e^{-(T-t)H^s} u dt by Q-point quadrature
SampledFunction gramian_apply(const EigenSystem& es, double s, const ThickSet& ts, double T, int Q,
                              const SampledFunction& u);

ControlSolution hum_solve(const EigenSystem& es, double s, const ThickSet& ts, double T, const SampledFunction& f0,
                          double epsilon, int Q = 32, const CgOptions& cg = {});

struct LrStage {
    int j = 0;
    int modes = 0;
    double t0 = 0.0;
    double t1 = 0.0;
    double before = 0.0;
    double after = 0.0;
    double ratio = 0.0;
    int cg_iterations = 0;
};

struct LrOptions {
    double epsilon = 1e-8;
    int Q = 32;
    // theta <= 0 selects 2/(a+b) from the measured exponents
    double theta = 0.0;
    // N_j = ceil(n0 * 2^{j theta}); n0 = resolved count gives a single HUM stage
    double n0 = 1.0;
    CgOptions cg;
};

struct LrResult {
    double a = 0.0;  // spectral growth: log C_N ~ N^a on the eigenmode family
    double b = 0.0;  // dissipation order: lambda_N^s ~ N^b
    double theta = 0.0;
    bool hypotheses_hold = false;
    std::vector<LrStage> stages;
    std::vector<double> control_times;
    std::vector<SampledFunction> control;
    double final_residual = 0.0;
    double cost = 0.0;
    bool converged = false;
    std::string diagnostic;
};

// the measured exponents used by the staging rule
double spectral_growth_order(const EigenSystem& es, const ThickSet& ts);
double dissipation_order(const EigenSystem& es, double s);

// Dyadic stages [T(1-2^-j), T(1-2^-j-1)]: steer the first N_j modes during the first half,
// then evolve freely. The stage that reaches the full resolved span steers over all of [t0, T].
LrResult lebeau_robbiano_solve(const EigenSystem& es, double s, const ThickSet& ts, double T,
                               const SampledFunction& f0, const LrOptions& opt = {});

struct CostPoint {
    double T = 0.0;
    double cost = 0.0;
    double residual = 0.0;
    int cg_iterations = 0;
};

struct CostSweep {
    std::vector<CostPoint> points;
    double beta = 0.0;
    LineFit fixed;         // log cost against T^{-beta}
    double free_beta = 0.0;
    LineFit free;          // same with beta fitted
    bool nonincreasing = false;
};

CostSweep cost_sweep(const EigenSystem& es, double s, const ThickSet& ts, const std::vector<double>& T_list,
                     double epsilon, const SampledFunction& f0, int Q = 32);

}  // namespace shubin
