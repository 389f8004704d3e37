#pragma once

#include <string>
#include <vector>

#include "shubin/spectral.hpp"
#include "shubin/stats.hpp"

namespace shubin {

enum class FitMode {
    fixed_exponent,  // log|u| = a - c r^p with p given
    double_log,      // log(-log(|u|/max|u|)) = log c + p log r
    envelope,        // log env(r) = a - c r^p, p by 1-D search; env(r) = max_{|x|>=r} |u|
};

struct FitOptions {
    FitMode mode = FitMode::double_log;
    double p = 2.0;             // fixed_exponent only
    double floor = 1e-13;       // relative noise floor
    double ceiling = 1e-3;      // envelope only: samples above ceiling*max are pre-asymptotic
    bool log_prefactor = false; // envelope only: also fit b in r^b e^{-c r^p}
    double outer_fraction = 0.15;
    int min_samples = 30;
};

struct DecayFit {
    double exponent = 0.0;
    double rate = 0.0;
    double offset = 0.0;
    double r_squared = 0.0;
    double r_min = 0.0;
    double r_max = 0.0;
    int samples = 0;
};

// generic profile fit: magnitudes a_i at radii r_i, edge = largest radius of the box
DecayFit profile_fit(const std::vector<double>& r, const std::vector<double>& a, double edge, const FitOptions& opt);

DecayFit radial_decay_fit(const SampledFunction& u, const FitOptions& opt = {});
// same fit on |u^(xi)| against |xi|
DecayFit frequency_decay_fit(const SampledFunction& u, const FitOptions& opt = {});

struct AgmonFit {
    int j = 0;
    DecayFit spatial;
    DecayFit frequency;
};

std::vector<AgmonFit> agmon_exponent_check(const EigenSystem& es, const std::vector<int>& js,
                                           const FitOptions& opt = {FitMode::envelope});

enum class Side { space, frequency };

struct WeightedNorm {
    double value = 0.0;      // +inf on overflow
    double log_value = 0.0;  // log of the norm, finite even when value overflows
    bool overflow = false;
    bool noise_dominated = false;  // samples below the 1e-13 floor carry more than 1e-6 of the weighted mass
};

// || e^{rate <x>^exponent} u || (space) or || e^{rate <xi>^exponent} u^ || / (2pi)^{n/2}
WeightedNorm exp_weighted_norm(const SampledFunction& u, double rate, double exponent, Side side);
// the Agmon weight e^{t <x>^{sigma(1+k/m)}} or e^{t <xi>^{sigma(1+m/k)}}
WeightedNorm weighted_norm(const SampledFunction& u, double sigma, double t, Side side, const OperatorSpec& spec);

LineFit agmon_scaling_fit(const EigenSystem& es, double sigma, double t, int j_lo = 5, int j_hi = 25);

LineFit weyl_fit(const EigenSystem& es, int j_lo, int j_hi);

struct WeightReport {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double lambda3 = 0.0;
    double t = 0.0;
    double nu = 0.0;
    double mu = 0.0;
    double bound = 0.0;  // 10 ||g|| t^{-prefactor_power}
    bool space_overflow = false;
    bool frequency_overflow = false;
};

WeightReport smoothing_probe(const EigenSystem& es, double s, double t, const SampledFunction& g);

struct TailFit {
    double s = 0.0;
    double t = 0.0;
    double target = 0.0;  // min(2sm, 1+m/k) = 1/mu
    DecayFit fit;
};

// Frequency-tail exponent of e^{-tH^s} applied to noise. realizations > 0 averages
// |u_t^|^2 over that many seeded draws; realizations == 0 uses the exact expectation.
TailFit frequency_tail_fit(const EigenSystem& es, double s, double t, std::uint64_t seed, int realizations,
                           const FitOptions& opt = {FitMode::envelope});

using Table = std::vector<std::vector<double>>;

Table seminorm_table(const SampledFunction& u, int alpha_max, int beta_max);

struct SeminormConstants {
    double c_space = 0.0;
    double c_freq = 0.0;
    double c = 0.0;
};

SeminormConstants seminorm_constants(double nu, double mu, int n);
Table seminorm_bounds_from_weights(const WeightReport& w, int alpha_max, int beta_max, int n = 1);

struct CoefficientFit {
    LineFit line;  // log|c_j| against j^{1/(a n)}; slope estimates -epsilon
    int usable = 0;
};

CoefficientFit coefficient_decay_fit(const RVec& magnitudes, double a, int n, double floor = 1e-13);
CoefficientFit coefficient_decay_fit(const EigenSystem& es, const SampledFunction& g, double a);

struct FunctionalSample {
    double t = 0.0;
    double F = 0.0;
    double log_F = 0.0;
    double outer_share = 0.0;  // share of weighted mass beyond 85% of the box
    bool overflow = false;
};

struct FunctionalTrace {
    std::vector<FunctionalSample> samples;
    double norm_g_squared = 0.0;
    double sup_ratio = 0.0;  // sup_t F(t) / F(0)
    bool blowup = false;
};

// F(t) = || e^{c1 t <x>^{sigma(1+k/m)}} e^{-t H^s} g ||^2
FunctionalTrace weighted_functional_evolution(const EigenSystem& es, const SampledFunction& g, double c1,
                                              double sigma, const std::vector<double>& t_grid, double s = 1.0);

struct PrefactorProbe {
    std::vector<double> t;
    std::vector<double> space_norm;      // operator norm of e^{c1 t<x>^{1/nu}} e^{-tH^s}
    std::vector<double> frequency_norm;  // operator norm of e^{c1 t<D>^{1/mu}} e^{-tH^s}
    LineFit fit;                         // log(space + frequency) against log t
    double empirical_exponent = 0.0;     // -slope
    double predicted_exponent = 0.0;     // n(k+m)/(2skm)
};

PrefactorProbe prefactor_probe(const EigenSystem& es, double s, double c1, const std::vector<double>& t_grid);

}  // namespace shubin
