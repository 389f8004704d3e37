#pragma once

#include <optional>

#include "shubin/lattice.hpp"

namespace shubin {

struct OperatorSpec {
    int k = 1;
    int m = 1;
    double s = 1.0;
    int n = 1;

    void validate() const;
    bool operator==(const OperatorSpec&) const = default;
};

struct DerivedExponents {
    double nu = 0.0;
    double mu = 0.0;
    double s_cr = 0.0;
    // NaN when 2sm <= 1 (no observability exponent available)
    double beta = 0.0;
    double weyl = 0.0;
    double prefactor_power = 0.0;
    double spatial_agmon = 0.0;
    double frequency_agmon = 0.0;
    double eigen_scaling = 0.0;

    bool beta_defined() const;
};

DerivedExponents derived_exponents(const OperatorSpec& spec);

inline constexpr std::size_t dense_limit = 4096;

// H = (-Delta)^m + |x|^{2k} on a periodic lattice.
class DiscreteOperator {
public:
    DiscreteOperator(const OperatorSpec& spec, const Grid& grid, bool build_dense);

    const OperatorSpec& spec() const { return spec_; }
    const Grid& grid() const { return grid_; }
    const RVec& potential() const { return potential_; }
    // |xi|^{2m} on the centred dual lattice
    const RVec& kinetic_multiplier() const { return kinetic_; }

    bool has_dense() const { return dense_.has_value(); }
    const Eigen::MatrixXd& matrix() const;

    SampledFunction apply(const SampledFunction& u) const;
    SampledFunction apply_kinetic(const SampledFunction& u) const;

private:
    OperatorSpec spec_;
    Grid grid_;
    RVec potential_;
    RVec kinetic_;
    std::optional<Eigen::MatrixXd> dense_;
};

DiscreteOperator assemble(const OperatorSpec& spec, const Grid& grid, bool dense = true);
SampledFunction apply(const DiscreteOperator& op, const SampledFunction& u);

}  // namespace shubin
