#pragma once

#include <cstdint>
#include <random>

#include "shubin/lattice.hpp"

namespace shubin {

// Deterministic stream keyed by (seed, stream). The engine and seed_seq are
// fully specified by the standard; the conversions below avoid the
// implementation-defined std distributions so sequences match across platforms.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream);

    double uniform();  // [0, 1)
    double normal();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// i.i.d. complex Gaussian nodal values, normalized to unit discrete L2 norm
SampledFunction noise(const Grid& g, std::uint64_t seed, std::uint64_t stream);
// real Gaussian nodal values, normalized
SampledFunction real_noise(const Grid& g, std::uint64_t seed, std::uint64_t stream);

}  // namespace shubin
