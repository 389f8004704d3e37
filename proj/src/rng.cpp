#include "shubin/rng.hpp"

#include <cmath>
#include <numbers>

namespace shubin {

namespace {

std::seed_seq make_seq(std::uint64_t seed, std::uint64_t stream) {
    return std::seed_seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream),
                         std::uint32_t(stream >> 32)};
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
    auto seq = make_seq(seed, stream);
    engine_.seed(seq);
}

double Rng::uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

SampledFunction noise(const Grid& g, std::uint64_t seed, std::uint64_t stream) {
    Rng rng(seed, stream);
    SampledFunction u(g);
    for (auto& v : u.values) {
        double re = rng.normal();
        v = cplx(re, rng.normal());
    }
    u.values /= norm(u);
    return u;
}

SampledFunction real_noise(const Grid& g, std::uint64_t seed, std::uint64_t stream) {
    Rng rng(seed, stream);
    SampledFunction u(g);
    for (auto& v : u.values) v = rng.normal();
    u.values /= norm(u);
    return u;
}

}  // namespace shubin
