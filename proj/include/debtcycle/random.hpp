#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace debtcycle {

/// SplitMix64 (Steele, Lea & Flood 2014). Output depends only on the 64-bit state, so streams are
/// bit-reproducible across platforms; `mix` doubles as the seed-derivation hash.
class SplitMix64 {
public:
    static constexpr const char* kAlgorithm = "splitmix64";

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    [[nodiscard]] static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    using result_type = std::uint64_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()() { return next(); }

private:
    std::uint64_t state_;
};

/// Sub-seed for stream `index` of a run seeded with `seed`: mix(seed XOR mix(index + 1)).
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return SplitMix64::mix(seed ^ SplitMix64::mix(index + 1));
}

/// Uniform on the open interval (0, 1) from the top 53 bits.
[[nodiscard]] inline double uniform_open(SplitMix64& rng) {
    return (static_cast<double>(rng.next() >> 11) + 0.5) * 0x1.0p-53;
}

/// Box-Muller; consumes two uniforms per draw.
[[nodiscard]] inline double standard_normal(SplitMix64& rng) {
    const double u1 = uniform_open(rng);
    const double u2 = uniform_open(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Inverse Gaussian with mean `mu` and shape `lambda` via the Michael-Schucany-Haas transformation.
[[nodiscard]] inline double inverse_gaussian(SplitMix64& rng, double mu, double lambda) {
    const double nu = standard_normal(rng);
    const double y = nu * nu;
    const double x = mu + mu * mu * y / (2.0 * lambda) -
                     mu / (2.0 * lambda) * std::sqrt(4.0 * mu * lambda * y + mu * mu * y * y);
    const double u = uniform_open(rng);
    return u <= mu / (mu + x) ? x : mu * mu / x;
}

/// Frailty draw with mean 1 and variance theta (theta = 0 gives 1 exactly).
[[nodiscard]] inline double frailty_draw(SplitMix64& rng, double theta) {
    if (theta <= 0.0) return 1.0;
    return inverse_gaussian(rng, 1.0, 1.0 / theta);
}

}  // namespace debtcycle
