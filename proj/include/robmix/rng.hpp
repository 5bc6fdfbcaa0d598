#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace robmix {

/// Mixes a seed with a stream id so that sub-streams (per cluster, per
/// restart, per grid cell) are decorrelated but fully reproducible.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seeded generator with explicit distribution transforms. Distributions
/// are implemented here (not via std::*_distribution) so that a given seed
/// produces the same stream regardless of standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(derive_seed(seed, 0)) {}

    double uniform01() {
        // 53-bit mantissa in [0, 1)
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // Box-Muller; u1 in (0, 1]
        const double u1 = 1.0 - uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Chi-squared with integer degrees of freedom (sum of df squared normals).
    double chi_squared(int df) {
        double s = 0.0;
        for (int i = 0; i < df; ++i) {
            const double z = normal();
            s += z * z;
        }
        return s;
    }

    double exponential() { return -std::log(1.0 - uniform01()); }

    /// Uniform integer in [0, n).
    std::uint64_t index(std::uint64_t n) {
        // rejection to avoid modulo bias
        const std::uint64_t lim = std::mt19937_64::max() - std::mt19937_64::max() % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= lim);
        return x % n;
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace robmix
